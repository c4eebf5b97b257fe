//! Regenerates `src/benchmarks/fixtures.rs`.
//!
//! `cargo run -p uqbridge-core --example gen_fixtures > crates/core/src/benchmarks/fixtures.rs`

use uqbridge_core::benchmarks::{beam, deconv, membrane};

fn emit(name: &str, doc: &str, values: &[f64]) {
    println!("/// {doc}");
    println!("pub const {name}: [f64; {}] = [", values.len());
    for v in values {
        println!("    {v:?},");
    }
    println!("];");
}

fn main() {
    println!("//! Stored synthetic data for the inverse benchmarks. Generated by");
    println!("//! `examples/gen_fixtures.rs`; do not edit by hand.");
    println!();
    let beam_spec = beam::BeamSpec::default();
    let posterior = beam::BeamPosteriorSpec::synthetic(
        beam_spec,
        beam::BeamPosteriorSpec::selection_operator(&beam_spec),
        beam::TRUE_STIFFNESS,
    )
    .expect("beam solve");
    emit(
        "BEAM_OBSERVATIONS",
        "Noise-free beam displacement at every third node for region stiffness (1.00, 1.02, 0.98).",
        &posterior.data,
    );
    println!();
    let z = membrane::MembraneSpec::default()
        .solve(&membrane::true_stiffness())
        .expect("membrane solve");
    emit(
        "MEMBRANE_OBSERVATIONS",
        "Noise-free membrane deflection on the 13×13 grid for the 0.8/1.25 checkerboard stiffness.",
        &z,
    );
    println!();
    emit(
        "DECONV_DATA",
        "Blurred piecewise-constant signal plus N(0, 0.01²) noise from seed 2024.",
        &deconv::synthetic_data(deconv::DATA_SEED),
    );
}
