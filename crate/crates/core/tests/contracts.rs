//! Every benchmark honors the sizes and capabilities it declares.

use proptest::prelude::*;
use uqbridge_core::benchmarks::{benchmark, BENCHMARK_NAMES};
use uqbridge_core::{Config, ParameterList};

fn support(name: &str) -> (f64, f64) {
    match name {
        "genz" => (0.0, 1.0),
        "beam-forward" | "beam-posterior" => (0.8, 1.2),
        "membrane-forward" | "membrane-posterior" => (0.5, 2.0),
        "deconv-forward" | "deconv-posterior" => (-1.0, 1.0),
        _ => (-3.0, 3.0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outputs_match_declared_sizes(which in 0..BENCHMARK_NAMES.len(), unit in prop::collection::vec(0.0f64..1.0, 128)) {
        let name = BENCHMARK_NAMES[which];
        let model = benchmark(name).unwrap();
        let config = Config::new();
        let sizes = model.input_sizes(&config).unwrap();
        let (lo, hi) = support(name);
        let input = ParameterList::new(
            sizes.iter().map(|&n| (0..n).map(|i| lo + (hi - lo) * unit[i % unit.len()]).collect()).collect(),
        );
        let out = model.evaluate(&input, &config).unwrap();
        prop_assert_eq!(out.sizes(), model.output_sizes(&config).unwrap());
        prop_assert!(out.is_finite());

        let caps = model.capabilities();
        prop_assert!(caps.evaluate);
        let out_sizes = model.output_sizes(&config).unwrap();
        if caps.gradient {
            let sens = vec![1.0; out_sizes[0]];
            let g = model.gradient(0, 0, &input, &sens, &config).unwrap();
            prop_assert_eq!(g.len(), sizes[0]);
        }
        if caps.apply_jacobian {
            let v = vec![0.5; sizes[0]];
            let jv = model.apply_jacobian(0, 0, &input, &v, &config).unwrap();
            prop_assert_eq!(jv.len(), out_sizes[0]);
        }
        if caps.apply_hessian {
            let sens = vec![1.0; out_sizes[0]];
            let v = vec![0.5; sizes[0]];
            let hv = model.apply_hessian(0, 0, 0, &input, &sens, &v, &config).unwrap();
            prop_assert_eq!(hv.len(), sizes[0]);
        }
    }
}
