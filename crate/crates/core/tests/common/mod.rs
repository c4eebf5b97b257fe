//! Independent reimplementations used as test oracles. Shared with the
//! acceptance suite of the std crate.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use uqbridge_core::benchmarks::beam::BeamSpec;
use uqbridge_core::benchmarks::deconv;
use uqbridge_core::benchmarks::genz::{GenzFamily, GenzSpec};
use uqbridge_core::quadrature::gauss_legendre;

/// Mixed absolute/relative closeness.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

pub fn random_points(seed: u64, count: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(lo..hi)).collect())
        .collect()
}

pub fn normal(x: f64, m: f64, s: f64) -> f64 {
    (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
}

pub fn banana_oracle(t: &[f64], a: f64, b: f64, scale: f64) -> f64 {
    let z = [t[0] / a, a * t[1] + a * b * (t[0] * t[0] + a * a)];
    let cov = [[scale, 0.5 * scale], [0.5 * scale, scale]];
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let inv = [[cov[1][1] / det, -cov[0][1] / det], [-cov[1][0] / det, cov[0][0] / det]];
    let d = [z[0], z[1] - 4.0];
    let mut quad = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            quad += d[i] * inv[i][j] * d[j];
        }
    }
    -(2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * quad
}

pub fn donut_oracle(p: &[f64]) -> f64 {
    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
    -(r - 2.6).powi(2) / 0.033
}

pub fn funnel_oracle(p: &[f64]) -> f64 {
    normal(p[0], 0.0, 3.0).ln() + normal(p[1], 0.0, (p[0] / 2.0).exp()).ln()
}

pub fn mixture_oracle(p: &[f64]) -> f64 {
    let comps = [((-1.5, -1.5), 0.8f64), ((1.5, 1.5), 0.8), ((-2.0, 2.0), 0.5)];
    let density: f64 = comps
        .iter()
        .map(|((mx, my), v)| normal(p[0], *mx, v.sqrt()) * normal(p[1], *my, v.sqrt()))
        .sum();
    density.ln()
}

/// The periodic blur as an explicit dense matrix.
pub fn dense_kernel_matrix() -> Vec<Vec<f64>> {
    let n = deconv::SIZE as i64;
    let raw: Vec<f64> = (-6..=6).map(|k: i64| (-(k * k) as f64 / 8.0).exp()).collect();
    let total: f64 = raw.iter().sum();
    let mut a = vec![vec![0.0; n as usize]; n as usize];
    for i in 0..n {
        for k in -6..=6i64 {
            let j = (i - k).rem_euclid(n) as usize;
            a[i as usize][j] += raw[(k + 6) as usize] / total;
        }
    }
    a
}

pub fn deconv_oracle(x: &[f64], prior: &str, delta: f64, a: &[Vec<f64>]) -> f64 {
    let b = deconv::synthetic_data(deconv::DATA_SEED);
    let n = x.len();
    let mut misfit = 0.0;
    for i in 0..n {
        let ax: f64 = (0..n).map(|j| a[i][j] * x[j]).sum();
        misfit += (b[i] - ax).powi(2);
    }
    let diffs: Vec<f64> = (0..n).map(|i| x[i] - x[(i + n - 1) % n]).collect();
    let prior_value: f64 = match prior {
        "Gaussian" => x.iter().map(|v| normal(*v, 0.0, delta.sqrt()).ln()).sum(),
        "GMRF" => diffs.iter().map(|v| normal(*v, 0.0, delta.sqrt()).ln()).sum(),
        "LMRF" => diffs.iter().map(|v| (0.5 / delta * (-v.abs() / delta).exp()).ln()).sum(),
        "CMRF" => diffs.iter().map(|v| (delta / (PI * (delta * delta + v * v))).ln()).sum(),
        _ => unreachable!(),
    };
    -misfit / (2.0 * 0.01 * 0.01) + prior_value
}

/// Central differences with relative step 1e-6.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let h = 1e-6 * x[k].abs().max(1.0);
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[k] += h;
            down[k] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

/// Per-axis integration segments: split at the kink or jump so every
/// segment sees a smooth integrand.
fn genz_segments(s: &GenzSpec, axis: usize) -> Vec<(f64, f64)> {
    let w = s.w;
    match s.family {
        GenzFamily::C0Continuous if w > 0.0 && w < 1.0 => vec![(0.0, w), (w, 1.0)],
        GenzFamily::Discontinuous if axis < 2 => vec![(0.0, w.clamp(0.0, 1.0))],
        _ => vec![(0.0, 1.0)],
    }
}

/// Tensor-product Gauss–Legendre within a point budget.
pub fn tensor_gauss(s: &GenzSpec, budget: f64) -> f64 {
    let per_axis = budget.powf(1.0 / s.n as f64).floor() as usize;
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..s.n)
        .map(|axis| {
            let segs = genz_segments(s, axis);
            let p = (per_axis / segs.len()).min(64);
            let (x, w) = gauss_legendre(p);
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            for (a, b) in segs {
                let half = 0.5 * (b - a);
                for (xi, wi) in x.iter().zip(&w) {
                    nodes.push(a + half * (xi + 1.0));
                    weights.push(half * wi);
                }
            }
            (nodes, weights)
        })
        .collect();
    let total: usize = axes.iter().map(|a| a.0.len()).product();
    assert!(total as f64 <= budget, "{total} points");
    let f = s.integrand();
    let mut idx = vec![0usize; s.n];
    let mut theta = vec![0.0; s.n];
    let mut sum = 0.0;
    for _ in 0..total {
        let mut weight = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            theta[k] = axes[k].0[i];
            weight *= axes[k].1[i];
        }
        sum += weight * f(&theta);
        for k in 0..s.n {
            idx[k] += 1;
            if idx[k] < axes[k].0.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    sum
}

/// Max nodal error of the constant-stiffness beam against the continuum
/// cantilever under uniform load.
pub fn beam_error(nodes: usize) -> f64 {
    let spec = BeamSpec::with_nodes(nodes);
    let u = spec.solve(&vec![1.0; nodes]).unwrap();
    spec.grid()
        .iter()
        .zip(&u)
        .map(|(&x, &ui)| (ui - spec.continuum_uniform(1.0, x)).abs())
        .fold(0.0, f64::max)
}

/// Quarter turn of a row-major square field.
pub fn rotate<T: Copy>(field: &[T], side: usize) -> Vec<T> {
    // new(row, col) = old(col, side − 1 − row)
    let mut out = Vec::with_capacity(field.len());
    for row in 0..side {
        for col in 0..side {
            out.push(field[col * side + (side - 1 - row)]);
        }
    }
    out
}

/// An irregular 8×8 stiffness field.
pub fn stiffness_field() -> Vec<f64> {
    (0..64).map(|k| 0.5 + ((k * 37) % 11) as f64 / 7.0).collect()
}
