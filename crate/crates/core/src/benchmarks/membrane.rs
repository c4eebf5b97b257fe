//! Elastic membrane on the unit square.
//!
//! `−∇·(a∇u) = f` with `u = 0` on the boundary and `a` piecewise constant on
//! an 8×8 subdivision. Discretized with cell-centered finite volumes (harmonic
//! face coefficients) on a uniform grid that refines each coarse cell into
//! `refinement × refinement` cells; the deflection is read off at an interior
//! grid of evaluation points by bilinear interpolation of the cell values.
//!
//! Fields are stored row-major with `y` as the slow index: entry `row·8 + col`
//! is the coarse cell covering `x ∈ [col/8, (col+1)/8]`, `y ∈ [row/8, (row+1)/8]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::fixtures;
use crate::linalg::SymmetricBand;
use crate::model::{Model, ModelResult};
use crate::wire::{Capabilities, Config, ErrorPayload, ParameterList};
use crate::NEG_INF_SENTINEL;

pub const COARSE: usize = 8;
pub const EVAL_POINTS: usize = 13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MembraneSpec {
    /// Fine cells per coarse cell along each axis.
    pub refinement: usize,
    pub force: f64,
    /// Evaluation points per axis, placed at `k/(points+1)`.
    pub eval_points: usize,
}

impl Default for MembraneSpec {
    fn default() -> Self {
        Self {
            refinement: 8,
            force: 10.0,
            eval_points: EVAL_POINTS,
        }
    }
}

impl MembraneSpec {
    pub fn cells_per_side(&self) -> usize {
        COARSE * self.refinement
    }

    /// Deflection at every fine cell center, row-major.
    pub fn solve_cells(&self, stiffness: &[f64]) -> ModelResult<Vec<f64>> {
        if stiffness.len() != COARSE * COARSE {
            return Err(ErrorPayload::invalid_input(format!(
                "membrane expects {} stiffness values, got {}",
                COARSE * COARSE,
                stiffness.len()
            )));
        }
        if stiffness.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(ErrorPayload::invalid_input("membrane stiffness must be positive"));
        }
        let m = self.cells_per_side();
        let r = self.refinement;
        let coef = |i: usize, j: usize| stiffness[(j / r) * COARSE + i / r];
        let harmonic = |a: f64, b: f64| 2.0 * a * b / (a + b);
        let mut matrix = SymmetricBand::zeros(m * m, m);
        for j in 0..m {
            for i in 0..m {
                let k = j * m + i;
                let a = coef(i, j);
                let mut diag = 0.0;
                // Face transmissibilities; grid spacing cancels for square cells.
                for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    let ni = i as i64 + di;
                    let nj = j as i64 + dj;
                    if ni < 0 || nj < 0 || ni >= m as i64 || nj >= m as i64 {
                        diag += 2.0 * a;
                        continue;
                    }
                    let (ni, nj) = (ni as usize, nj as usize);
                    let t = harmonic(a, coef(ni, nj));
                    diag += t;
                    let nk = nj * m + ni;
                    if nk > k {
                        matrix.add(nk, k, -t);
                    }
                }
                matrix.add(k, k, diag);
            }
        }
        let h = 1.0 / m as f64;
        let rhs = vec![self.force * h * h; m * m];
        let chol = matrix
            .cholesky()
            .ok_or_else(|| ErrorPayload::internal("membrane system not positive definite"))?;
        Ok(chol.solve(&rhs))
    }

    /// Bilinear interpolation of cell-centered values at `(x, y)`.
    pub fn interpolate(&self, cells: &[f64], x: f64, y: f64) -> f64 {
        let m = self.cells_per_side();
        let locate = |p: f64| {
            let s = p * m as f64 - 0.5;
            let i0 = (libm::floor(s).max(0.0) as usize).min(m - 2);
            (i0, s - i0 as f64)
        };
        let (i0, tx) = locate(x);
        let (j0, ty) = locate(y);
        let at = |i: usize, j: usize| cells[j * m + i];
        (1.0 - ty) * ((1.0 - tx) * at(i0, j0) + tx * at(i0 + 1, j0)) + ty * ((1.0 - tx) * at(i0, j0 + 1) + tx * at(i0 + 1, j0 + 1))
    }

    pub fn eval_coordinate(&self, k: usize) -> f64 {
        (k + 1) as f64 / (self.eval_points + 1) as f64
    }

    /// Deflection on the evaluation grid, row-major with `y` slow.
    pub fn solve(&self, stiffness: &[f64]) -> ModelResult<Vec<f64>> {
        let cells = self.solve_cells(stiffness)?;
        let p = self.eval_points;
        let mut out = Vec::with_capacity(p * p);
        for row in 0..p {
            for col in 0..p {
                out.push(self.interpolate(&cells, self.eval_coordinate(col), self.eval_coordinate(row)));
            }
        }
        Ok(out)
    }
}

/// Stiffness used to generate the stored measurements: a checkerboard of
/// 0.8 and 1.25 over the coarse cells.
pub fn true_stiffness() -> Vec<f64> {
    (0..COARSE * COARSE)
        .map(|k| if (k / COARSE + k % COARSE) % 2 == 0 { 0.8 } else { 1.25 })
        .collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MembraneForward {
    pub spec: MembraneSpec,
}

impl Model for MembraneForward {
    fn name(&self) -> &str {
        "membrane-forward"
    }

    fn input_sizes(&self, _: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![COARSE * COARSE])
    }

    fn output_sizes(&self, _: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![self.spec.eval_points * self.spec.eval_points])
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::EVALUATE
    }

    fn evaluate(&self, input: &ParameterList, _: &Config) -> ModelResult<ParameterList> {
        Ok(ParameterList::single(self.spec.solve(&input[0])?))
    }
}

/// Posterior for the stiffness field given measured deflections, Gaussian
/// noise `σ` and independent log-normal priors `ln θᵢ ~ N(0, σ_pr²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MembranePosterior {
    pub spec: MembraneSpec,
    pub data: Vec<f64>,
    pub noise_sd: f64,
    pub prior_sd: f64,
}

impl Default for MembranePosterior {
    fn default() -> Self {
        Self {
            spec: MembraneSpec::default(),
            data: fixtures::MEMBRANE_OBSERVATIONS.to_vec(),
            noise_sd: 0.05,
            prior_sd: 2.0,
        }
    }
}

impl MembranePosterior {
    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        let s2 = self.prior_sd * self.prior_sd;
        theta
            .iter()
            .map(|&t| {
                let l = libm::log(t);
                -l * l / (2.0 * s2)
            })
            .sum()
    }

    pub fn log_likelihood(&self, theta: &[f64]) -> ModelResult<f64> {
        let z = self.spec.solve(theta)?;
        let sq: f64 = z.iter().zip(&self.data).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(-sq / (2.0 * self.noise_sd * self.noise_sd))
    }

    pub fn log_density(&self, theta: &[f64]) -> ModelResult<f64> {
        if theta.len() != COARSE * COARSE {
            return Err(ErrorPayload::invalid_input("membrane posterior expects 64 values"));
        }
        if theta.iter().any(|t| !(*t > 0.0)) {
            return Ok(NEG_INF_SENTINEL);
        }
        Ok(self.log_likelihood(theta)? + self.log_prior(theta))
    }
}

impl Model for MembranePosterior {
    fn name(&self) -> &str {
        "membrane-posterior"
    }

    fn input_sizes(&self, _: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![COARSE * COARSE])
    }

    fn output_sizes(&self, _: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![1])
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::EVALUATE
    }

    fn evaluate(&self, input: &ParameterList, _: &Config) -> ModelResult<ParameterList> {
        Ok(ParameterList::scalar(self.log_density(&input[0])?))
    }
}
