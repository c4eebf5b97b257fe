//! Euler–Bernoulli cantilever with variable stiffness.
//!
//! Solves `(r E(x) u'')'' = f` on `[0, L]` with `u(0) = u'(0) = 0` and a free
//! end (`u''(L) = u'''(L) = 0`) on a uniform grid of `N` nodes. The bending
//! moment `M = rE u''` is discretized at the nodes with the three-point second
//! difference, and the outer second derivative again with the three-point
//! stencil, giving the usual five-point fourth-order operator. Boundary
//! conditions enter through ghost nodes: `u₋₁ = u₁` at the clamp,
//! `M_{N−1} = 0` and `M_N = M_{N−2}` at the free end.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use super::fixtures;
use crate::config::ConfigExt;
use crate::linalg::DenseLu;
use crate::model::{Model, ModelResult};
use crate::wire::{Capabilities, Config, ErrorPayload, ParameterList};
use crate::NEG_INF_SENTINEL;

/// Number of piecewise-constant stiffness regions.
pub const REGIONS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSpec {
    pub nodes: usize,
    pub radius: f64,
    pub length: f64,
    /// Constant distributed load `f`.
    pub load: f64,
}

impl Default for BeamSpec {
    fn default() -> Self {
        Self {
            nodes: 31,
            radius: 0.1,
            length: 1.0,
            load: 1.0e-3,
        }
    }
}

impl BeamSpec {
    pub fn with_nodes(nodes: usize) -> Self {
        Self {
            nodes,
            ..Self::default()
        }
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.nodes - 1) as f64
    }

    /// Node coordinates.
    pub fn grid(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.nodes).map(|i| i as f64 * h).collect()
    }

    /// Region (0, 1 or 2) owning node `i`: the beam is cut in three equal
    /// thirds, a node on a cut belonging to the region on its right.
    pub fn region_of(&self, i: usize) -> usize {
        ((REGIONS * i) / (self.nodes - 1)).min(REGIONS - 1)
    }

    /// Expands per-region stiffness values to the nodes.
    pub fn expand_regions(&self, regions: &[f64]) -> Vec<f64> {
        (0..self.nodes).map(|i| regions[self.region_of(i)]).collect()
    }

    fn validate(&self) -> ModelResult<()> {
        if self.nodes < 5 {
            return Err(ErrorPayload::invalid_input("beam needs at least 5 nodes"));
        }
        Ok(())
    }

    /// System matrix acting on the unknowns `u₁ … u_{N−1}`.
    fn system(&self, stiffness: &[f64]) -> Vec<f64> {
        let n_nodes = self.nodes;
        let n = n_nodes - 1;
        let h2 = self.spacing() * self.spacing();
        let rigidity: Vec<f64> = stiffness.iter().map(|e| self.radius * e).collect();
        let mut a = vec![0.0; n * n];
        let mut u = vec![0.0; n_nodes + 1];
        let mut moment = vec![0.0; n_nodes];
        // Column k is the operator applied to the unit displacement at node k+1.
        for k in 0..n {
            u.iter_mut().for_each(|x| *x = 0.0);
            u[k + 1] = 1.0;
            moment[0] = rigidity[0] * 2.0 * u[1] / h2;
            for j in 1..n_nodes - 1 {
                moment[j] = rigidity[j] * (u[j - 1] - 2.0 * u[j] + u[j + 1]) / h2;
            }
            moment[n_nodes - 1] = 0.0;
            for i in 1..n_nodes - 1 {
                a[(i - 1) * n + k] = (moment[i - 1] - 2.0 * moment[i] + moment[i + 1]) / h2;
            }
            a[(n - 1) * n + k] = 2.0 * moment[n_nodes - 2] / h2;
        }
        a
    }

    /// Displacement at every node for nodal stiffness `stiffness`.
    pub fn solve(&self, stiffness: &[f64]) -> ModelResult<Vec<f64>> {
        self.validate()?;
        if stiffness.len() != self.nodes {
            return Err(ErrorPayload::invalid_input(format!(
                "beam expects {} stiffness values, got {}",
                self.nodes,
                stiffness.len()
            )));
        }
        if stiffness.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(ErrorPayload::invalid_input("beam stiffness must be positive"));
        }
        let n = self.nodes - 1;
        let lu = DenseLu::factor(n, self.system(stiffness))
            .ok_or_else(|| ErrorPayload::internal("singular beam system"))?;
        let rhs = vec![self.load; n];
        let mut u = Vec::with_capacity(self.nodes);
        u.push(0.0);
        u.extend(lu.solve(&rhs));
        Ok(u)
    }

    /// Displacement of the continuum cantilever with constant stiffness:
    /// `u(x) = q/(24 r E)·(x⁴ − 4Lx³ + 6L²x²)`.
    pub fn continuum_uniform(&self, stiffness: f64, x: f64) -> f64 {
        let l = self.length;
        self.load / (24.0 * self.radius * stiffness) * (x * x * x * x - 4.0 * l * x * x * x + 6.0 * l * l * x * x)
    }
}

/// The forward beam model. By default the input is the stiffness of the three
/// regions; with config `{"nodal": true}` it is one value per node. Config key
/// `N` sets the number of nodes.
#[derive(Clone, Copy, Debug, Default)]
pub struct BeamForward;

fn beam_from_config(config: &Config) -> ModelResult<(BeamSpec, bool)> {
    let spec = BeamSpec::with_nodes(config.usize_or("N", BeamSpec::default().nodes)?);
    spec.validate()?;
    Ok((spec, config.bool_or("nodal", false)?))
}

impl Model for BeamForward {
    fn name(&self) -> &str {
        "beam-forward"
    }

    fn input_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        let (spec, nodal) = beam_from_config(config)?;
        Ok(vec![if nodal { spec.nodes } else { REGIONS }])
    }

    fn output_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![beam_from_config(config)?.0.nodes])
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::EVALUATE
    }

    fn evaluate(&self, input: &ParameterList, config: &Config) -> ModelResult<ParameterList> {
        let (spec, nodal) = beam_from_config(config)?;
        let stiffness = if nodal {
            input[0].clone()
        } else {
            spec.expand_regions(&input[0])
        };
        Ok(ParameterList::single(spec.solve(&stiffness)?))
    }
}

/// Bayesian inversion for the three region stiffnesses from displacement
/// observations `y = B u + ε`, `ε ~ N(0, σ_y² I)`, with independent normal
/// priors per region.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamPosteriorSpec {
    pub beam: BeamSpec,
    /// Observation operator, one row per observation, `nodes` columns.
    pub observation: Vec<Vec<f64>>,
    pub data: Vec<f64>,
    pub noise_variance: f64,
    pub prior_mean: [f64; REGIONS],
    pub prior_sd: [f64; REGIONS],
}

/// Region stiffness used to generate the stored observations.
pub const TRUE_STIFFNESS: [f64; REGIONS] = [1.00, 1.02, 0.98];

/// Observation noise variance: a standard deviation of about 1% of the tip
/// displacement under the default load.
pub const NOISE_VARIANCE: f64 = 1e-10;

/// Every third node, starting at the clamp.
pub const OBSERVATION_STRIDE: usize = 3;

impl BeamPosteriorSpec {
    /// Row-selection operator picking every third node.
    pub fn selection_operator(beam: &BeamSpec) -> Vec<Vec<f64>> {
        (0..beam.nodes)
            .step_by(OBSERVATION_STRIDE)
            .map(|node| {
                let mut row = vec![0.0; beam.nodes];
                row[node] = 1.0;
                row
            })
            .collect()
    }

    /// Noise-free data generated from `truth` with operator `observation`.
    pub fn synthetic(beam: BeamSpec, observation: Vec<Vec<f64>>, truth: [f64; REGIONS]) -> ModelResult<Self> {
        let u = beam.solve(&beam.expand_regions(&truth))?;
        let data = apply(&observation, &u);
        Ok(Self {
            beam,
            observation,
            data,
            noise_variance: NOISE_VARIANCE,
            prior_mean: [1.0; REGIONS],
            prior_sd: [0.1; REGIONS],
        })
    }

    /// The stored benchmark instance.
    pub fn benchmark() -> Self {
        let beam = BeamSpec::default();
        Self {
            observation: Self::selection_operator(&beam),
            beam,
            data: fixtures::BEAM_OBSERVATIONS.to_vec(),
            noise_variance: NOISE_VARIANCE,
            prior_mean: [1.0; REGIONS],
            prior_sd: [0.1; REGIONS],
        }
    }

    pub fn log_prior(&self, m: &[f64]) -> f64 {
        m.iter()
            .zip(self.prior_mean.iter().zip(&self.prior_sd))
            .map(|(&x, (&mu, &sd))| {
                let z = (x - mu) / sd;
                -0.5 * libm::log(2.0 * core::f64::consts::PI) - libm::log(sd) - 0.5 * z * z
            })
            .sum()
    }

    /// Sum of squared, noise-scaled residuals `‖y − Bu(m)‖² / σ_y²`.
    pub fn misfit(&self, m: &[f64]) -> ModelResult<f64> {
        let u = self.beam.solve(&self.beam.expand_regions(m))?;
        let predicted = apply(&self.observation, &u);
        Ok(predicted
            .iter()
            .zip(&self.data)
            .map(|(p, y)| (y - p) * (y - p))
            .sum::<f64>()
            / self.noise_variance)
    }

    /// `−½ misfit + log prior`; the sentinel for non-positive stiffness.
    pub fn log_density(&self, m: &[f64]) -> ModelResult<f64> {
        if m.len() != REGIONS {
            return Err(ErrorPayload::invalid_input("beam posterior expects 3 values"));
        }
        if m.iter().any(|x| !(*x > 0.0)) {
            return Ok(NEG_INF_SENTINEL);
        }
        Ok(-0.5 * self.misfit(m)? + self.log_prior(m))
    }
}

fn apply(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

#[derive(Clone, Debug)]
pub struct BeamPosterior {
    spec: BeamPosteriorSpec,
}

impl Default for BeamPosterior {
    fn default() -> Self {
        Self::new(BeamPosteriorSpec::benchmark())
    }
}

impl BeamPosterior {
    pub fn new(spec: BeamPosteriorSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &BeamPosteriorSpec {
        &self.spec
    }
}

impl Model for BeamPosterior {
    fn name(&self) -> &str {
        "beam-posterior"
    }

    fn input_sizes(&self, _: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![REGIONS])
    }

    fn output_sizes(&self, _: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![1])
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::EVALUATE
    }

    fn evaluate(&self, input: &ParameterList, _: &Config) -> ModelResult<ParameterList> {
        Ok(ParameterList::scalar(self.spec.log_density(&input[0])?))
    }
}

/// Forward-propagation benchmark: uniform region stiffness and the
/// displacement at two nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeamPropagation {
    /// `[low, high]` per region.
    pub bounds: [[f64; 2]; REGIONS],
    /// Zero-based output indices of the quantities of interest.
    pub qoi_nodes: [usize; 2],
}

pub fn beam_propagation_distribution() -> BeamPropagation {
    BeamPropagation {
        bounds: [[1.0, 1.05]; REGIONS],
        qoi_nodes: [10, 25],
    }
}
