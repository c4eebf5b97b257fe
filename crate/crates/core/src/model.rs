//! The model abstraction and the name registry.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use crate::wire::Capabilities;
use crate::wire::{Config, ErrorPayload, ParameterList};

/// Result type of model operations.
pub type ModelResult<T> = Result<T, ErrorPayload>;

/// Whether a server may run several operations of one model at the same time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConcurrencyPolicy {
    /// At most one operation at a time.
    Serial,
    #[default]
    Parallel,
}

/// A forward map `F` from a list of input vectors to a list of output vectors.
///
/// Inputs and outputs are split into blocks. Derivative operations act on one
/// `(output block, input block)` pair per call:
///
/// - `gradient` returns `sensᵀ J`, where `J` is the Jacobian of output block
///   `out_wrt` with respect to input block `in_wrt`;
/// - `apply_jacobian` returns `J vec`;
/// - `apply_hessian` returns `H vec`, where `H` is the block of second
///   derivatives of `sensᵀ F_out_wrt` with respect to input blocks `in_wrt1`
///   (rows) and `in_wrt2` (columns).
///
/// Operations that a model does not implement keep their default body, which
/// reports `UnsupportedFeature`; [`capabilities`](Model::capabilities) must
/// agree with what is implemented.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    fn input_sizes(&self, config: &Config) -> ModelResult<Vec<usize>>;

    fn output_sizes(&self, config: &Config) -> ModelResult<Vec<usize>>;

    fn capabilities(&self) -> Capabilities;

    fn concurrency(&self) -> ConcurrencyPolicy {
        ConcurrencyPolicy::Parallel
    }

    fn evaluate(&self, input: &ParameterList, config: &Config) -> ModelResult<ParameterList> {
        let _ = (input, config);
        Err(ErrorPayload::unsupported("Evaluate"))
    }

    fn gradient(
        &self,
        out_wrt: usize,
        in_wrt: usize,
        input: &ParameterList,
        sens: &[f64],
        config: &Config,
    ) -> ModelResult<Vec<f64>> {
        let _ = (out_wrt, in_wrt, input, sens, config);
        Err(ErrorPayload::unsupported("Gradient"))
    }

    fn apply_jacobian(
        &self,
        out_wrt: usize,
        in_wrt: usize,
        input: &ParameterList,
        vec: &[f64],
        config: &Config,
    ) -> ModelResult<Vec<f64>> {
        let _ = (out_wrt, in_wrt, input, vec, config);
        Err(ErrorPayload::unsupported("ApplyJacobian"))
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_hessian(
        &self,
        out_wrt: usize,
        in_wrt1: usize,
        in_wrt2: usize,
        input: &ParameterList,
        sens: &[f64],
        vec: &[f64],
        config: &Config,
    ) -> ModelResult<Vec<f64>> {
        let _ = (out_wrt, in_wrt1, in_wrt2, input, sens, vec, config);
        Err(ErrorPayload::unsupported("ApplyHessian"))
    }
}

impl fmt::Debug for dyn Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Model").field(&self.name()).finish()
    }
}

impl<M: Model + ?Sized> Model for Arc<M> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn input_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        (**self).input_sizes(config)
    }
    fn output_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        (**self).output_sizes(config)
    }
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }
    fn concurrency(&self) -> ConcurrencyPolicy {
        (**self).concurrency()
    }
    fn evaluate(&self, input: &ParameterList, config: &Config) -> ModelResult<ParameterList> {
        (**self).evaluate(input, config)
    }
    fn gradient(
        &self,
        out_wrt: usize,
        in_wrt: usize,
        input: &ParameterList,
        sens: &[f64],
        config: &Config,
    ) -> ModelResult<Vec<f64>> {
        (**self).gradient(out_wrt, in_wrt, input, sens, config)
    }
    fn apply_jacobian(
        &self,
        out_wrt: usize,
        in_wrt: usize,
        input: &ParameterList,
        vec: &[f64],
        config: &Config,
    ) -> ModelResult<Vec<f64>> {
        (**self).apply_jacobian(out_wrt, in_wrt, input, vec, config)
    }
    fn apply_hessian(
        &self,
        out_wrt: usize,
        in_wrt1: usize,
        in_wrt2: usize,
        input: &ParameterList,
        sens: &[f64],
        vec: &[f64],
        config: &Config,
    ) -> ModelResult<Vec<f64>> {
        (**self).apply_hessian(out_wrt, in_wrt1, in_wrt2, input, sens, vec, config)
    }
}

/// Registration failures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegistryError {
    EmptyName,
    Duplicate(String),
    NotServable(String),
}

impl fmt::Display for RegistryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyName => f.write_str("model name must not be empty"),
            Self::Duplicate(name) => write!(f, "model '{name}' is already registered"),
            Self::NotServable(name) => write!(f, "model '{name}' supports no operation"),
        }
    }
}

impl core::error::Error for RegistryError {}

/// Models by name, in registration order.
#[derive(Clone, Default)]
pub struct ModelRegistry {
    models: Vec<Arc<dyn Model>>,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, model: Arc<dyn Model>) -> Result<(), RegistryError> {
        let name = model.name();
        if name.is_empty() {
            return Err(RegistryError::EmptyName);
        }
        if !model.capabilities().is_servable() {
            return Err(RegistryError::NotServable(name.to_string()));
        }
        if self.models.iter().any(|m| m.name() == name) {
            return Err(RegistryError::Duplicate(name.to_string()));
        }
        self.models.push(model);
        Ok(())
    }

    /// Builder-style [`register`](Self::register).
    pub fn with(mut self, model: Arc<dyn Model>) -> Result<Self, RegistryError> {
        self.register(model)?;
        Ok(self)
    }

    pub fn lookup(&self, name: &str) -> Result<&Arc<dyn Model>, ErrorPayload> {
        self.models
            .iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| ErrorPayload::model_not_found(name))
    }

    pub fn names(&self) -> Vec<String> {
        self.models.iter().map(|m| m.name().to_string()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Model>> {
        self.models.iter()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

impl fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelRegistry").field("models", &self.names()).finish()
    }
}

/// The minimal example model: one input of size one, multiplied by two.
#[derive(Clone, Debug)]
pub struct Doubler {
    name: String,
    capabilities: Capabilities,
}

impl Default for Doubler {
    fn default() -> Self {
        Self {
            name: "forward".into(),
            capabilities: Capabilities::ALL,
        }
    }
}

impl Doubler {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    /// Restricts the advertised operations.
    pub fn with_capabilities(capabilities: Capabilities) -> Self {
        Self {
            capabilities,
            ..Self::default()
        }
    }
}

impl Model for Doubler {
    fn name(&self) -> &str {
        &self.name
    }

    fn input_sizes(&self, _config: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![1])
    }

    fn output_sizes(&self, _config: &Config) -> ModelResult<Vec<usize>> {
        Ok(vec![1])
    }

    fn capabilities(&self) -> Capabilities {
        self.capabilities
    }

    fn evaluate(&self, input: &ParameterList, _config: &Config) -> ModelResult<ParameterList> {
        Ok(ParameterList::scalar(input[0][0] * 2.0))
    }

    fn gradient(&self, _: usize, _: usize, _: &ParameterList, sens: &[f64], _: &Config) -> ModelResult<Vec<f64>> {
        Ok(vec![2.0 * sens[0]])
    }

    fn apply_jacobian(&self, _: usize, _: usize, _: &ParameterList, vec: &[f64], _: &Config) -> ModelResult<Vec<f64>> {
        Ok(vec![2.0 * vec[0]])
    }

    fn apply_hessian(
        &self,
        _: usize,
        _: usize,
        _: usize,
        _: &ParameterList,
        _: &[f64],
        _: &[f64],
        _: &Config,
    ) -> ModelResult<Vec<f64>> {
        Ok(vec![0.0])
    }
}

/// Relative step of the first-order central differences.
pub const FD_STEP: f64 = 1e-6;

/// Relative step of the mixed second differences used when the wrapped model
/// has no gradient of its own.
pub const FD_SECOND_ORDER_STEP: f64 = 1e-4;

fn step(value: f64, rel: f64) -> f64 {
    rel * libm::fmax(1.0, libm::fabs(value))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| libm::fmax(m, libm::fabs(*x)))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Adds finite-difference derivatives to a model that only evaluates.
///
/// Operations the wrapped model implements itself are passed through. First
/// derivatives use central differences with step `1e-6·max(1,|θᵢ|)` per
/// coordinate; `gradient` and `apply_jacobian` share the same Jacobian so that
/// `sensᵀ(J v) = (sensᵀJ) v` holds to rounding.
#[derive(Clone, Debug)]
pub struct FiniteDifference<M> {
    inner: M,
}

impl<M: Model> FiniteDifference<M> {
    pub fn new(inner: M) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    fn output_block(&self, input: &ParameterList, out_wrt: usize, config: &Config) -> ModelResult<Vec<f64>> {
        let mut out = self.inner.evaluate(input, config)?;
        if out_wrt >= out.len() {
            return Err(ErrorPayload::internal(format!("model returned no output block {out_wrt}")));
        }
        Ok(out.swap_remove(out_wrt))
    }

    /// Jacobian block, stored column by column.
    fn jacobian(&self, out_wrt: usize, in_wrt: usize, input: &ParameterList, config: &Config) -> ModelResult<Vec<Vec<f64>>> {
        let mut probe = input.clone();
        let n = input[in_wrt].len();
        let mut columns = Vec::with_capacity(n);
        for j in 0..n {
            let x = input[in_wrt][j];
            let h = step(x, FD_STEP);
            probe[in_wrt][j] = x + h;
            let plus = self.output_block(&probe, out_wrt, config)?;
            probe[in_wrt][j] = x - h;
            let minus = self.output_block(&probe, out_wrt, config)?;
            probe[in_wrt][j] = x;
            columns.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect());
        }
        Ok(columns)
    }

    fn weighted_output(&self, input: &ParameterList, out_wrt: usize, sens: &[f64], config: &Config) -> ModelResult<f64> {
        Ok(dot(&self.output_block(input, out_wrt, config)?, sens))
    }
}

impl<M: Model> Model for FiniteDifference<M> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn input_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        self.inner.input_sizes(config)
    }

    fn output_sizes(&self, config: &Config) -> ModelResult<Vec<usize>> {
        self.inner.output_sizes(config)
    }

    fn capabilities(&self) -> Capabilities {
        if self.inner.capabilities().evaluate {
            Capabilities::ALL
        } else {
            self.inner.capabilities()
        }
    }

    fn concurrency(&self) -> ConcurrencyPolicy {
        self.inner.concurrency()
    }

    fn evaluate(&self, input: &ParameterList, config: &Config) -> ModelResult<ParameterList> {
        self.inner.evaluate(input, config)
    }

    fn gradient(
        &self,
        out_wrt: usize,
        in_wrt: usize,
        input: &ParameterList,
        sens: &[f64],
        config: &Config,
    ) -> ModelResult<Vec<f64>> {
        if self.inner.capabilities().gradient {
            return self.inner.gradient(out_wrt, in_wrt, input, sens, config);
        }
        let columns = self.jacobian(out_wrt, in_wrt, input, config)?;
        Ok(columns.iter().map(|col| dot(col, sens)).collect())
    }

    fn apply_jacobian(
        &self,
        out_wrt: usize,
        in_wrt: usize,
        input: &ParameterList,
        vec: &[f64],
        config: &Config,
    ) -> ModelResult<Vec<f64>> {
        if self.inner.capabilities().apply_jacobian {
            return self.inner.apply_jacobian(out_wrt, in_wrt, input, vec, config);
        }
        let columns = self.jacobian(out_wrt, in_wrt, input, config)?;
        let rows = columns.first().map_or(0, Vec::len);
        let mut out = vec![0.0; rows];
        for (col, &v) in columns.iter().zip(vec) {
            for (o, c) in out.iter_mut().zip(col) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    fn apply_hessian(
        &self,
        out_wrt: usize,
        in_wrt1: usize,
        in_wrt2: usize,
        input: &ParameterList,
        sens: &[f64],
        vec: &[f64],
        config: &Config,
    ) -> ModelResult<Vec<f64>> {
        if self.inner.capabilities().apply_hessian {
            return self.inner.apply_hessian(out_wrt, in_wrt1, in_wrt2, input, sens, vec, config);
        }
        let n1 = input[in_wrt1].len();
        let vnorm = max_abs(vec);
        if vnorm == 0.0 {
            return Ok(vec![0.0; n1]);
        }
        let shifted = |t: f64| {
            let mut p = input.clone();
            for (x, v) in p[in_wrt2].iter_mut().zip(vec) {
                *x += t * v;
            }
            p
        };
        if self.inner.capabilities().gradient {
            // Central difference of the analytic gradient along `vec`.
            let t = FD_STEP * libm::fmax(1.0, max_abs(&input[in_wrt2])) / vnorm;
            let plus = self.inner.gradient(out_wrt, in_wrt1, &shifted(t), sens, config)?;
            let minus = self.inner.gradient(out_wrt, in_wrt1, &shifted(-t), sens, config)?;
            return Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * t)).collect());
        }
        // Mixed second difference of sensᵀF along e_i and vec.
        let t = FD_SECOND_ORDER_STEP * libm::fmax(1.0, max_abs(&input[in_wrt2])) / vnorm;
        let mut out = Vec::with_capacity(n1);
        for i in 0..n1 {
            let h = step(input[in_wrt1][i], FD_SECOND_ORDER_STEP);
            let corner = |a: f64, b: f64| {
                let mut p = shifted(b * t);
                p[in_wrt1][i] += a * h;
                self.weighted_output(&p, out_wrt, sens, config)
            };
            let value = corner(1.0, 1.0)? - corner(-1.0, 1.0)? - corner(1.0, -1.0)? + corner(-1.0, -1.0)?;
            out.push(value / (4.0 * h * t));
        }
        Ok(out)
    }
}
