//! Wire format: endpoints, request and response bodies, error payloads.
//!
//! Every model operation has its own endpoint. `GET /Info` takes no body; all
//! other endpoints take a JSON object via `POST`. Numbers are written with the
//! shortest decimal representation that parses back to the same `f64`, so a
//! value survives a round trip through the wire bit for bit.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::model::Model;

/// Version string reported by `GET /Info`.
pub const PROTOCOL_VERSION: &str = "1.0";

/// Model configuration, forwarded verbatim from the client to the model.
pub type Config = serde_json::Map<String, serde_json::Value>;

/// Model input or output: an ordered list of real vectors ("blocks").
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterList(pub Vec<Vec<f64>>);

impl ParameterList {
    pub fn new(blocks: Vec<Vec<f64>>) -> Self {
        Self(blocks)
    }

    /// A list holding a single block.
    pub fn single(block: Vec<f64>) -> Self {
        Self(alloc::vec![block])
    }

    /// A list holding a single block of length one.
    pub fn scalar(value: f64) -> Self {
        Self(alloc::vec![alloc::vec![value]])
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.0
    }

    /// All blocks concatenated in order.
    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }
}

impl Deref for ParameterList {
    type Target = Vec<Vec<f64>>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for ParameterList {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl From<Vec<Vec<f64>>> for ParameterList {
    fn from(blocks: Vec<Vec<f64>>) -> Self {
        Self(blocks)
    }
}

/// Which of the four operations a model implements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    #[serde(rename = "Evaluate")]
    pub evaluate: bool,
    #[serde(rename = "Gradient")]
    pub gradient: bool,
    #[serde(rename = "ApplyJacobian")]
    pub apply_jacobian: bool,
    #[serde(rename = "ApplyHessian")]
    pub apply_hessian: bool,
}

impl Capabilities {
    pub const EVALUATE: Self = Self {
        evaluate: true,
        gradient: false,
        apply_jacobian: false,
        apply_hessian: false,
    };
    pub const FIRST_ORDER: Self = Self {
        evaluate: true,
        gradient: true,
        apply_jacobian: true,
        apply_hessian: false,
    };
    pub const ALL: Self = Self {
        evaluate: true,
        gradient: true,
        apply_jacobian: true,
        apply_hessian: true,
    };

    /// A servable model supports at least one operation.
    pub fn is_servable(&self) -> bool {
        self.evaluate || self.gradient || self.apply_jacobian || self.apply_hessian
    }

    pub fn supports(&self, op: Operation) -> bool {
        match op {
            Operation::Evaluate => self.evaluate,
            Operation::Gradient => self.gradient,
            Operation::ApplyJacobian => self.apply_jacobian,
            Operation::ApplyHessian => self.apply_hessian,
            Operation::Info | Operation::InputSizes | Operation::OutputSizes | Operation::ModelInfo => true,
        }
    }
}

/// The closed set of error types that may appear on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    ModelNotFound,
    UnsupportedFeature,
    InvalidInput,
    InternalError,
}

impl ErrorKind {
    /// HTTP status used for this error type.
    pub const fn status(self) -> u16 {
        match self {
            Self::InternalError => 500,
            Self::ModelNotFound | Self::UnsupportedFeature | Self::InvalidInput => 400,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Self::ModelNotFound => "ModelNotFound",
            Self::UnsupportedFeature => "UnsupportedFeature",
            Self::InvalidInput => "InvalidInput",
            Self::InternalError => "InternalError",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A typed error as carried in `{"error":{"type":...,"message":...}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPayload {
    #[serde(rename = "type")]
    pub kind: ErrorKind,
    pub message: String,
}

impl ErrorPayload {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn model_not_found(name: &str) -> Self {
        Self::new(ErrorKind::ModelNotFound, format!("no model '{name}'"))
    }

    pub fn unsupported(what: &str) -> Self {
        Self::new(ErrorKind::UnsupportedFeature, format!("{what} is not supported by this model"))
    }

    pub fn invalid_input(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::InvalidInput, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::InternalError, message)
    }

    pub fn status(&self) -> u16 {
        self.kind.status()
    }
}

impl fmt::Display for ErrorPayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ErrorBody {
    error: ErrorPayload,
}

/// Serializes an error payload into its wire body.
pub fn encode_error(payload: &ErrorPayload) -> Vec<u8> {
    serde_json::to_vec(&ErrorBody {
        error: payload.clone(),
    })
    .expect("error payload always serializes")
}

/// Parses an error body. Returns `None` if `body` is not an error body.
pub fn decode_error(body: &[u8]) -> Option<ErrorPayload> {
    serde_json::from_slice::<ErrorBody>(body).ok().map(|b| b.error)
}

/// One endpoint of the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operation {
    Info,
    InputSizes,
    OutputSizes,
    ModelInfo,
    Evaluate,
    Gradient,
    ApplyJacobian,
    ApplyHessian,
}

impl Operation {
    pub const ALL: [Operation; 8] = [
        Self::Info,
        Self::InputSizes,
        Self::OutputSizes,
        Self::ModelInfo,
        Self::Evaluate,
        Self::Gradient,
        Self::ApplyJacobian,
        Self::ApplyHessian,
    ];

    pub const fn path(self) -> &'static str {
        match self {
            Self::Info => "/Info",
            Self::InputSizes => "/InputSizes",
            Self::OutputSizes => "/OutputSizes",
            Self::ModelInfo => "/ModelInfo",
            Self::Evaluate => "/Evaluate",
            Self::Gradient => "/Gradient",
            Self::ApplyJacobian => "/ApplyJacobian",
            Self::ApplyHessian => "/ApplyHessian",
        }
    }

    pub const fn method(self) -> &'static str {
        match self {
            Self::Info => "GET",
            _ => "POST",
        }
    }

    pub fn from_path(path: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.path() == path)
    }

    /// Display name used in capability messages.
    pub const fn name(self) -> &'static str {
        match self {
            Self::Info => "Info",
            Self::InputSizes => "InputSizes",
            Self::OutputSizes => "OutputSizes",
            Self::ModelInfo => "ModelInfo",
            Self::Evaluate => "Evaluate",
            Self::Gradient => "Gradient",
            Self::ApplyJacobian => "ApplyJacobian",
            Self::ApplyHessian => "ApplyHessian",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizesRequest {
    pub name: String,
    #[serde(default)]
    pub config: Config,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfoRequest {
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub name: String,
    pub input: ParameterList,
    #[serde(default)]
    pub config: Config,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GradientRequest {
    pub name: String,
    pub out_wrt: usize,
    pub in_wrt: usize,
    pub input: ParameterList,
    pub sens: Vec<f64>,
    #[serde(default)]
    pub config: Config,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JacobianRequest {
    pub name: String,
    pub out_wrt: usize,
    pub in_wrt: usize,
    pub input: ParameterList,
    pub vec: Vec<f64>,
    #[serde(default)]
    pub config: Config,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HessianRequest {
    pub name: String,
    pub out_wrt: usize,
    pub in_wrt1: usize,
    pub in_wrt2: usize,
    pub input: ParameterList,
    pub sens: Vec<f64>,
    pub vec: Vec<f64>,
    #[serde(default)]
    pub config: Config,
}

/// A decoded request for any endpoint.
#[derive(Clone, Debug, PartialEq)]
pub enum Request {
    Info,
    InputSizes(SizesRequest),
    OutputSizes(SizesRequest),
    ModelInfo(ModelInfoRequest),
    Evaluate(EvaluateRequest),
    Gradient(GradientRequest),
    ApplyJacobian(JacobianRequest),
    ApplyHessian(HessianRequest),
}

impl Request {
    pub fn operation(&self) -> Operation {
        match self {
            Self::Info => Operation::Info,
            Self::InputSizes(_) => Operation::InputSizes,
            Self::OutputSizes(_) => Operation::OutputSizes,
            Self::ModelInfo(_) => Operation::ModelInfo,
            Self::Evaluate(_) => Operation::Evaluate,
            Self::Gradient(_) => Operation::Gradient,
            Self::ApplyJacobian(_) => Operation::ApplyJacobian,
            Self::ApplyHessian(_) => Operation::ApplyHessian,
        }
    }

    /// Target model, absent only for `Info`.
    pub fn model_name(&self) -> Option<&str> {
        match self {
            Self::Info => None,
            Self::InputSizes(r) | Self::OutputSizes(r) => Some(&r.name),
            Self::ModelInfo(r) => Some(&r.name),
            Self::Evaluate(r) => Some(&r.name),
            Self::Gradient(r) => Some(&r.name),
            Self::ApplyJacobian(r) => Some(&r.name),
            Self::ApplyHessian(r) => Some(&r.name),
        }
    }

    fn is_finite(&self) -> bool {
        let all = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Self::Info | Self::InputSizes(_) | Self::OutputSizes(_) | Self::ModelInfo(_) => true,
            Self::Evaluate(r) => r.input.is_finite(),
            Self::Gradient(r) => r.input.is_finite() && all(&r.sens),
            Self::ApplyJacobian(r) => r.input.is_finite() && all(&r.vec),
            Self::ApplyHessian(r) => r.input.is_finite() && all(&r.sens) && all(&r.vec),
        }
    }

    /// Serializes the request body. `Info` has an empty body.
    pub fn encode(&self) -> Result<Vec<u8>, ErrorPayload> {
        if !self.is_finite() {
            return Err(ErrorPayload::invalid_input("non-finite number in request"));
        }
        let body = match self {
            Self::Info => Ok(Vec::new()),
            Self::InputSizes(r) | Self::OutputSizes(r) => serde_json::to_vec(r),
            Self::ModelInfo(r) => serde_json::to_vec(r),
            Self::Evaluate(r) => serde_json::to_vec(r),
            Self::Gradient(r) => serde_json::to_vec(r),
            Self::ApplyJacobian(r) => serde_json::to_vec(r),
            Self::ApplyHessian(r) => serde_json::to_vec(r),
        };
        body.map_err(|e| ErrorPayload::internal(e.to_string()))
    }

    /// Parses the body of a request to the given endpoint.
    pub fn decode(op: Operation, body: &[u8]) -> Result<Self, ErrorPayload> {
        fn parse<'a, T: Deserialize<'a>>(body: &'a [u8]) -> Result<T, ErrorPayload> {
            serde_json::from_slice(body).map_err(|e| ErrorPayload::invalid_input(format!("malformed request body: {e}")))
        }
        Ok(match op {
            Operation::Info => Self::Info,
            Operation::InputSizes => Self::InputSizes(parse(body)?),
            Operation::OutputSizes => Self::OutputSizes(parse(body)?),
            Operation::ModelInfo => Self::ModelInfo(parse(body)?),
            Operation::Evaluate => Self::Evaluate(parse(body)?),
            Operation::Gradient => Self::Gradient(parse(body)?),
            Operation::ApplyJacobian => Self::ApplyJacobian(parse(body)?),
            Operation::ApplyHessian => Self::ApplyHessian(parse(body)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InfoResponse {
    pub protocol_version: String,
    pub models: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InputSizesResponse {
    pub input_sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutputSizesResponse {
    pub output_sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfoResponse {
    pub support: Capabilities,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub output: ParameterList,
}

/// Response of the three derivative endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorResponse {
    pub output: Vec<f64>,
}

/// Serializes a response, refusing non-finite numbers.
pub fn encode_response<T: Serialize>(response: &T) -> Result<Vec<u8>, ErrorPayload> {
    let value = serde_json::to_value(response).map_err(|e| ErrorPayload::internal(e.to_string()))?;
    // serde_json writes NaN and infinities as `null`; catch them before they
    // reach the wire.
    if contains_null(&value) {
        return Err(ErrorPayload::internal("model produced a non-finite number"));
    }
    serde_json::to_vec(response).map_err(|e| ErrorPayload::internal(e.to_string()))
}

fn contains_null(value: &serde_json::Value) -> bool {
    match value {
        serde_json::Value::Null => true,
        serde_json::Value::Array(items) => items.iter().any(contains_null),
        serde_json::Value::Object(map) => map.values().any(contains_null),
        _ => false,
    }
}

/// A request whose shape has been checked against the target model.
#[derive(Debug)]
pub struct ValidatedRequest<'a> {
    request: &'a Request,
    input_sizes: Vec<usize>,
    output_sizes: Vec<usize>,
}

impl<'a> ValidatedRequest<'a> {
    pub fn request(&self) -> &'a Request {
        self.request
    }

    pub fn input_sizes(&self) -> &[usize] {
        &self.input_sizes
    }

    pub fn output_sizes(&self) -> &[usize] {
        &self.output_sizes
    }
}

fn check_input(input: &ParameterList, sizes: &[usize]) -> Result<(), ErrorPayload> {
    if input.len() != sizes.len() {
        return Err(ErrorPayload::invalid_input(format!(
            "expected {} input vectors, got {}",
            sizes.len(),
            input.len()
        )));
    }
    for (i, (block, &size)) in input.iter().zip(sizes).enumerate() {
        if block.len() != size {
            return Err(ErrorPayload::invalid_input(format!(
                "input {i} has dimension {} but the model expects {size}",
                block.len()
            )));
        }
    }
    Ok(())
}

fn check_index(what: &str, index: usize, sizes: &[usize]) -> Result<usize, ErrorPayload> {
    sizes
        .get(index)
        .copied()
        .ok_or_else(|| ErrorPayload::invalid_input(format!("{what}={index} out of range (have {})", sizes.len())))
}

fn check_len(what: &str, got: usize, expected: usize) -> Result<(), ErrorPayload> {
    if got == expected {
        Ok(())
    } else {
        Err(ErrorPayload::invalid_input(format!("{what} has length {got} but {expected} is required")))
    }
}

/// Checks a request against a model's capabilities and dimension contract.
///
/// Capabilities are checked first, so a request for an unsupported operation
/// always yields `UnsupportedFeature` regardless of its payload.
pub fn validate_request<'a>(request: &'a Request, model: &dyn Model) -> Result<ValidatedRequest<'a>, ErrorPayload> {
    let op = request.operation();
    if !model.capabilities().supports(op) {
        return Err(ErrorPayload::unsupported(op.name()));
    }
    let config = match request {
        Request::Info | Request::ModelInfo(_) => None,
        Request::InputSizes(r) | Request::OutputSizes(r) => Some(&r.config),
        Request::Evaluate(r) => Some(&r.config),
        Request::Gradient(r) => Some(&r.config),
        Request::ApplyJacobian(r) => Some(&r.config),
        Request::ApplyHessian(r) => Some(&r.config),
    };
    let (input_sizes, output_sizes) = match config {
        Some(config) => (model.input_sizes(config)?, model.output_sizes(config)?),
        None => (Vec::new(), Vec::new()),
    };
    if !request.is_finite() {
        return Err(ErrorPayload::invalid_input("non-finite number in request"));
    }
    match request {
        Request::Evaluate(r) => check_input(&r.input, &input_sizes)?,
        Request::Gradient(r) => {
            let out = check_index("outWrt", r.out_wrt, &output_sizes)?;
            check_index("inWrt", r.in_wrt, &input_sizes)?;
            check_input(&r.input, &input_sizes)?;
            check_len("sens", r.sens.len(), out)?;
        }
        Request::ApplyJacobian(r) => {
            check_index("outWrt", r.out_wrt, &output_sizes)?;
            let inp = check_index("inWrt", r.in_wrt, &input_sizes)?;
            check_input(&r.input, &input_sizes)?;
            check_len("vec", r.vec.len(), inp)?;
        }
        Request::ApplyHessian(r) => {
            let out = check_index("outWrt", r.out_wrt, &output_sizes)?;
            check_index("inWrt1", r.in_wrt1, &input_sizes)?;
            let inp2 = check_index("inWrt2", r.in_wrt2, &input_sizes)?;
            check_input(&r.input, &input_sizes)?;
            check_len("sens", r.sens.len(), out)?;
            check_len("vec", r.vec.len(), inp2)?;
        }
        Request::Info | Request::InputSizes(_) | Request::OutputSizes(_) | Request::ModelInfo(_) => {}
    }
    Ok(ValidatedRequest {
        request,
        input_sizes,
        output_sizes,
    })
}
