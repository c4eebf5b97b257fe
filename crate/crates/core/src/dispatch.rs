//! Request handling independent of any transport.
//!
//! `decode → lookup → validate → invoke → encode`. Transports add what needs
//! std (threads, panic recovery, timeouts) around [`execute`].

use alloc::format;
use alloc::vec::Vec;

use crate::model::{Model, ModelRegistry};
use crate::wire::{
    encode_error, encode_response, validate_request, ErrorPayload, EvaluateResponse, InfoResponse, InputSizesResponse,
    ModelInfoResponse, Operation, OutputSizesResponse, Request, VectorResponse, PROTOCOL_VERSION,
};

/// A raw response: HTTP status and JSON body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

impl WireResponse {
    pub fn ok(body: Vec<u8>) -> Self {
        Self { status: 200, body }
    }

    pub fn error(payload: &ErrorPayload) -> Self {
        Self {
            status: payload.status(),
            body: encode_error(payload),
        }
    }
}

impl From<Result<Vec<u8>, ErrorPayload>> for WireResponse {
    fn from(result: Result<Vec<u8>, ErrorPayload>) -> Self {
        match result {
            Ok(body) => Self::ok(body),
            Err(e) => Self::error(&e),
        }
    }
}

/// Parses method, path and body into a [`Request`].
pub fn decode(method: &str, path: &str, body: &[u8]) -> Result<Request, ErrorPayload> {
    let op = Operation::from_path(path).ok_or_else(|| ErrorPayload::invalid_input(format!("unknown endpoint {path}")))?;
    if !method.eq_ignore_ascii_case(op.method()) {
        return Err(ErrorPayload::invalid_input(format!("{path} expects {}", op.method())));
    }
    Request::decode(op, body)
}

/// Answers a decoded request against the registry.
pub fn execute(registry: &ModelRegistry, request: &Request) -> Result<Vec<u8>, ErrorPayload> {
    let name = match request.model_name() {
        None => {
            return encode_response(&InfoResponse {
                protocol_version: PROTOCOL_VERSION.into(),
                models: registry.names(),
            })
        }
        Some(name) => name,
    };
    let model = registry.lookup(name)?;
    execute_on(model.as_ref(), request)
}

/// Answers a request addressed to `model`; the name is not checked again.
pub fn execute_on(model: &dyn Model, request: &Request) -> Result<Vec<u8>, ErrorPayload> {
    let validated = validate_request(request, model)?;
    let expect_len = |what: &str, got: usize, expected: usize| {
        if got == expected {
            Ok(())
        } else {
            Err(ErrorPayload::internal(format!(
                "model returned {what} of length {got}, declared {expected}"
            )))
        }
    };
    match request {
        Request::Info => unreachable!("Info has no target model"),
        Request::InputSizes(_) => encode_response(&InputSizesResponse {
            input_sizes: validated.input_sizes().to_vec(),
        }),
        Request::OutputSizes(_) => encode_response(&OutputSizesResponse {
            output_sizes: validated.output_sizes().to_vec(),
        }),
        Request::ModelInfo(_) => encode_response(&ModelInfoResponse {
            support: model.capabilities(),
        }),
        Request::Evaluate(r) => {
            let output = model.evaluate(&r.input, &r.config)?;
            if output.sizes() != validated.output_sizes() {
                return Err(ErrorPayload::internal(format!(
                    "model returned output sizes {:?}, declared {:?}",
                    output.sizes(),
                    validated.output_sizes()
                )));
            }
            encode_response(&EvaluateResponse { output })
        }
        Request::Gradient(r) => {
            let output = model.gradient(r.out_wrt, r.in_wrt, &r.input, &r.sens, &r.config)?;
            expect_len("gradient", output.len(), validated.input_sizes()[r.in_wrt])?;
            encode_response(&VectorResponse { output })
        }
        Request::ApplyJacobian(r) => {
            let output = model.apply_jacobian(r.out_wrt, r.in_wrt, &r.input, &r.vec, &r.config)?;
            expect_len("Jacobian action", output.len(), validated.output_sizes()[r.out_wrt])?;
            encode_response(&VectorResponse { output })
        }
        Request::ApplyHessian(r) => {
            let output = model.apply_hessian(r.out_wrt, r.in_wrt1, r.in_wrt2, &r.input, &r.sens, &r.vec, &r.config)?;
            expect_len("Hessian action", output.len(), validated.input_sizes()[r.in_wrt1])?;
            encode_response(&VectorResponse { output })
        }
    }
}

/// Full pipeline from raw request to raw response.
pub fn handle(registry: &ModelRegistry, method: &str, path: &str, body: &[u8]) -> WireResponse {
    decode(method, path, body)
        .and_then(|request| execute(registry, &request))
        .into()
}
