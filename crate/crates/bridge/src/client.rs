//! Blocking client: a remote model behind a URL, usable as a local [`Model`].

use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use uqbridge_core::wire::{
    decode_error, EvaluateRequest, EvaluateResponse, GradientRequest, HessianRequest, InfoResponse,
    InputSizesResponse, JacobianRequest, ModelInfoRequest, ModelInfoResponse, Operation, OutputSizesResponse,
    Request, SizesRequest, VectorResponse, PROTOCOL_VERSION,
};
use uqbridge_core::{Capabilities, Config, ErrorKind, ErrorPayload, Model, ParameterList};

/// Environment variable holding the default server address.
pub const URL_ENV: &str = "BRIDGE_URL";
pub const DEFAULT_URL: &str = "http://localhost:4242";

/// `BRIDGE_URL` if set, else the default address.
pub fn default_url() -> String {
    std::env::var(URL_ENV).unwrap_or_else(|_| DEFAULT_URL.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport error talking to {url}: {message}")]
    Transport { url: String, message: String },
    #[error("server at {url} speaks protocol {found}, this client speaks {PROTOCOL_VERSION}")]
    VersionMismatch { url: String, found: String },
    #[error("{0}")]
    Model(ErrorPayload),
    #[error("unexpected response from {url}: {message}")]
    Protocol { url: String, message: String },
}

impl ClientError {
    /// The typed error kind as the wire would report it.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Self::Model(p) => p.kind,
            _ => ErrorKind::InternalError,
        }
    }

    pub fn into_payload(self) -> ErrorPayload {
        match self {
            Self::Model(p) => p,
            other => ErrorPayload::internal(other.to_string()),
        }
    }
}

/// Retries apply to transport failures only; typed model errors are final.
#[derive(Clone, Debug, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each further one.
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            backoff: Duration::from_millis(500),
        }
    }
}

/// Longest a single call may take; generous because models may run for
/// minutes or hours.
pub const CALL_TIMEOUT: Duration = Duration::from_secs(3700);

/// Low-level connection to a server, without a bound model.
#[derive(Clone, Debug)]
pub struct Connection {
    base: String,
    http: reqwest::blocking::Client,
    retry: RetryPolicy,
}

impl Connection {
    pub fn new(url: &str, retry: RetryPolicy) -> Result<Self, ClientError> {
        let base = url.trim_end_matches('/').to_string();
        let http = reqwest::blocking::Client::builder()
            .no_proxy()
            .timeout(CALL_TIMEOUT)
            .connect_timeout(Duration::from_secs(10))
            .build()
            .map_err(|e| ClientError::Transport {
                url: base.clone(),
                message: e.to_string(),
            })?;
        Ok(Self { base, http, retry })
    }

    pub fn url(&self) -> &str {
        &self.base
    }

    /// Sends one request; returns the raw status and body.
    pub fn send_raw(&self, op: Operation, body: Vec<u8>) -> Result<(u16, Vec<u8>), ClientError> {
        let url = format!("{}{}", self.base, op.path());
        let mut delay = self.retry.backoff;
        let mut attempt = 0;
        loop {
            let request = if op == Operation::Info {
                self.http.get(&url)
            } else {
                self.http
                    .post(&url)
                    .header(reqwest::header::CONTENT_TYPE, "application/json")
                    .body(body.clone())
            };
            let outcome = request.send().and_then(|r| {
                let status = r.status().as_u16();
                r.bytes().map(|b| (status, b.to_vec()))
            });
            match outcome {
                Ok(ok) => return Ok(ok),
                Err(e) if attempt < self.retry.max_retries => {
                    tracing::warn!(%url, attempt, error = %e, "transport failure, retrying");
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err(e) => {
                    return Err(ClientError::Transport {
                        url,
                        message: e.to_string(),
                    })
                }
            }
        }
    }

    /// Sends a request and decodes the success body or the typed error.
    pub fn call<T: DeserializeOwned>(&self, request: &Request) -> Result<T, ClientError> {
        let body = request.encode().map_err(ClientError::Model)?;
        let (status, bytes) = self.send_raw(request.operation(), body)?;
        if status == 200 {
            return serde_json::from_slice(&bytes).map_err(|e| ClientError::Protocol {
                url: self.base.clone(),
                message: format!("cannot decode {} response: {e}", request.operation().name()),
            });
        }
        match decode_error(&bytes) {
            Some(payload) => Err(ClientError::Model(payload)),
            None => Err(ClientError::Protocol {
                url: self.base.clone(),
                message: format!("status {status} without an error payload"),
            }),
        }
    }

    /// `GET /Info`, checking the protocol major version.
    pub fn info(&self) -> Result<InfoResponse, ClientError> {
        let info: InfoResponse = self.call(&Request::Info)?;
        let major = |v: &str| v.split('.').next().unwrap_or("").to_string();
        if major(&info.protocol_version) != major(PROTOCOL_VERSION) {
            return Err(ClientError::VersionMismatch {
                url: self.base.clone(),
                found: info.protocol_version,
            });
        }
        Ok(info)
    }
}

/// A model served at a URL.
///
/// Connecting checks the protocol version and that the server lists the
/// model, then caches its capabilities. Calls are blocking and may be made
/// from several threads at once.
#[derive(Clone, Debug)]
pub struct RemoteModel {
    conn: Connection,
    name: String,
    capabilities: Capabilities,
}

impl RemoteModel {
    pub fn connect(url: &str, name: &str) -> Result<Self, ClientError> {
        Self::connect_with(url, name, RetryPolicy::default())
    }

    pub fn connect_with(url: &str, name: &str, retry: RetryPolicy) -> Result<Self, ClientError> {
        let conn = Connection::new(url, retry)?;
        let info = conn.info()?;
        if !info.models.iter().any(|m| m == name) {
            return Err(ClientError::Model(ErrorPayload::model_not_found(name)));
        }
        let support: ModelInfoResponse = conn.call(&Request::ModelInfo(ModelInfoRequest { name: name.into() }))?;
        Ok(Self {
            conn,
            name: name.to_string(),
            capabilities: support.support,
        })
    }

    pub fn url(&self) -> &str {
        self.conn.url()
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    pub fn remote_input_sizes(&self, config: &Config) -> Result<Vec<usize>, ClientError> {
        let r: InputSizesResponse = self.conn.call(&Request::InputSizes(SizesRequest {
            name: self.name.clone(),
            config: config.clone(),
        }))?;
        Ok(r.input_sizes)
    }

    pub fn remote_output_sizes(&self, config: &Config) -> Result<Vec<usize>, ClientError> {
        let r: OutputSizesResponse = self.conn.call(&Request::OutputSizes(SizesRequest {
            name: self.name.clone(),
            config: config.clone(),
        }))?;
        Ok(r.output_sizes)
    }

    fn require(&self, supported: bool, op: Operation) -> Result<(), ClientError> {
        if supported {
            Ok(())
        } else {
            Err(ClientError::Model(ErrorPayload::unsupported(op.name())))
        }
    }

    pub fn remote_evaluate(&self, input: &ParameterList, config: &Config) -> Result<ParameterList, ClientError> {
        self.require(self.capabilities.evaluate, Operation::Evaluate)?;
        let r: EvaluateResponse = self.conn.call(&Request::Evaluate(EvaluateRequest {
            name: self.name.clone(),
            input: input.clone(),
            config: config.clone(),
        }))?;
        Ok(r.output)
    }

    pub fn remote_gradient(
        &self,
        out_wrt: usize,
        in_wrt: usize,
        input: &ParameterList,
        sens: &[f64],
        config: &Config,
    ) -> Result<Vec<f64>, ClientError> {
        self.require(self.capabilities.gradient, Operation::Gradient)?;
        let r: VectorResponse = self.conn.call(&Request::Gradient(GradientRequest {
            name: self.name.clone(),
            out_wrt,
            in_wrt,
            input: input.clone(),
            sens: sens.to_vec(),
            config: config.clone(),
        }))?;
        Ok(r.output)
    }

    pub fn remote_apply_jacobian(
        &self,
        out_wrt: usize,
        in_wrt: usize,
        input: &ParameterList,
        vec: &[f64],
        config: &Config,
    ) -> Result<Vec<f64>, ClientError> {
        self.require(self.capabilities.apply_jacobian, Operation::ApplyJacobian)?;
        let r: VectorResponse = self.conn.call(&Request::ApplyJacobian(JacobianRequest {
            name: self.name.clone(),
            out_wrt,
            in_wrt,
            input: input.clone(),
            vec: vec.to_vec(),
            config: config.clone(),
        }))?;
        Ok(r.output)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn remote_apply_hessian(
        &self,
        out_wrt: usize,
        in_wrt1: usize,
        in_wrt2: usize,
        input: &ParameterList,
        sens: &[f64],
        vec: &[f64],
        config: &Config,
    ) -> Result<Vec<f64>, ClientError> {
        self.require(self.capabilities.apply_hessian, Operation::ApplyHessian)?;
        let r: VectorResponse = self.conn.call(&Request::ApplyHessian(HessianRequest {
            name: self.name.clone(),
            out_wrt,
            in_wrt1,
            in_wrt2,
            input: input.clone(),
            sens: sens.to_vec(),
            vec: vec.to_vec(),
            config: config.clone(),
        }))?;
        Ok(r.output)
    }

    /// Evaluates many inputs with at most `parallelism` requests in flight.
    /// Results come back in input order.
    pub fn evaluate_many(
        &self,
        inputs: &[ParameterList],
        config: &Config,
        parallelism: usize,
    ) -> Vec<Result<ParameterList, ClientError>> {
        let parallelism = parallelism.clamp(1, inputs.len().max(1));
        let next = std::sync::atomic::AtomicUsize::new(0);
        let mut slots: Vec<Option<Result<ParameterList, ClientError>>> = (0..inputs.len()).map(|_| None).collect();
        let results = std::sync::Mutex::new(&mut slots);
        thread::scope(|scope| {
            for _ in 0..parallelism {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= inputs.len() {
                        break;
                    }
                    let r = self.remote_evaluate(&inputs[i], config);
                    results.lock().unwrap()[i] = Some(r);
                });
            }
        });
        slots.into_iter().map(|r| r.expect("every input evaluated")).collect()
    }
}

impl Model for RemoteModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn input_sizes(&self, config: &Config) -> Result<Vec<usize>, ErrorPayload> {
        self.remote_input_sizes(config).map_err(ClientError::into_payload)
    }

    fn output_sizes(&self, config: &Config) -> Result<Vec<usize>, ErrorPayload> {
        self.remote_output_sizes(config).map_err(ClientError::into_payload)
    }

    fn capabilities(&self) -> Capabilities {
        self.capabilities
    }

    fn evaluate(&self, input: &ParameterList, config: &Config) -> Result<ParameterList, ErrorPayload> {
        self.remote_evaluate(input, config).map_err(ClientError::into_payload)
    }

    fn gradient(
        &self,
        out_wrt: usize,
        in_wrt: usize,
        input: &ParameterList,
        sens: &[f64],
        config: &Config,
    ) -> Result<Vec<f64>, ErrorPayload> {
        self.remote_gradient(out_wrt, in_wrt, input, sens, config)
            .map_err(ClientError::into_payload)
    }

    fn apply_jacobian(
        &self,
        out_wrt: usize,
        in_wrt: usize,
        input: &ParameterList,
        vec: &[f64],
        config: &Config,
    ) -> Result<Vec<f64>, ErrorPayload> {
        self.remote_apply_jacobian(out_wrt, in_wrt, input, vec, config)
            .map_err(ClientError::into_payload)
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
    ) -> Result<Vec<f64>, ErrorPayload> {
        self.remote_apply_hessian(out_wrt, in_wrt1, in_wrt2, input, sens, vec, config)
            .map_err(ClientError::into_payload)
    }
}
