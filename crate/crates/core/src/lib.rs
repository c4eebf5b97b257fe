//! Core of the `uqbridge` model-evaluation bridge.
//!
//! This crate is `no_std` (it needs `alloc`) and carries everything that does
//! not touch sockets or threads:
//!
//! - [`wire`]: the JSON wire format shared by servers, clients and the load
//!   balancer, including request validation.
//! - [`model`]: the [`Model`](model::Model) trait with its four operations
//!   (evaluate, gradient, Jacobian action, Hessian action), the name registry
//!   and a finite-difference derivative wrapper.
//! - [`dispatch`]: turns a raw request (method, path, body) into a raw response
//!   against a registry.
//! - [`benchmarks`]: analytic densities, the Genz families, the
//!   Euler–Bernoulli beam, the membrane and the 1D deconvolution problem.
//! - [`sampling`]: seeded input generation, Monte Carlo summaries and a
//!   random-walk Metropolis–Hastings chain.
//!
//! The std companion crate (`uqbridge`) provides the HTTP server, the remote
//! client, the load balancer and the command line tool on top of this crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod benchmarks;
pub mod config;
pub mod dispatch;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod sampling;
pub mod wire;

pub use model::{ConcurrencyPolicy, Model, ModelRegistry};
pub use wire::{Capabilities, Config, ErrorKind, ErrorPayload, ParameterList};

/// Log-density value standing in for "outside the support".
///
/// It is finite so that it can travel over the wire; samplers treat anything at
/// or below [`LOG_DENSITY_FLOOR`] as a zero-probability state.
pub const NEG_INF_SENTINEL: f64 = -1.0e308;

/// Threshold at or below which a log-density is considered outside the support.
pub const LOG_DENSITY_FLOOR: f64 = -1.0e307;
