//! Model server, client, load balancer and reference samplers for the
//! uqbridge protocol.

pub mod balancer;
pub mod catalog;
pub mod client;
pub mod server;
pub mod mc;
pub mod bench;
pub mod cli;
