//! Typed access to [`Config`] entries.

use alloc::format;
use alloc::string::String;

use crate::wire::{Config, ErrorPayload};

/// Reads optional, typed values out of a model configuration.
///
/// Missing keys fall back to the supplied default; present keys of the wrong
/// type are an `InvalidInput` error.
pub trait ConfigExt {
    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ErrorPayload>;
    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ErrorPayload>;
    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ErrorPayload>;
    fn str_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str, ErrorPayload>;
}

fn wrong_type(key: &str, expected: &str) -> ErrorPayload {
    ErrorPayload::invalid_input(format!("config key '{key}' must be {expected}"))
}

impl ConfigExt for Config {
    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ErrorPayload> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| wrong_type(key, "a number")),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ErrorPayload> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .and_then(|n| usize::try_from(n).ok())
                .ok_or_else(|| wrong_type(key, "a non-negative integer")),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ErrorPayload> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| wrong_type(key, "a boolean")),
        }
    }

    fn str_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str, ErrorPayload> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_str().ok_or_else(|| wrong_type(key, "a string")),
        }
    }
}

/// Builds a [`Config`] from key/value pairs.
pub fn config_from<I, K, V>(entries: I) -> Config
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<serde_json::Value>,
{
    entries.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}
