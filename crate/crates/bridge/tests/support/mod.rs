//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use uqbridge::catalog;
use uqbridge::server::{self, ServerConfig, ServerHandle};
use uqbridge_core::{Model, ModelRegistry};

pub fn serve_names(names: &[&str]) -> ServerHandle {
    server::serve(catalog::registry_for(names).unwrap(), ServerConfig::with_port(0)).unwrap()
}

pub fn serve_models(models: Vec<Arc<dyn Model>>) -> ServerHandle {
    let mut registry = ModelRegistry::new();
    for m in models {
        registry.register(m).unwrap();
    }
    server::serve(registry, ServerConfig::with_port(0)).unwrap()
}

pub fn http() -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder().no_proxy().build().unwrap()
}

/// Raw request; returns status and body bytes.
pub fn raw(client: &reqwest::blocking::Client, method: &str, url: &str, body: &[u8]) -> (u16, Vec<u8>) {
    let request = match method {
        "GET" => client.get(url),
        "POST" => client.post(url).header("content-type", "application/json").body(body.to_vec()),
        other => client.request(reqwest::Method::from_bytes(other.as_bytes()).unwrap(), url),
    };
    let r = request.send().unwrap();
    let status = r.status().as_u16();
    (status, r.bytes().unwrap().to_vec())
}

pub fn post(url: &str, body: &str) -> (u16, String) {
    let (s, b) = raw(&http(), "POST", url, body.as_bytes());
    (s, String::from_utf8(b).unwrap())
}

pub fn get(url: &str) -> (u16, String) {
    let (s, b) = raw(&http(), "GET", url, b"");
    (s, String::from_utf8(b).unwrap())
}

/// Polls `cond` until it holds or `timeout` passes.
pub fn wait_until(timeout: Duration, mut cond: impl FnMut() -> bool) -> bool {
    let deadline = Instant::now() + timeout;
    while Instant::now() < deadline {
        if cond() {
            return true;
        }
        thread::sleep(Duration::from_millis(5));
    }
    cond()
}

/// A canned HTTP/1.1 server answering every request with `body`.
pub struct FixtureServer {
    pub url: String,
}

impl FixtureServer {
    pub fn start(status: u16, body: &'static str) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                thread::spawn(move || {
                    let _ = read_request(&mut stream);
                    let response = format!(
                        "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                        body.len()
                    );
                    let _ = stream.write_all(response.as_bytes());
                });
            }
        });
        Self { url }
    }
}

/// Reads one HTTP/1.1 message with a content-length body; `None` at EOF.
fn read_message(stream: &mut TcpStream) -> Option<Vec<u8>> {
    let mut buf = Vec::new();
    let mut byte = [0u8; 1];
    while !buf.ends_with(b"\r\n\r\n") {
        match stream.read(&mut byte) {
            Ok(1) => buf.push(byte[0]),
            _ => return None,
        }
    }
    let head = String::from_utf8_lossy(&buf).to_ascii_lowercase();
    let len = head
        .lines()
        .find_map(|l| l.strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap_or(0)))
        .unwrap_or(0);
    let mut body = vec![0u8; len];
    stream.read_exact(&mut body).ok()?;
    buf.extend_from_slice(&body);
    Some(buf)
}

fn read_request(stream: &mut TcpStream) -> Option<Vec<u8>> {
    read_message(stream)
}

/// Request-level TCP proxy: passes the first `skip` requests, kills the
/// connection on the next `drops` requests (after reading them, so the
/// client has sent them in full), then passes everything.
pub struct FlakyProxy {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

impl FlakyProxy {
    pub fn start(upstream: std::net::SocketAddr, skip: usize, drops: usize) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let counter = requests.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut client) = stream else { continue };
                let counter = counter.clone();
                thread::spawn(move || {
                    let Ok(mut server) = TcpStream::connect(upstream) else { return };
                    while let Some(request) = read_message(&mut client) {
                        let n = counter.fetch_add(1, Ordering::SeqCst);
                        if n >= skip && n < skip + drops {
                            let _ = client.shutdown(Shutdown::Both);
                            return;
                        }
                        if server.write_all(&request).is_err() {
                            return;
                        }
                        let Some(response) = read_message(&mut server) else { return };
                        if client.write_all(&response).is_err() {
                            return;
                        }
                    }
                });
            }
        });
        Self { url, requests }
    }
}
