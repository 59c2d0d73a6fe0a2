//! Helpers shared by the integration suites: a scripted local HTTP
//! server standing in for the QRNG service, and a runner for the
//! compiled binary.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::process::Command;
use std::thread::JoinHandle;

/// Path of the compiled `rtn-trng` binary under test.
pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rtn-trng")
}

pub struct RunResult {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str]) -> RunResult {
    run_env(args, &[])
}

pub fn run_env(args: &[&str], envs: &[(&str, &str)]) -> RunResult {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    for (key, value) in envs {
        cmd.env(key, value);
    }
    let output = cmd.output().expect("binary spawns");
    RunResult {
        status: output.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

/// A one-shot local HTTP server that answers each incoming request with
/// the next scripted body (HTTP 200, JSON content type) and records the
/// request targets.
pub struct ScriptedServer {
    pub url: String,
    handle: Option<JoinHandle<Vec<String>>>,
}

impl ScriptedServer {
    pub fn start(bodies: Vec<String>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind local port");
        let url = format!("http://{}", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut targets = Vec::new();
            for body in bodies {
                let (mut stream, _) = listener.accept().expect("accept");
                targets.push(read_request_target(&mut stream));
                let response = format!(
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\n\
                     content-length: {}\r\nconnection: close\r\n\r\n{}",
                    body.len(),
                    body
                );
                stream.write_all(response.as_bytes()).expect("write response");
            }
            targets
        });
        ScriptedServer {
            url,
            handle: Some(handle),
        }
    }

    /// Waits for all scripted exchanges and returns the request targets
    /// (path + query string) in arrival order.
    pub fn finish(mut self) -> Vec<String> {
        self.handle.take().unwrap().join().expect("server thread")
    }
}

/// Reads one request head and returns its target; drains the headers so
/// the client sees a clean connection.
fn read_request_target(stream: &mut TcpStream) -> String {
    let mut reader = BufReader::new(stream);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).expect("request line");
    let target = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or_default()
        .to_string();
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).expect("header line");
        if line == "\r\n" || line.is_empty() {
            break;
        }
    }
    target
}

/// JSON body in the shape the QRNG service uses for a uint16 batch.
pub fn qrng_body(values: &[u16]) -> String {
    let data: Vec<String> = values.iter().map(u16::to_string).collect();
    format!(
        "{{\"type\":\"uint16\",\"length\":{},\"data\":[{}],\"success\":true}}",
        values.len(),
        data.join(",")
    )
}
