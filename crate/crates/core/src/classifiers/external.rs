//! Clients for external base classifiers.
//!
//! Two transports are supported. A subprocess speaks a newline-delimited
//! protocol on stdin/stdout: requests are `PREDICT <base64 of token bytes>`,
//! responses are `CLASS <integer>` or `ERR <message>`, and a child may emit
//! `CAPS concurrent=<n>` once at startup to advertise pipelining. An HTTP
//! endpoint answers `POST /predict` with body `{"tokens_b64": "..."}` and
//! replies `{"class": <int>}` with status 200 on success.
//!
//! Both transports carry tokens as raw bytes, so they serve alphabets of at
//! most 256 tokens.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;

use super::BaseClassifier;
use crate::error::{Error, Result};
use crate::seq::TokenSeq;

fn encode_tokens(x: &TokenSeq) -> Result<String> {
    if x.alphabet().size() > 256 {
        return Err(Error::Protocol(format!(
            "external classifiers accept byte alphabets, got size {}",
            x.alphabet().size()
        )));
    }
    let bytes: Vec<u8> = x.tokens().iter().map(|&t| t as u8).collect();
    Ok(BASE64.encode(bytes))
}

fn parse_class(raw: &str, num_classes: usize) -> Result<usize> {
    let class: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Protocol(format!("bad class value {raw:?}")))?;
    if class >= num_classes {
        return Err(Error::ClassOutOfRange {
            class,
            classes: num_classes,
        });
    }
    Ok(class)
}

/// Parses one response line of the subprocess protocol.
pub(crate) fn parse_response_line(line: &str, num_classes: usize) -> Result<usize> {
    if let Some(rest) = line.strip_prefix("CLASS ") {
        return parse_class(rest, num_classes);
    }
    if let Some(msg) = line.strip_prefix("ERR ") {
        return Err(Error::Protocol(format!("classifier error: {msg}")));
    }
    Err(Error::Protocol(format!("unexpected response {line:?}")))
}

struct ChildIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    caps_checked: bool,
    max_in_flight: usize,
}

/// A base classifier served by a child process over stdin/stdout.
pub struct SubprocessClassifier {
    io: Mutex<ChildIo>,
    num_classes: usize,
}

impl SubprocessClassifier {
    /// Spawns `argv[0]` with the remaining arguments.
    pub fn spawn(argv: &[String], num_classes: usize) -> Result<Self> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| Error::InvalidConfig("empty subprocess command".to_string()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout was piped"));
        Ok(SubprocessClassifier {
            io: Mutex::new(ChildIo {
                child,
                stdin,
                stdout,
                caps_checked: false,
                max_in_flight: 1,
            }),
            num_classes,
        })
    }

    /// In-flight request limit advertised by the child (1 until a CAPS line
    /// has been observed).
    pub fn max_in_flight(&self) -> usize {
        self.io.lock().unwrap().max_in_flight
    }
}

impl BaseClassifier for SubprocessClassifier {
    fn query(&self, x: &TokenSeq) -> Result<usize> {
        let payload = encode_tokens(x)?;
        let mut io = self.io.lock().unwrap();
        writeln!(io.stdin, "PREDICT {payload}")?;
        io.stdin.flush()?;
        loop {
            let mut line = String::new();
            if io.stdout.read_line(&mut line)? == 0 {
                return Err(Error::Protocol("classifier closed its stdout".to_string()));
            }
            let trimmed = line.trim_end();
            // The optional handshake may arrive before the first response.
            if !io.caps_checked {
                io.caps_checked = true;
                if let Some(rest) = trimmed.strip_prefix("CAPS ") {
                    if let Some(n) = rest.strip_prefix("concurrent=") {
                        io.max_in_flight = n.trim().parse().unwrap_or(1);
                    }
                    continue;
                }
            }
            return parse_response_line(trimmed, self.num_classes);
        }
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn concurrent_queries(&self) -> bool {
        // Queries are serialized on the pipe regardless of what the child
        // advertises, so concurrent callers are safe.
        true
    }
}

impl Drop for SubprocessClassifier {
    fn drop(&mut self) {
        if let Ok(mut io) = self.io.lock() {
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}

/// A base classifier behind an HTTP prediction endpoint.
pub struct HttpClassifier {
    url: String,
    num_classes: usize,
    retries: u32,
    agent: ureq::Agent,
}

impl HttpClassifier {
    /// `base_url` is the server root; requests go to `<base_url>/predict`.
    pub fn new(base_url: &str, num_classes: usize, retries: u32) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(30))
            .build();
        HttpClassifier {
            url: format!("{}/predict", base_url.trim_end_matches('/')),
            num_classes,
            retries,
            agent,
        }
    }
}

impl BaseClassifier for HttpClassifier {
    fn query(&self, x: &TokenSeq) -> Result<usize> {
        let body =
            serde_json::json!({ "tokens_b64": encode_tokens(x)? });
        let attempts = self.retries.max(1);
        let mut last_error = String::new();
        for _ in 0..attempts {
            match self.agent.post(&self.url).send_json(body.clone()) {
                Ok(response) => {
                    let parsed: serde_json::Value = response
                        .into_json()
                        .map_err(|e| Error::Protocol(format!("bad response body: {e}")))?;
                    let class = parsed
                        .get("class")
                        .and_then(|v| v.as_u64())
                        .ok_or_else(|| {
                            Error::Protocol(format!("response missing class field: {parsed}"))
                        })?;
                    return parse_class(&class.to_string(), self.num_classes);
                }
                Err(ureq::Error::Status(code, _)) => {
                    return Err(Error::Protocol(format!("endpoint returned status {code}")));
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(Error::Transport {
            attempts,
            message: last_error,
        })
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn concurrent_queries(&self) -> bool {
        true
    }
}
