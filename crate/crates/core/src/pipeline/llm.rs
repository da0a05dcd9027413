// SPDX-License-Identifier: Apache-2.0

//! Chat-completions transport (OpenAI-style wire format).

use serde_json::{json, Value};

use super::backend::{Backend, BackendConfig, BackendError, StageRequest};

pub struct LlmBackend {
    config: BackendConfig,
    agent: ureq::Agent,
    name: String,
}

impl LlmBackend {
    pub fn new(config: BackendConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let name = format!("llm:{}", config.model.as_deref().unwrap_or("?"));
        LlmBackend { config, agent, name }
    }

    fn body(&self, request: &StageRequest) -> Value {
        json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": request.prompt.system},
                {"role": "user", "content": request.prompt.user},
            ],
        })
    }

    fn post(&self, body: &Value) -> Result<ureq::http::Response<ureq::Body>, ureq::Error> {
        let endpoint = self.config.endpoint.as_deref().expect("checked config");
        let mut req = self.agent.post(endpoint).header("Content-Type", "application/json");
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            if !key.is_empty() {
                req = req.header("Authorization", format!("Bearer {key}"));
            }
        }
        req.send_json(body)
    }
}

fn is_transport(err: &ureq::Error) -> bool {
    matches!(
        err,
        ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::HostNotFound | ureq::Error::ConnectionFailed
    )
}

impl Backend for LlmBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, request: &StageRequest) -> Result<String, BackendError> {
        let body = self.body(request);
        let response = match self.post(&body) {
            Err(err) if is_transport(&err) => self.post(&body),
            other => other,
        };
        let mut response = response.map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(BackendError::Unavailable(format!("endpoint answered HTTP {}", status.as_u16())));
        }
        let payload: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Unavailable(format!("malformed response body: {e}")))?;
        payload["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Unavailable("response has no choices[0].message.content".into()))
    }
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;
    use std::thread;
    use std::time::Duration;

    use super::*;
    use crate::pipeline::backend::{Stage, StageContext};
    use crate::pipeline::prompts::Prompt;

    /// Serves `replies` in order, one per connection, and forwards each
    /// request body.
    fn stub(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for (status, body) in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; length];
                reader.read_exact(&mut buf).unwrap();
                tx.send(String::from_utf8(buf).unwrap()).unwrap();
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/v1/chat/completions"), rx)
    }

    fn request() -> StageRequest {
        StageRequest {
            stage: Stage::Identify,
            prompt: Prompt { system: "sys".into(), user: "usr".into() },
            context: StageContext::default(),
        }
    }

    #[test]
    fn sends_chat_request_and_reads_first_choice() {
        let (url, rx) = stub(vec![(200, r#"{"choices":[{"message":{"role":"assistant","content":"cp5"}}]}"#.into())]);
        let mut config = BackendConfig::llm(url, "test-model");
        config.timeout = Duration::from_secs(5);
        let backend = LlmBackend::new(config);
        assert_eq!(backend.complete(&request()).unwrap(), "cp5");
        let sent: Value = serde_json::from_str(&rx.recv().unwrap()).unwrap();
        assert_eq!(sent["model"], "test-model");
        assert_eq!(sent["temperature"], 0.0);
        assert_eq!(sent["messages"][0]["role"], "system");
        assert_eq!(sent["messages"][0]["content"], "sys");
        assert_eq!(sent["messages"][1]["content"], "usr");
    }

    #[test]
    fn http_errors_and_bad_payloads_are_unavailable() {
        let (url, _rx) = stub(vec![(500, "{}".into()), (200, r#"{"choices":[]}"#.into())]);
        let backend = LlmBackend::new(BackendConfig::llm(url, "m"));
        assert!(matches!(backend.complete(&request()), Err(BackendError::Unavailable(_))));
        assert!(matches!(backend.complete(&request()), Err(BackendError::Unavailable(_))));
    }

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let mut config = BackendConfig::llm(format!("http://127.0.0.1:{port}/"), "m");
        config.timeout = Duration::from_secs(2);
        assert!(matches!(LlmBackend::new(config).complete(&request()), Err(BackendError::Unavailable(_))));
    }
}
