//! HTTP model gateway.
//!
//! One POST per completion with `{"prompt", "temperature"}`; the reply is
//! `{"text"}`. The endpoint comes from `JITSCAN_MODEL_URL` and an optional
//! bearer credential from `JITSCAN_MODEL_KEY`.

use std::time::Duration;

use jitscan_core::agent::{BackendError, Decoding, ModelBackend};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const URL_VAR: &str = "JITSCAN_MODEL_URL";
pub const KEY_VAR: &str = "JITSCAN_MODEL_KEY";

#[derive(Clone)]
pub struct GatewayConfig {
    pub url: String,
    pub key: Option<String>,
    pub timeout: Duration,
}

impl std::fmt::Debug for GatewayConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GatewayConfig")
            .field("url", &self.url)
            .field("key", &self.key.as_ref().map(|_| "<redacted>"))
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl GatewayConfig {
    pub fn from_env() -> Result<Self> {
        let url = std::env::var(URL_VAR)
            .ok()
            .filter(|u| !u.trim().is_empty())
            .ok_or_else(|| Error::Config(format!("{URL_VAR} is not set")))?;
        Ok(GatewayConfig {
            url,
            key: std::env::var(KEY_VAR).ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(300),
        })
    }
}

#[derive(Serialize)]
struct Request<'a> {
    prompt: &'a str,
    temperature: f64,
}

#[derive(Deserialize)]
struct Response {
    text: String,
}

#[derive(Clone)]
pub struct GatewayBackend {
    agent: ureq::Agent,
    config: GatewayConfig,
}

impl GatewayBackend {
    pub fn new(config: GatewayConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        GatewayBackend { agent, config }
    }
}

impl ModelBackend for GatewayBackend {
    fn complete(&mut self, prompt: &str, decoding: &Decoding) -> Result<String, BackendError> {
        let mut request = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let body = Request {
            prompt,
            temperature: decoding.temperature,
        };
        let mut response = request.send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(_) => BackendError::Timeout(e.to_string()),
            other => BackendError::Transport(other.to_string()),
        })?;
        let status = response.status();
        if !status.is_success() {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Err(BackendError::Protocol(format!(
                "status {}: {}",
                status.as_u16(),
                detail.trim()
            )));
        }
        let parsed: Response = response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Protocol(format!("bad response body: {e}")))?;
        Ok(parsed.text)
    }
}
