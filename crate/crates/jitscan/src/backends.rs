//! Backend selection for runs and scans.

use std::sync::Mutex;

use jitscan_core::agent::{BackendError, Decoding, ModelBackend, ScriptedBackend};
use serde_json::json;

use crate::gateway::{GatewayBackend, GatewayConfig};
use crate::script::Script;

#[derive(Debug)]
pub enum BackendSpec {
    Scripted { script: Script, digest: String },
    Gateway(GatewayConfig),
}

/// A sequential script shared by every detector run, consumed in run order.
struct Shared<'a>(&'a Mutex<ScriptedBackend>);

impl ModelBackend for Shared<'_> {
    fn complete(&mut self, prompt: &str, decoding: &Decoding) -> Result<String, BackendError> {
        self.0
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .complete(prompt, decoding)
    }
}

/// Hands out one backend per detector run.
pub struct BackendPool<'a> {
    spec: &'a BackendSpec,
    shared: Option<Mutex<ScriptedBackend>>,
    gateway: Option<GatewayBackend>,
}

impl<'a> BackendPool<'a> {
    pub fn new(spec: &'a BackendSpec) -> Self {
        let shared = match spec {
            BackendSpec::Scripted {
                script: Script::Sequential(steps),
                ..
            } => Some(Mutex::new(ScriptedBackend::new(steps.clone()))),
            _ => None,
        };
        let gateway = match spec {
            BackendSpec::Gateway(cfg) => Some(GatewayBackend::new(cfg.clone())),
            _ => None,
        };
        BackendPool { spec, shared, gateway }
    }

    /// Whether runs may proceed concurrently without changing results.
    pub fn allows_parallel(&self) -> bool {
        !matches!(
            self.spec,
            BackendSpec::Scripted {
                script: Script::Sequential(_),
                ..
            }
        )
    }

    pub fn backend(&self, key: &str) -> Box<dyn ModelBackend + Send + '_> {
        match self.spec {
            BackendSpec::Scripted {
                script: Script::Keyed(map),
                ..
            } => Box::new(ScriptedBackend::new(map.get(key).cloned().unwrap_or_default())),
            BackendSpec::Scripted { .. } => Box::new(Shared(self.shared.as_ref().expect("shared script"))),
            BackendSpec::Gateway(_) => Box::new(self.gateway.clone().expect("gateway backend")),
        }
    }
}

impl BackendSpec {
    /// Stable description that enters the run's configuration hash.
    pub fn descriptor(&self) -> serde_json::Value {
        match self {
            BackendSpec::Scripted { script, digest } => json!({
                "kind": "scripted",
                "keyed": script.is_keyed(),
                "sha256": digest,
            }),
            BackendSpec::Gateway(cfg) => json!({
                "kind": "gateway",
                "url": cfg.url,
            }),
        }
    }
}
