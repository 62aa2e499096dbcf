use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding { temperature: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("scripted backend ran out of completions")]
    ScriptExhausted,
    #[error("injected fault: {0}")]
    Injected(String),
    #[error("timeout: {0}")]
    Timeout(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol: {0}")]
    Protocol(String),
}

/// A text-completion model.
///
/// `complete` takes `&mut self`; a backend shared between concurrently
/// running samples has to be wrapped by the caller.
pub trait ModelBackend {
    fn complete(&mut self, prompt: &str, decoding: &Decoding) -> Result<String, BackendError>;
}

impl<B: ModelBackend + ?Sized> ModelBackend for &mut B {
    fn complete(&mut self, prompt: &str, decoding: &Decoding) -> Result<String, BackendError> {
        (**self).complete(prompt, decoding)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScriptStep {
    Text(String),
    /// Fail the call with [`BackendError::Injected`].
    Error(String),
}

/// Replays a fixed sequence of completions, in order, ignoring the prompt.
/// Prompts it receives are kept for inspection.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    steps: VecDeque<ScriptStep>,
    prompts: Vec<String>,
}

impl ScriptedBackend {
    pub fn new(steps: impl IntoIterator<Item = ScriptStep>) -> Self {
        ScriptedBackend {
            steps: steps.into_iter().collect(),
            prompts: Vec::new(),
        }
    }

    pub fn from_texts<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Self {
        Self::new(texts.into_iter().map(|t| ScriptStep::Text(t.into())))
    }

    pub fn remaining(&self) -> usize {
        self.steps.len()
    }

    pub fn prompts(&self) -> &[String] {
        &self.prompts
    }
}

impl ModelBackend for ScriptedBackend {
    fn complete(&mut self, prompt: &str, _decoding: &Decoding) -> Result<String, BackendError> {
        self.prompts.push(prompt.into());
        match self.steps.pop_front() {
            Some(ScriptStep::Text(text)) => Ok(text),
            Some(ScriptStep::Error(message)) => Err(BackendError::Injected(message)),
            None => Err(BackendError::ScriptExhausted),
        }
    }
}
