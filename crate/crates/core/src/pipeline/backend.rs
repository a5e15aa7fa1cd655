//! Chat-completion backend abstraction: one interface, two shipped
//! implementations. The HTTP client speaks the de-facto chat-completions
//! JSON protocol; the scripted provider maps (phase, entry) to canned
//! responses for tests and offline runs.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Phase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub phase: Phase,
    pub entry_id: String,
    pub system_prompt: String,
    pub user_prompt: String,
    pub model: String,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub latency_ms: u64,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend transport failure: {message}")]
    Transport { message: String, retryable: bool },
    #[error("response of {size} bytes exceeds cap of {cap}")]
    ResponseTooLarge { size: usize, cap: usize },
    #[error("scripted provider has no response for phase {phase} entry {entry_id}")]
    NoScript { phase: Phase, entry_id: String },
}

impl BackendError {
    pub fn retryable(&self) -> bool {
        matches!(
            self,
            BackendError::Transport {
                retryable: true,
                ..
            }
        )
    }
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, BackendError>;
    fn name(&self) -> &'static str;
    /// Deterministic backends drive the logical clock and skip retry sleeps.
    fn deterministic(&self) -> bool {
        false
    }
}

// ---------------------------------------------------------------------------
// Scripted provider
// ---------------------------------------------------------------------------

/// Deterministic stand-in for the model backend. Responses are keyed by
/// (phase, entry id) as consumable sequences, with per-phase defaults as a
/// fallback. Sequences are confined to one entry, so parallel batch runs
/// stay deterministic.
#[derive(Default)]
pub struct ScriptedBackend {
    scripts: Mutex<BTreeMap<(Phase, String), VecDeque<String>>>,
    defaults: BTreeMap<Phase, String>,
    fail_first: Mutex<BTreeMap<(Phase, String), u32>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fixed fallback response for a phase, shared by all entries.
    pub fn with_default(mut self, phase: Phase, text: impl Into<String>) -> Self {
        self.defaults.insert(phase, text.into());
        self
    }

    /// Queue a response for (phase, entry); repeated calls build a sequence
    /// consumed in order. The last response is repeated once the queue
    /// drains.
    pub fn with_response(
        self,
        phase: Phase,
        entry_id: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        self.scripts
            .lock()
            .expect("script lock")
            .entry((phase, entry_id.into()))
            .or_default()
            .push_back(text.into());
        self
    }

    /// Inject `n` retryable transport failures before (phase, entry)
    /// responses succeed.
    pub fn with_failures(self, phase: Phase, entry_id: impl Into<String>, n: u32) -> Self {
        self.fail_first
            .lock()
            .expect("failure lock")
            .insert((phase, entry_id.into()), n);
        self
    }

    /// Load a script file: JSON with per-phase `defaults` and an ordered
    /// `responses` list of {entry, phase, text}.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        #[derive(Deserialize)]
        struct RawScript {
            #[serde(default)]
            defaults: BTreeMap<String, String>,
            #[serde(default)]
            responses: Vec<RawResponse>,
        }
        #[derive(Deserialize)]
        struct RawResponse {
            entry: String,
            phase: String,
            text: String,
        }
        let bytes = std::fs::read(path).map_err(|e| format!("cannot read script: {e}"))?;
        let raw: RawScript =
            serde_json::from_slice(&bytes).map_err(|e| format!("invalid script JSON: {e}"))?;
        let mut backend = ScriptedBackend::new();
        for (phase, text) in raw.defaults {
            let phase = Phase::parse(&phase).ok_or(format!("unknown phase `{phase}`"))?;
            backend = backend.with_default(phase, text);
        }
        for r in raw.responses {
            let phase = Phase::parse(&r.phase).ok_or(format!("unknown phase `{}`", r.phase))?;
            backend = backend.with_response(phase, r.entry, r.text);
        }
        Ok(backend)
    }
}

impl CompletionBackend for ScriptedBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let key = (req.phase, req.entry_id.clone());
        {
            let mut failures = self.fail_first.lock().expect("failure lock");
            if let Some(n) = failures.get_mut(&key) {
                if *n > 0 {
                    *n -= 1;
                    return Err(BackendError::Transport {
                        message: "scripted transport failure".into(),
                        retryable: true,
                    });
                }
            }
        }
        let mut scripts = self.scripts.lock().expect("script lock");
        let text = match scripts.get_mut(&key) {
            Some(queue) if queue.len() > 1 => queue.pop_front(),
            Some(queue) => queue.front().cloned(),
            None => None,
        };
        let text = text.or_else(|| self.defaults.get(&req.phase).cloned());
        match text {
            Some(text) => Ok(CompletionResponse {
                text,
                prompt_tokens: None,
                completion_tokens: None,
                latency_ms: 0,
            }),
            None => Err(BackendError::NoScript {
                phase: req.phase,
                entry_id: req.entry_id.clone(),
            }),
        }
    }

    fn name(&self) -> &'static str {
        "scripted"
    }

    fn deterministic(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// HTTP provider
// ---------------------------------------------------------------------------

/// Blocking client for a chat-completions endpoint:
/// POST {base_url}/chat/completions with {model, messages, temperature}.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
    max_response_bytes: usize,
}

impl HttpBackend {
    /// `api_key_env` names the environment variable holding the key; a
    /// missing variable means unauthenticated requests (local endpoints).
    pub fn new(base_url: &str, api_key_env: &str, max_response_bytes: usize) -> Self {
        Self {
            client: reqwest::blocking::Client::new(),
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key: std::env::var(api_key_env).ok().filter(|k| !k.is_empty()),
            max_response_bytes,
        }
    }

    pub fn has_key(&self) -> bool {
        self.api_key.is_some()
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: String,
}

#[derive(Deserialize)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: Option<u64>,
    #[serde(default)]
    completion_tokens: Option<u64>,
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, BackendError> {
        let url = format!("{}/chat/completions", self.base_url);
        let body = serde_json::json!({
            "model": req.model,
            "messages": [
                { "role": "system", "content": req.system_prompt },
                { "role": "user", "content": req.user_prompt }
            ],
            "temperature": req.temperature,
        });
        let started = Instant::now();
        let mut http = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let response = http.send().map_err(|e| BackendError::Transport {
            message: e.to_string(),
            retryable: true,
        })?;
        let status = response.status();
        if !status.is_success() {
            // Rate limits and server errors are worth retrying; the rest of
            // the 4xx space is not.
            let retryable = status.as_u16() == 429 || status.is_server_error();
            return Err(BackendError::Transport {
                message: format!("HTTP {status}"),
                retryable,
            });
        }
        let bytes = response.bytes().map_err(|e| BackendError::Transport {
            message: e.to_string(),
            retryable: true,
        })?;
        if bytes.len() > self.max_response_bytes {
            return Err(BackendError::ResponseTooLarge {
                size: bytes.len(),
                cap: self.max_response_bytes,
            });
        }
        let parsed: ChatResponse =
            serde_json::from_slice(&bytes).map_err(|e| BackendError::Transport {
                message: format!("unreadable completion response: {e}"),
                retryable: false,
            })?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or(BackendError::Transport {
                message: "completion response has no choices".into(),
                retryable: false,
            })?;
        Ok(CompletionResponse {
            text,
            prompt_tokens: parsed.usage.as_ref().and_then(|u| u.prompt_tokens),
            completion_tokens: parsed.usage.as_ref().and_then(|u| u.completion_tokens),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }

    fn name(&self) -> &'static str {
        "http"
    }
}
