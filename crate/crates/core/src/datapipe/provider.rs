//! LLM transport: an HTTP chat-completions client and a scripted mock.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::encoding::Role;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProviderRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Record id, for providers that key their behaviour on it.
    pub id: String,
    pub role: Role,
    /// The news text the prompt was rendered from.
    pub input: String,
}

impl ProviderRequest {
    pub fn validate(&self) -> Result<()> {
        if self.prompt.trim().is_empty() {
            return Err(Error::arg("empty prompt"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProviderResponse {
    pub text: String,
    pub latency_ms: u64,
}

pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse>;
}

/// Connection settings for an OpenAI-compatible chat endpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_token_env")]
    pub token_env: String,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_content_template: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale_template: Option<PathBuf>,
    /// Stronger model used once the primary one keeps failing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<Box<ProviderConfig>>,
}

fn default_token_env() -> String {
    "FACTGUARD_API_TOKEN".into()
}
fn default_max_tokens() -> u32 {
    512
}
fn default_timeout() -> u64 {
    60
}

impl ProviderConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoint.trim().is_empty() || self.model.trim().is_empty() {
            return Err(Error::config("provider needs an endpoint and a model"));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::config(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if let Some(f) = &self.fallback {
            f.validate()?;
        }
        Ok(())
    }
}

pub struct HttpProvider {
    config: ProviderConfig,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self> {
        config.validate()?;
        let token = std::env::var(&config.token_env).ok();
        if token.is_none() {
            log::warn!("{} is not set; calling {} without a token", config.token_env, config.endpoint);
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_s))
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        Ok(Self { config, token, client })
    }
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse> {
        request.validate()?;
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        });
        let started = Instant::now();
        let mut call = self.client.post(&self.config.endpoint).json(&body);
        if let Some(t) = &self.token {
            call = call.bearer_auth(t);
        }
        let reply: Value = call
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| Error::Provider(format!("{}: {e}", self.config.endpoint)))?;
        let text = reply["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| Error::Provider(format!("{}: reply has no message content", self.config.endpoint)))?;
        Ok(ProviderResponse {
            text: text.to_string(),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum ScriptedReply {
    Text(String),
    Failure { error: String },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptLine {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    role: Option<Role>,
    responses: Vec<ScriptedReply>,
}

/// Deterministic mock driven by a JSON-lines script.
///
/// Each line is `{"id"?, "role"?, "responses": [...]}`; a response is either a
/// string or `{"error": "..."}`. Replies for a matching request are handed out
/// in order and the last one repeats. The most specific line wins (id and role,
/// then id, then role). Requests matching no line get the first sentence of
/// the news text, with `Verdict: other` appended for rationales.
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    name: String,
    lines: Vec<ScriptLine>,
    cursor: Mutex<HashMap<(usize, String), usize>>,
}

impl ScriptedProvider {
    pub fn echo() -> Self {
        Self {
            name: "mock".into(),
            ..Self::default()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, message)| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let l: ScriptLine = serde_json::from_str(line).map_err(|e| (i + 1, e.to_string()))?;
            if l.responses.is_empty() {
                return Err((i + 1, "script line has no responses".into()));
            }
            lines.push(l);
        }
        Ok(Self {
            name: "mock".into(),
            lines,
            cursor: Mutex::default(),
        })
    }

    pub fn from_script(text: &str) -> Result<Self> {
        Self::parse(text).map_err(|(line, m)| Error::config(format!("script line {line}: {m}")))
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.into();
        self
    }

    fn matching_line(&self, req: &ProviderRequest) -> Option<usize> {
        let score = |l: &ScriptLine| -> Option<u8> {
            let id_ok = l.id.as_deref().map(|i| i == req.id);
            let role_ok = l.role.map(|r| r == req.role);
            match (id_ok, role_ok) {
                (Some(false), _) | (_, Some(false)) => None,
                (Some(true), Some(true)) => Some(3),
                (Some(true), None) => Some(2),
                (None, Some(true)) => Some(1),
                (None, None) => Some(0),
            }
        };
        let mut best: Option<(u8, usize)> = None;
        for (i, l) in self.lines.iter().enumerate() {
            if let Some(s) = score(l) {
                if best.is_none_or(|(b, _)| s > b) {
                    best = Some((s, i));
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

pub fn first_sentence(text: &str) -> &str {
    let end = text
        .char_indices()
        .find(|&(_, c)| matches!(c, '.' | '!' | '?' | '。' | '！' | '？'))
        .map_or(text.len(), |(i, c)| i + c.len_utf8());
    text[..end].trim()
}

impl Provider for ScriptedProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, req: &ProviderRequest) -> Result<ProviderResponse> {
        req.validate()?;
        let Some(li) = self.matching_line(req) else {
            let s = first_sentence(&req.input);
            let text = match req.role {
                Role::Rationale => format!("{s} Verdict: other"),
                _ => s.to_string(),
            };
            return Ok(ProviderResponse { text, latency_ms: 0 });
        };
        let responses = &self.lines[li].responses;
        let k = {
            let mut cur = self.cursor.lock().expect("cursor lock");
            let slot = cur.entry((li, req.id.clone())).or_insert(0);
            let k = (*slot).min(responses.len() - 1);
            *slot += 1;
            k
        };
        match &responses[k] {
            ScriptedReply::Text(t) => Ok(ProviderResponse {
                text: t.clone(),
                latency_ms: 0,
            }),
            ScriptedReply::Failure { error } => Err(Error::Provider(format!("{}: {error}", self.name))),
        }
    }
}

/// Exponential backoff for transport failures. Empty completions count as
/// failures.
#[derive(Clone, Copy, Debug)]
pub struct RetryPolicy {
    pub max_attempts: usize,
    pub base_delay: Duration,
    pub sleep: fn(Duration),
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            sleep: std::thread::sleep,
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts.
    pub fn immediate(max_attempts: usize) -> Self {
        Self {
            max_attempts,
            base_delay: Duration::ZERO,
            sleep: |_| {},
        }
    }

    pub fn delay(&self, attempt: usize) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt as u32)
    }

    /// Calls `provider` until it returns nonempty text or attempts run out.
    pub fn call(&self, provider: &dyn Provider, req: &ProviderRequest) -> Result<ProviderResponse> {
        let mut last = Error::Provider(format!("{}: no attempts made", provider.name()));
        for attempt in 0..self.max_attempts.max(1) {
            if attempt > 0 {
                (self.sleep)(self.delay(attempt - 1));
            }
            match provider.complete(req) {
                Ok(r) if !r.text.trim().is_empty() => return Ok(r),
                Ok(_) => last = Error::Provider(format!("{}: empty completion", provider.name())),
                Err(e @ Error::Argument(_)) => return Err(e),
                Err(e) => last = e,
            }
            log::debug!("{} attempt {} for {} failed: {last}", provider.name(), attempt + 1, req.id);
        }
        Err(last)
    }
}

/// A primary provider plus an optional fallback tried when the primary is
/// exhausted.
pub struct ProviderChain<'a> {
    pub primary: &'a dyn Provider,
    pub fallback: Option<&'a dyn Provider>,
    pub retry: RetryPolicy,
}

impl ProviderChain<'_> {
    pub fn call(&self, req: &ProviderRequest, escalate: bool) -> Result<ProviderResponse> {
        if escalate {
            if let Some(f) = self.fallback {
                return self.retry.call(f, req);
            }
        }
        match self.retry.call(self.primary, req) {
            Ok(r) => Ok(r),
            Err(e) => match self.fallback {
                Some(f) => {
                    log::warn!("{} failed for {} ({e}); trying {}", self.primary.name(), req.id, f.name());
                    self.retry.call(f, req)
                }
                None => Err(e),
            },
        }
    }
}
