//! Chat-completion wire client and the text session built on it.

use std::collections::BTreeMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Learner, LearnerError, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    RemoteChat,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReasoningEffort {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub model_name: String,
    pub temperature: f64,
    pub top_p: f64,
    /// When set, sent instead of the sampling fields.
    pub reasoning_effort: Option<ReasoningEffort>,
    pub endpoint: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub max_inflight: usize,
    pub debug_wire: bool,
    pub baseline_params: BTreeMap<String, String>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            kind: LearnerKind::Baseline,
            model_name: "gpt-4o".into(),
            temperature: 0.0,
            top_p: 1.0,
            reasoning_effort: None,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            timeout_secs: 120,
            max_retries: 5,
            api_key_env: "IMPLANG_API_KEY".into(),
            initial_backoff_ms: 1000,
            max_backoff_ms: 60_000,
            max_inflight: 4,
            debug_wire: false,
            baseline_params: BTreeMap::new(),
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LearnerError::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(LearnerError::Config(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.max_inflight == 0 {
            return Err(LearnerError::Config(
                "max_inflight must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Backoff before retry `attempt` (0-based), without jitter.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .initial_backoff_ms
            .saturating_mul(1u64 << attempt.min(32));
        Duration::from_millis(ms.min(self.max_backoff_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

pub trait ChatBackend: Send + Sync {
    /// First completion for the full message list.
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LearnerError>;
}

/// Bounds the number of requests in flight across sessions.
pub struct InflightLimiter {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InflightLimiter {
    pub fn new(limit: usize) -> Arc<Self> {
        Arc::new(Self {
            limit: limit.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        })
    }

    pub fn acquire(&self) -> InflightGuard<'_> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        InflightGuard { limiter: self }
    }

    pub fn active(&self) -> usize {
        *self.active.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub struct InflightGuard<'a> {
    limiter: &'a InflightLimiter,
}

impl Drop for InflightGuard<'_> {
    fn drop(&mut self) {
        let mut active = self
            .limiter
            .active
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        *active -= 1;
        self.limiter.freed.notify_one();
    }
}

pub struct HttpChatBackend {
    config: LearnerConfig,
    api_key: String,
    agent: ureq::Agent,
    limiter: Arc<InflightLimiter>,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(LearnerError),
}

impl HttpChatBackend {
    /// Fails with a configuration error when the credential variable is
    /// unset, before any request is made.
    pub fn new(config: LearnerConfig, limiter: Arc<InflightLimiter>) -> Result<Self, LearnerError> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| {
                LearnerError::Config(format!(
                    "environment variable {} is not set",
                    config.api_key_env
                ))
            })?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            config,
            api_key,
            agent,
            limiter,
        })
    }

    pub fn request_body(&self, messages: &[ChatMessage]) -> Value {
        let mut body = json!({
            "model": self.config.model_name,
            "messages": messages,
        });
        match self.config.reasoning_effort {
            Some(effort) => body["reasoning_effort"] = json!(effort),
            None => {
                body["temperature"] = json!(self.config.temperature);
                body["top_p"] = json!(self.config.top_p);
            }
        }
        body
    }

    fn redact(&self, text: &str) -> String {
        text.replace(&self.api_key, "[REDACTED]")
    }

    fn attempt(&self, body: &str) -> Attempt {
        let _slot = self.limiter.acquire();
        let result = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body);
        let mut response = match result {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry(format!("transport error: {}", self.redact(&e.to_string())))
            }
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        if self.config.debug_wire {
            log::info!(target: "wire", "<- {status} {}", self.redact(&text));
        }
        match status {
            200..=299 => match extract_content(&text) {
                Some(content) => Attempt::Done(content),
                None => {
                    log::error!("malformed completion payload: {}", self.redact(&text));
                    Attempt::Fatal(LearnerError::Protocol {
                        detail: "missing choices[0].message.content".into(),
                        payload: self.redact(&text),
                    })
                }
            },
            429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Fatal(LearnerError::Http(format!(
                "HTTP {status}: {}",
                self.redact(&text)
            ))),
        }
    }
}

fn extract_content(payload: &str) -> Option<String> {
    let v: Value = serde_json::from_str(payload).ok()?;
    v.get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_owned)
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LearnerError> {
        let body = self.request_body(messages).to_string();
        if self.config.debug_wire {
            log::info!(target: "wire", "-> POST {} (Authorization: Bearer [REDACTED]) {body}", self.config.endpoint);
        }
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let base = self.config.backoff(attempt - 1);
                let jitter = rand::thread_rng().gen_range(0.5..=1.0);
                let delay = base.mul_f64(jitter);
                log::warn!("{last}; retrying in {} ms", delay.as_millis());
                std::thread::sleep(delay);
            }
            match self.attempt(&body) {
                Attempt::Done(content) => return Ok(content),
                Attempt::Retry(reason) => last = reason,
                Attempt::Fatal(e) => return Err(e),
            }
        }
        Err(LearnerError::RetriesExhausted {
            attempts: self.config.max_retries + 1,
            last,
        })
    }
}

/// A running conversation. The history only grows when a reply arrives.
pub struct TextSession {
    backend: Box<dyn ChatBackend>,
    history: Vec<ChatMessage>,
}

impl TextSession {
    pub fn new(backend: Box<dyn ChatBackend>) -> Self {
        Self {
            backend,
            history: Vec::new(),
        }
    }

    pub fn history(&self) -> &[ChatMessage] {
        &self.history
    }

    pub fn send(&mut self, user_text: &str) -> Result<String, LearnerError> {
        let mut messages = self.history.clone();
        messages.push(ChatMessage::user(user_text));
        let reply = self.backend.complete(&messages)?;
        messages.push(ChatMessage::assistant(reply.clone()));
        self.history = messages;
        Ok(reply)
    }
}

pub struct ChatLearner {
    session: TextSession,
    name: String,
}

impl ChatLearner {
    pub fn new(backend: Box<dyn ChatBackend>, name: impl Into<String>) -> Self {
        Self {
            session: TextSession::new(backend),
            name: name.into(),
        }
    }

    pub fn session(&self) -> &TextSession {
        &self.session
    }
}

impl Learner for ChatLearner {
    fn respond(&mut self, step: &Step) -> Result<String, LearnerError> {
        self.session.send(&step.text)
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flaky {
        fail: bool,
    }

    impl ChatBackend for Flaky {
        fn complete(&self, messages: &[ChatMessage]) -> Result<String, LearnerError> {
            if self.fail {
                Err(LearnerError::Http("boom".into()))
            } else {
                Ok(format!("seen {}", messages.len()))
            }
        }
    }

    #[test]
    fn history_is_atomic() {
        let mut s = TextSession::new(Box::new(Flaky { fail: false }));
        assert_eq!(s.send("a").unwrap(), "seen 1");
        assert_eq!(s.send("b").unwrap(), "seen 3");
        assert_eq!(s.history().len(), 4);
        let mut s = TextSession::new(Box::new(Flaky { fail: true }));
        assert!(s.send("a").is_err());
        assert!(s.history().is_empty());
    }

    #[test]
    fn config_bounds() {
        let ok = LearnerConfig::default();
        assert!(ok.validate().is_ok());
        assert!(LearnerConfig {
            temperature: -0.1,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(LearnerConfig {
            top_p: 0.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(LearnerConfig {
            top_p: 1.5,
            ..ok.clone()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn backoff_schedule() {
        let c = LearnerConfig::default();
        assert_eq!(c.backoff(0), Duration::from_secs(1));
        assert_eq!(c.backoff(1), Duration::from_secs(2));
        assert_eq!(c.backoff(5), Duration::from_secs(32));
        assert_eq!(c.backoff(6), Duration::from_secs(60));
        assert_eq!(c.backoff(40), Duration::from_secs(60));
    }

    #[test]
    fn content_extraction() {
        assert_eq!(
            extract_content(r#"{"choices":[{"message":{"role":"assistant","content":"ok"}}]}"#)
                .as_deref(),
            Some("ok")
        );
        assert_eq!(extract_content(r#"{"choices":[]}"#), None);
        assert_eq!(extract_content("not json"), None);
    }

    #[test]
    fn limiter_counts() {
        let l = InflightLimiter::new(2);
        let a = l.acquire();
        let _b = l.acquire();
        assert_eq!(l.active(), 2);
        drop(a);
        assert_eq!(l.active(), 1);
    }
}
