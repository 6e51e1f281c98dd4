use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ChatProvider, ChatRequest, LlmError, Provenance};

pub const ENV_ENDPOINT: &str = "LOCOMIND_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "LOCOMIND_LLM_MODEL";
pub const ENV_API_KEY: &str = "LOCOMIND_LLM_API_KEY";

const MAX_RETRIES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    /// Base URL; `/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    pub api_key: String,
    pub timeout_secs: u64,
    pub backoff_ms: u64,
}

impl LiveConfig {
    /// Reads endpoint, model and key from the environment; all three are
    /// required.
    pub fn from_env() -> Result<Self, LlmError> {
        let var = |name: &str| {
            std::env::var(name)
                .ok()
                .filter(|v| !v.trim().is_empty())
                .ok_or_else(|| LlmError::Config(format!("live provider needs ${name}")))
        };
        Ok(Self {
            endpoint: var(ENV_ENDPOINT)?,
            model: var(ENV_MODEL)?,
            api_key: var(ENV_API_KEY)?,
            timeout_secs: 120,
            backoff_ms: 500,
        })
    }
}

/// OpenAI-compatible `/chat/completions` client.
pub struct LiveProvider {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

enum Attempt {
    Retry(LlmError),
    Fatal(LlmError),
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Result<Self, LlmError> {
        if config.api_key.trim().is_empty() {
            return Err(LlmError::Config("empty API key".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn from_env() -> Result<Self, LlmError> {
        Self::new(LiveConfig::from_env()?)
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'))
    }

    fn post_once(&self, request: &ChatRequest, n: usize) -> Result<Vec<String>, Attempt> {
        let mut messages = Vec::new();
        if !request.system.is_empty() {
            messages.push(json!({"role": "system", "content": request.system}));
        }
        messages.push(json!({"role": "user", "content": request.user}));
        let body = json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": request.temperature,
            "n": n,
        });
        let resp = self
            .client
            .post(self.url())
            .bearer_auth(&self.config.api_key)
            .json(&body)
            .send()
            .map_err(|e| Attempt::Retry(LlmError::Transport(e.to_string())))?;
        let status = resp.status().as_u16();
        if status == 401 || status == 403 {
            return Err(Attempt::Fatal(LlmError::Auth(status)));
        }
        if status == 429 || status >= 500 {
            let body = resp.text().unwrap_or_default();
            return Err(Attempt::Retry(LlmError::Http { status, body }));
        }
        if !(200..300).contains(&status) {
            let body = resp.text().unwrap_or_default();
            return Err(Attempt::Fatal(LlmError::Http { status, body }));
        }
        let parsed: CompletionResponse = resp
            .json()
            .map_err(|e| Attempt::Fatal(LlmError::Protocol(e.to_string())))?;
        if parsed.choices.is_empty() {
            return Err(Attempt::Fatal(LlmError::Protocol("no choices in response".into())));
        }
        Ok(parsed
            .choices
            .into_iter()
            .map(|c| c.message.content.unwrap_or_default())
            .collect())
    }

    fn post_with_retries(&self, request: &ChatRequest, n: usize) -> Result<Vec<String>, LlmError> {
        let mut attempt = 0;
        loop {
            match self.post_once(request, n) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) if attempt >= MAX_RETRIES => return Err(e),
                Err(Attempt::Retry(e)) => {
                    log::warn!("chat request failed ({e}), retrying");
                    std::thread::sleep(Duration::from_millis(
                        self.config.backoff_ms << attempt,
                    ));
                    attempt += 1;
                }
            }
        }
    }
}

impl ChatProvider for LiveProvider {
    /// Some OpenAI-compatible servers ignore `n`; missing samples are
    /// requested again until `n_samples` responses are collected.
    fn complete(&self, request: &ChatRequest) -> Result<Vec<String>, LlmError> {
        let mut out = Vec::with_capacity(request.n_samples);
        while out.len() < request.n_samples {
            let missing = request.n_samples - out.len();
            let got = self.post_with_retries(request, missing)?;
            out.extend(got.into_iter().take(missing));
        }
        Ok(out)
    }

    fn provenance(&self) -> Provenance {
        Provenance {
            provider: "live".into(),
            model: self.config.model.clone(),
            timestamp_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
        }
    }
}
