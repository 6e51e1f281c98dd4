//! Boundary to the language model.
//!
//! A [`Gateway`] wraps either a live OpenAI-compatible chat endpoint or a
//! scripted transcript, and appends every response it hands out to a
//! transcript log. A log written during a live session can be replayed
//! through [`ScriptedProvider`] to reproduce a run exactly.

mod live;
pub mod parse;
pub mod prompts;
mod scripted;

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use live::{LiveConfig, LiveProvider, ENV_API_KEY, ENV_ENDPOINT, ENV_MODEL};
pub use scripted::ScriptedProvider;

/// Sampling temperature for the three-candidate voting/averaging calls.
pub const SAMPLING_TEMPERATURE: f64 = 0.7;
/// Temperature for single calls whose output must parse.
pub const PARSING_TEMPERATURE: f64 = 0.0;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("malformed endpoint response: {0}")]
    Protocol(String),
    #[error("script exhausted: no response left for template `{template_id}` at ordinal {ordinal}")]
    ScriptExhausted { template_id: String, ordinal: usize },
    #[error("transcript line {line}: {reason}")]
    Transcript { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    /// Template name, optionally scoped (`lss_location/uphill_slope`).
    pub template_id: String,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub n_samples: usize,
}

impl ChatRequest {
    pub fn new(template_id: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            template_id: template_id.into(),
            system: String::new(),
            user: user.into(),
            temperature: PARSING_TEMPERATURE,
            n_samples: 1,
        }
    }

    pub fn samples(mut self, n: usize, temperature: f64) -> Self {
        self.n_samples = n;
        self.temperature = temperature;
        self
    }

    /// Hex SHA-256 over system and user text.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.system.as_bytes());
        h.update([0u8]);
        h.update(self.user.as_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub provider: String,
    pub model: String,
    /// Milliseconds since the Unix epoch; zero for scripted replies.
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub request: ChatRequest,
    pub responses: Vec<String>,
    pub provenance: Provenance,
}

/// A source of chat completions.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<Vec<String>, LlmError>;

    fn provenance(&self) -> Provenance;
}

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub template_id: String,
    pub ordinal: usize,
    #[serde(default)]
    pub request_hash: String,
    pub response: String,
}

/// Parses a line-delimited JSON transcript. Blank lines and lines starting
/// with `//` are skipped.
pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptRecord>, LlmError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("//") {
            continue;
        }
        let rec: TranscriptRecord =
            serde_json::from_str(trimmed).map_err(|e| LlmError::Transcript {
                line: i + 1,
                reason: e.to_string(),
            })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn transcript_to_jsonl(records: &[TranscriptRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("transcript records serialize"));
        out.push('\n');
    }
    out
}

/// Provider plus an append-only transcript of everything it returned.
pub struct Gateway {
    provider: Box<dyn ChatProvider>,
    log: Mutex<GatewayLog>,
}

#[derive(Default)]
struct GatewayLog {
    records: Vec<TranscriptRecord>,
    ordinals: HashMap<String, usize>,
    exchanges: Vec<ChatExchange>,
}

impl Gateway {
    pub fn new(provider: Box<dyn ChatProvider>) -> Self {
        Self {
            provider,
            log: Mutex::new(GatewayLog::default()),
        }
    }

    pub fn scripted(records: Vec<TranscriptRecord>) -> Self {
        Self::new(Box::new(ScriptedProvider::new(records)))
    }

    pub fn scripted_from_file(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::new(Box::new(ScriptedProvider::from_file(path)?)))
    }

    /// Builds a live gateway from environment variables; fails immediately if
    /// the credentials are missing.
    pub fn live_from_env() -> Result<Self, LlmError> {
        Ok(Self::new(Box::new(LiveProvider::from_env()?)))
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<ChatExchange, LlmError> {
        let responses = self.provider.complete(request)?;
        if responses.len() != request.n_samples {
            return Err(LlmError::Protocol(format!(
                "asked for {} samples, provider returned {}",
                request.n_samples,
                responses.len()
            )));
        }
        let exchange = ChatExchange {
            request: request.clone(),
            responses,
            provenance: self.provider.provenance(),
        };
        let hash = request.hash();
        let mut log = self.log.lock().expect("transcript lock poisoned");
        for response in &exchange.responses {
            let ordinal = {
                let o = log.ordinals.entry(request.template_id.clone()).or_insert(0);
                let cur = *o;
                *o += 1;
                cur
            };
            log.records.push(TranscriptRecord {
                template_id: request.template_id.clone(),
                ordinal,
                request_hash: hash.clone(),
                response: response.clone(),
            });
        }
        log.exchanges.push(exchange.clone());
        Ok(exchange)
    }

    pub fn transcript(&self) -> Vec<TranscriptRecord> {
        self.log.lock().expect("transcript lock poisoned").records.clone()
    }

    pub fn exchanges(&self) -> Vec<ChatExchange> {
        self.log.lock().expect("transcript lock poisoned").exchanges.clone()
    }

    pub fn write_transcript(&self, path: &Path) -> Result<(), LlmError> {
        let mut f = fs::File::create(path)?;
        f.write_all(transcript_to_jsonl(&self.transcript()).as_bytes())?;
        Ok(())
    }
}
