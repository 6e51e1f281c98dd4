use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;

use super::{parse_transcript, ChatProvider, ChatRequest, LlmError, Provenance, TranscriptRecord};

/// Replays canned responses keyed by template id, in ordinal order.
pub struct ScriptedProvider {
    queues: Mutex<HashMap<String, Queue>>,
}

#[derive(Default)]
struct Queue {
    next_ordinal: usize,
    pending: VecDeque<TranscriptRecord>,
}

impl ScriptedProvider {
    pub fn new(mut records: Vec<TranscriptRecord>) -> Self {
        records.sort_by(|a, b| {
            a.template_id
                .cmp(&b.template_id)
                .then(a.ordinal.cmp(&b.ordinal))
        });
        let mut queues: HashMap<String, Queue> = HashMap::new();
        for r in records {
            queues
                .entry(r.template_id.clone())
                .or_default()
                .pending
                .push_back(r);
        }
        Self {
            queues: Mutex::new(queues),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            LlmError::Config(format!("cannot read transcript {}: {e}", path.display()))
        })?;
        Ok(Self::new(parse_transcript(&text)?))
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, request: &ChatRequest) -> Result<Vec<String>, LlmError> {
        let mut queues = self.queues.lock().expect("script lock poisoned");
        let queue = queues.entry(request.template_id.clone()).or_default();
        let mut out = Vec::with_capacity(request.n_samples);
        for _ in 0..request.n_samples {
            let ordinal = queue.next_ordinal;
            let rec = queue
                .pending
                .pop_front()
                .ok_or_else(|| LlmError::ScriptExhausted {
                    template_id: request.template_id.clone(),
                    ordinal,
                })?;
            if !rec.request_hash.is_empty() && rec.request_hash != request.hash() {
                log::warn!(
                    "scripted response {}#{} was recorded for a different prompt",
                    rec.template_id,
                    rec.ordinal
                );
            }
            queue.next_ordinal += 1;
            out.push(rec.response);
        }
        Ok(out)
    }

    fn provenance(&self) -> Provenance {
        Provenance {
            provider: "scripted".into(),
            model: "transcript".into(),
            timestamp_ms: 0,
        }
    }
}
