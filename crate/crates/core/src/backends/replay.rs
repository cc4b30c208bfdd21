//! Transcript recording and offline replay.
//!
//! Recording wrappers persist every VLM, LLM, and embedder exchange as one
//! JSONL record keyed by the content-addressed request key. A replay suite
//! loaded from such a transcript re-serves the recorded responses, so a
//! recorded session can be re-run bit-exactly without the original backends.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backends::{
    media_digest, request_key, EmbeddingBackend, LlmBackend, MediaDigest, OutputSchema, Role,
    VlmBackend,
};
use crate::error::{Error, Result};
use crate::Frame;

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptResponse {
    Text(String),
    Vector(Vec<f64>),
}

/// One recorded exchange, verbatim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub schema_version: u32,
    pub key: String,
    pub role: Role,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media: Option<MediaDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
    pub response: TranscriptResponse,
}

/// Append-only JSONL sink shared by the recording wrappers.
pub struct TranscriptSink {
    out: Mutex<Box<dyn Write + Send>>,
}

impl TranscriptSink {
    pub fn create(path: &Path) -> Result<Arc<Self>> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Arc::new(TranscriptSink {
            out: Mutex::new(Box::new(std::io::BufWriter::new(file))),
        }))
    }

    pub fn to_writer(w: Box<dyn Write + Send>) -> Arc<Self> {
        Arc::new(TranscriptSink { out: Mutex::new(w) })
    }

    fn write(&self, record: &TranscriptRecord) -> Result<()> {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::invalid("transcript record", e.to_string()))?;
        let mut out = self.out.lock().expect("transcript sink poisoned");
        writeln!(out, "{line}").and_then(|()| out.flush()).map_err(|e| {
            Error::backend("transcript", format!("failed to persist record: {e}"))
        })
    }
}

pub struct RecordingVlm {
    pub inner: Box<dyn VlmBackend>,
    pub sink: Arc<TranscriptSink>,
}

impl VlmBackend for RecordingVlm {
    fn describe(&self, prompt: &str, frames: &[Frame]) -> Result<String> {
        let media = media_digest(frames);
        let started = Instant::now();
        let text = self.inner.describe(prompt, frames)?;
        self.sink.write(&TranscriptRecord {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            key: request_key(Role::Vlm, prompt, Some(&media), None),
            role: Role::Vlm,
            prompt: prompt.to_string(),
            media: Some(media),
            schema: None,
            latency_ms: Some(started.elapsed().as_millis() as u64),
            response: TranscriptResponse::Text(text.clone()),
        })?;
        Ok(text)
    }
}

pub struct RecordingLlm {
    pub inner: Box<dyn LlmBackend>,
    pub sink: Arc<TranscriptSink>,
}

impl LlmBackend for RecordingLlm {
    fn complete(&self, prompt: &str, schema: Option<&OutputSchema>) -> Result<String> {
        let started = Instant::now();
        let text = self.inner.complete(prompt, schema)?;
        self.sink.write(&TranscriptRecord {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            key: request_key(Role::Llm, prompt, None, schema),
            role: Role::Llm,
            prompt: prompt.to_string(),
            media: None,
            schema: schema.map(|s| s.name.clone()),
            latency_ms: Some(started.elapsed().as_millis() as u64),
            response: TranscriptResponse::Text(text.clone()),
        })?;
        Ok(text)
    }
}

pub struct RecordingEmbedder {
    pub inner: Box<dyn EmbeddingBackend>,
    pub sink: Arc<TranscriptSink>,
}

impl EmbeddingBackend for RecordingEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let started = Instant::now();
        let vector = self.inner.embed(text)?;
        self.sink.write(&TranscriptRecord {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            key: request_key(Role::Embedder, text, None, None),
            role: Role::Embedder,
            prompt: text.to_string(),
            media: None,
            schema: None,
            latency_ms: Some(started.elapsed().as_millis() as u64),
            response: TranscriptResponse::Vector(vector.clone()),
        })?;
        Ok(vector)
    }
}

/// In-memory index of a recorded transcript, key to response.
#[derive(Debug)]
pub struct ReplayStore {
    responses: HashMap<String, TranscriptResponse>,
}

impl ReplayStore {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut responses = HashMap::new();
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: TranscriptRecord = serde_json::from_str(&line)
                .map_err(|e| Error::record(path, lineno + 1, e.to_string()))?;
            if let Some(existing) = responses.get(&record.key) {
                // The same request may legitimately recur; it only becomes
                // ambiguous when the recorded responses disagree.
                if *existing != record.response {
                    return Err(Error::record(
                        path,
                        lineno + 1,
                        format!("conflicting responses recorded for key {}", record.key),
                    ));
                }
            } else {
                responses.insert(record.key, record.response);
            }
        }
        Ok(ReplayStore { responses })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    fn text(&self, role: Role, key: &str) -> Result<String> {
        match self.responses.get(key) {
            Some(TranscriptResponse::Text(t)) => Ok(t.clone()),
            Some(TranscriptResponse::Vector(_)) => Err(Error::backend(
                role.as_str(),
                format!("recorded response for key {key} is a vector, expected text"),
            )),
            None => Err(Error::backend(
                role.as_str(),
                format!("no recorded response for key {key}"),
            )),
        }
    }

    fn vector(&self, role: Role, key: &str) -> Result<Vec<f64>> {
        match self.responses.get(key) {
            Some(TranscriptResponse::Vector(v)) => Ok(v.clone()),
            Some(TranscriptResponse::Text(_)) => Err(Error::backend(
                role.as_str(),
                format!("recorded response for key {key} is text, expected a vector"),
            )),
            None => Err(Error::backend(
                role.as_str(),
                format!("no recorded response for key {key}"),
            )),
        }
    }
}

pub struct ReplayVlm(pub Arc<ReplayStore>);

impl VlmBackend for ReplayVlm {
    fn describe(&self, prompt: &str, frames: &[Frame]) -> Result<String> {
        let media = media_digest(frames);
        self.0.text(Role::Vlm, &request_key(Role::Vlm, prompt, Some(&media), None))
    }
}

pub struct ReplayLlm(pub Arc<ReplayStore>);

impl LlmBackend for ReplayLlm {
    fn complete(&self, prompt: &str, schema: Option<&OutputSchema>) -> Result<String> {
        self.0.text(Role::Llm, &request_key(Role::Llm, prompt, None, schema))
    }
}

pub struct ReplayEmbedder(pub Arc<ReplayStore>);

impl EmbeddingBackend for ReplayEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        self.0.vector(Role::Embedder, &request_key(Role::Embedder, text, None, None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::fixture::{FixtureEmbedder, FixtureScript, ScriptedLlm, ScriptedVlm};

    fn record_to(path: &Path) {
        let sink = TranscriptSink::create(path).unwrap();
        let script = Arc::new(
            FixtureScript::new()
                .rule(Role::Vlm, "summary", "Two people talk.")
                .rule(Role::Llm, "verbs", "{\"ID_1\":{\"ID_2\":[\"talk\"]}}"),
        );
        let vlm = RecordingVlm {
            inner: Box::new(ScriptedVlm(script.clone())),
            sink: sink.clone(),
        };
        let llm = RecordingLlm {
            inner: Box::new(ScriptedLlm(script)),
            sink: sink.clone(),
        };
        let emb = RecordingEmbedder {
            inner: Box::new(FixtureEmbedder::default()),
            sink,
        };
        let frame = Frame::new(8, 8);
        vlm.describe("one summary please", &[frame]).unwrap();
        llm.complete("list the verbs", None).unwrap();
        emb.embed("talk").unwrap();
    }

    #[test]
    fn replay_reproduces_recorded_responses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transcript.jsonl");
        record_to(&path);
        let store = Arc::new(ReplayStore::load(&path).unwrap());
        assert_eq!(store.len(), 3);

        let frame = Frame::new(8, 8);
        assert_eq!(
            ReplayVlm(store.clone()).describe("one summary please", &[frame]).unwrap(),
            "Two people talk."
        );
        assert_eq!(
            ReplayLlm(store.clone()).complete("list the verbs", None).unwrap(),
            "{\"ID_1\":{\"ID_2\":[\"talk\"]}}"
        );
        assert_eq!(
            ReplayEmbedder(store.clone()).embed("talk").unwrap(),
            FixtureEmbedder::default().embed("talk").unwrap()
        );
        let miss = ReplayLlm(store).complete("something else", None);
        assert!(miss.is_err());
    }

    #[test]
    fn conflicting_records_rejected_duplicates_tolerated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let rec = |resp: &str| TranscriptRecord {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            key: "k1".to_string(),
            role: Role::Llm,
            prompt: "p".to_string(),
            media: None,
            schema: None,
            latency_ms: None,
            response: TranscriptResponse::Text(resp.to_string()),
        };
        let same = format!(
            "{}\n{}\n",
            serde_json::to_string(&rec("a")).unwrap(),
            serde_json::to_string(&rec("a")).unwrap()
        );
        std::fs::write(&path, same).unwrap();
        assert_eq!(ReplayStore::load(&path).unwrap().len(), 1);

        let conflicting = format!(
            "{}\n{}\n",
            serde_json::to_string(&rec("a")).unwrap(),
            serde_json::to_string(&rec("b")).unwrap()
        );
        std::fs::write(&path, conflicting).unwrap();
        assert!(ReplayStore::load(&path).is_err());
    }

    #[test]
    fn malformed_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "not json\n").unwrap();
        let err = ReplayStore::load(&path).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
