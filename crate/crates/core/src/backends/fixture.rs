//! Scripted language-model fixtures and a deterministic text embedder.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::{
    media_digest, request_key, EmbeddingBackend, LlmBackend, MediaDigest, OutputSchema, Role,
    VlmBackend,
};
use crate::error::{Error, Result};
use crate::Frame;

/// One scripted response. A request matches when the role agrees and every
/// present field agrees: `key` against the content-addressed request key,
/// `prompt_contains` as a substring of the instantiated prompt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptRule {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_contains: Option<String>,
    pub response: String,
}

/// Ordered response script for the VLM and LLM roles. First matching rule
/// wins; a miss serves the default when one is configured and is otherwise
/// an error naming the unmatched request key.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FixtureScript {
    #[serde(default)]
    pub rules: Vec<ScriptRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
}

impl FixtureScript {
    pub fn new() -> Self {
        FixtureScript::default()
    }

    pub fn rule(mut self, role: Role, prompt_contains: &str, response: &str) -> Self {
        self.rules.push(ScriptRule {
            role,
            key: None,
            prompt_contains: Some(prompt_contains.to_string()),
            response: response.to_string(),
        });
        self
    }

    pub fn keyed(mut self, role: Role, key: &str, response: &str) -> Self {
        self.rules.push(ScriptRule {
            role,
            key: Some(key.to_string()),
            prompt_contains: None,
            response: response.to_string(),
        });
        self
    }

    pub fn with_default(mut self, response: &str) -> Self {
        self.default = Some(response.to_string());
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("fixture script", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::data(path, e.to_string()))
    }

    pub fn respond(
        &self,
        role: Role,
        prompt: &str,
        media: Option<&MediaDigest>,
        schema: Option<&OutputSchema>,
    ) -> Result<String> {
        let key = request_key(role, prompt, media, schema);
        for rule in &self.rules {
            if rule.role != role {
                continue;
            }
            if let Some(k) = &rule.key {
                if *k != key {
                    continue;
                }
            }
            if let Some(needle) = &rule.prompt_contains {
                if !prompt.contains(needle.as_str()) {
                    continue;
                }
            }
            return Ok(rule.response.clone());
        }
        match &self.default {
            Some(d) => Ok(d.clone()),
            None => Err(Error::backend(
                role.as_str(),
                format!("no scripted response for request key {key}"),
            )),
        }
    }
}

pub struct ScriptedVlm(pub Arc<FixtureScript>);

impl VlmBackend for ScriptedVlm {
    fn describe(&self, prompt: &str, frames: &[Frame]) -> Result<String> {
        let media = media_digest(frames);
        self.0.respond(Role::Vlm, prompt, Some(&media), None)
    }
}

pub struct ScriptedLlm(pub Arc<FixtureScript>);

impl LlmBackend for ScriptedLlm {
    fn complete(&self, prompt: &str, schema: Option<&OutputSchema>) -> Result<String> {
        self.0.respond(Role::Llm, prompt, None, schema)
    }
}

/// Deterministic text embedder: hashed token n-gram features summed into a
/// fixed-dimension vector, then L2-normalized. The raw text itself is one
/// feature, so inputs differing only in whitespace still embed differently.
pub struct FixtureEmbedder {
    pub dimension: usize,
    pub seed: u64,
}

impl FixtureEmbedder {
    pub fn new(dimension: usize, seed: u64) -> Self {
        FixtureEmbedder { dimension, seed }
    }

    fn feature(&self, bytes: &[u8]) -> (usize, f64) {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
        let digest = hasher.finalize();
        let idx = u64::from_le_bytes(digest[0..8].try_into().unwrap()) % (self.dimension as u64);
        let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
        (idx as usize, sign)
    }
}

impl Default for FixtureEmbedder {
    fn default() -> Self {
        FixtureEmbedder::new(64, 17)
    }
}

impl EmbeddingBackend for FixtureEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0f64; self.dimension];
        let bump = |bytes: &[u8], acc: &mut Vec<f64>| {
            let (idx, sign) = self.feature(bytes);
            acc[idx] += sign;
        };
        bump(text.as_bytes(), &mut v);
        let tokens: Vec<&str> = text.split_whitespace().collect();
        for t in &tokens {
            bump(t.as_bytes(), &mut v);
        }
        for pair in tokens.windows(2) {
            bump(format!("{} {}", pair[0], pair[1]).as_bytes(), &mut v);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // Feature cancellation left nothing; fall back to a single spike
            // derived from the raw text so the output stays deterministic.
            let (idx, _) = self.feature(text.as_bytes());
            v[idx] = 1.0;
        } else {
            for x in &mut v {
                *x /= norm;
            }
        }
        Ok(v)
    }
}
