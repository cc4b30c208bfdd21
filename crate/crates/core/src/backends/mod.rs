//! Backend protocol for the five model roles: detector, mask tracker,
//! vision-language model, language model, and text embedder.
//!
//! The pipeline only ever talks to these traits. Fixture implementations
//! (scripted responses, synthetic scenarios) make every pipeline stage
//! reproducible offline; remote implementations translate the same calls
//! into HTTP services. Requests are content-addressed by [`request_key`]
//! so responses can be recorded and replayed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::geometry::{BoundingBox, Detection};
use crate::mask::Mask;
use crate::Frame;

pub mod fixture;
pub mod replay;
#[cfg(feature = "remote")]
pub mod remote;
pub mod scenario;

/// The five model roles a pipeline run may consult.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Detector,
    MaskTracker,
    Vlm,
    Llm,
    Embedder,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Detector => "detector",
            Role::MaskTracker => "mask-tracker",
            Role::Vlm => "vlm",
            Role::Llm => "llm",
            Role::Embedder => "embedder",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Structured-output constraint attached to a language-model request.
/// Services that support constrained decoding receive it as a response
/// schema; for others the response is validated locally after the fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSchema {
    pub name: String,
    pub json_schema: serde_json::Value,
}

impl OutputSchema {
    pub fn new(name: &str, json_schema: serde_json::Value) -> Self {
        OutputSchema {
            name: name.to_string(),
            json_schema,
        }
    }

    fn digest_text(&self) -> String {
        // serde_json maps are ordered, so this rendering is canonical.
        format!("{}:{}", self.name, self.json_schema)
    }
}

/// Per-frame person detector.
pub trait DetectorBackend {
    fn detect(&self, frame_index: usize, frame: &Frame) -> Result<Vec<Detection>>;
}

/// Promptable video segmentation model. Stateful: identities registered
/// via [`MaskTrackerBackend::init_identity`] must be propagated on every
/// later frame. Frames are presented in strictly increasing order.
pub trait MaskTrackerBackend {
    /// Masks at `frame_index` for every requested identity. An identity the
    /// model has lost is reported as an empty mask, never omitted.
    fn propagate(
        &mut self,
        frame_index: usize,
        frame: &Frame,
        identities: &[u32],
    ) -> Result<BTreeMap<u32, Mask>>;

    /// Register a new identity prompted with a box; returns its mask at the
    /// prompting frame.
    fn init_identity(
        &mut self,
        frame_index: usize,
        frame: &Frame,
        identity: u32,
        prompt: &BoundingBox,
    ) -> Result<Mask>;
}

/// Video-language model: prompt plus frames in, one text response out.
pub trait VlmBackend {
    fn describe(&self, prompt: &str, frames: &[Frame]) -> Result<String>;
}

/// Text-only language model, optionally constrained to a response schema.
pub trait LlmBackend {
    fn complete(&self, prompt: &str, schema: Option<&OutputSchema>) -> Result<String>;
}

/// Sentence embedder. All vectors from one backend share a dimension.
pub trait EmbeddingBackend {
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// One implementation per role plus a provenance label that is recorded
/// into every output file produced with this suite.
pub struct BackendSuite {
    pub detector: Box<dyn DetectorBackend>,
    pub mask_tracker: Box<dyn MaskTrackerBackend>,
    pub vlm: Box<dyn VlmBackend>,
    pub llm: Box<dyn LlmBackend>,
    pub embedder: Box<dyn EmbeddingBackend>,
    pub provenance: String,
}

/// Digest of the media payload attached to a request: frame count plus a
/// hash over dimensions and raw pixel bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaDigest {
    pub frame_count: usize,
    pub digest: String,
}

pub fn media_digest(frames: &[Frame]) -> MediaDigest {
    let mut hasher = Sha256::new();
    hasher.update((frames.len() as u64).to_le_bytes());
    for f in frames {
        hasher.update(f.width().to_le_bytes());
        hasher.update(f.height().to_le_bytes());
        hasher.update(f.as_raw());
    }
    MediaDigest {
        frame_count: frames.len(),
        digest: hex(&hasher.finalize()),
    }
}

/// Content address of one backend request: role, prompt text, media digest,
/// and schema descriptor, in a fixed frame-delimited encoding. Identical
/// requests always hash to the same key, which is what makes transcript
/// recording and replay sound.
pub fn request_key(
    role: Role,
    prompt: &str,
    media: Option<&MediaDigest>,
    schema: Option<&OutputSchema>,
) -> String {
    let mut hasher = Sha256::new();
    for part in [
        role.as_str(),
        prompt,
        &media.map_or_else(|| "-".to_string(), |m| format!("{}:{}", m.frame_count, m.digest)),
        &schema.map_or_else(|| "-".to_string(), |s| s.digest_text()),
    ] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hex(&hasher.finalize())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_key_is_stable_and_sensitive() {
        let k1 = request_key(Role::Llm, "hello", None, None);
        let k2 = request_key(Role::Llm, "hello", None, None);
        assert_eq!(k1, k2);
        assert_ne!(k1, request_key(Role::Vlm, "hello", None, None));
        assert_ne!(k1, request_key(Role::Llm, "hello ", None, None));
        let schema = OutputSchema::new("choice", serde_json::json!({"type": "object"}));
        assert_ne!(k1, request_key(Role::Llm, "hello", None, Some(&schema)));
    }

    #[test]
    fn media_digest_tracks_pixels() {
        let a = Frame::from_pixel(4, 3, image::Rgb([1, 2, 3]));
        let mut b = a.clone();
        let d1 = media_digest(std::slice::from_ref(&a));
        assert_eq!(d1.frame_count, 1);
        assert_eq!(d1, media_digest(&[a.clone()]));
        b.put_pixel(0, 0, image::Rgb([9, 9, 9]));
        assert_ne!(d1.digest, media_digest(&[b]).digest);
        assert_ne!(d1.digest, media_digest(&[a.clone(), a]).digest);
    }

    #[test]
    fn key_separates_prompt_boundaries() {
        // Concatenation ambiguity must not collide: ("ab","c") vs ("a","bc").
        let k1 = request_key(Role::Llm, "ab", None, None);
        let k2 = request_key(Role::Llm, "a", None, None);
        assert_ne!(k1, k2);
    }
}
