//! Pipeline configuration file: TOML with optional sections whose absent
//! fields fall back to the built-in defaults. Relative paths inside the
//! file resolve against the file's own directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interact::Selector;
use crate::label_space::LabelSpaceName;
use crate::render::GroundingMode;
use crate::track::TrackerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerSection {
    pub confidence_threshold: f64,
    pub tau_new: f64,
}

impl Default for TrackerSection {
    fn default() -> Self {
        let d = TrackerConfig::default();
        TrackerSection {
            confidence_threshold: d.confidence_threshold,
            tau_new: d.tau_new,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundingSection {
    pub mode: GroundingMode,
    pub contour_width: u32,
    pub stride: usize,
}

impl Default for GroundingSection {
    fn default() -> Self {
        GroundingSection {
            mode: GroundingMode::SingleContour,
            contour_width: TrackerConfig::default().contour_width,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSection {
    pub space: LabelSpaceName,
    pub selector: Selector,
    pub top_k: usize,
    /// Vocabulary file (id, lemma, gloss per record); bundled list when unset.
    pub vocabulary: Option<PathBuf>,
    /// Frequent-subset list; bundled list when unset.
    pub frequent: Option<PathBuf>,
    /// Cluster assignment file; bundled assignment when unset.
    pub clusters: Option<PathBuf>,
}

impl Default for LabelSection {
    fn default() -> Self {
        LabelSection {
            space: LabelSpaceName::Full,
            selector: Selector::Llm,
            top_k: TrackerConfig::default().top_k,
            vocabulary: None,
            frequent: None,
            clusters: None,
        }
    }
}

/// Remote-service endpoints. The API key is never stored in the file;
/// `api_key_env` names the environment variable holding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteSection {
    pub endpoint: String,
    pub api_key_env: Option<String>,
    pub vlm_model: String,
    pub llm_model: String,
    pub embedding_model: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
}

impl Default for RemoteSection {
    fn default() -> Self {
        RemoteSection {
            endpoint: String::new(),
            api_key_env: None,
            vlm_model: String::new(),
            llm_model: String::new(),
            embedding_model: String::new(),
            timeout_secs: 60,
            max_retries: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tracker: TrackerSection,
    pub grounding: GroundingSection,
    pub labels: LabelSection,
    pub remote: Option<RemoteSection>,
}

impl PipelineConfig {
    pub fn tracker_config(&self) -> TrackerConfig {
        TrackerConfig {
            confidence_threshold: self.tracker.confidence_threshold,
            tau_new: self.tracker.tau_new,
            contour_width: self.grounding.contour_width,
            top_k: self.labels.top_k,
        }
    }
}

/// Parse a config file, resolving its relative paths against the file's
/// directory.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg: PipelineConfig =
        toml::from_str(&text).map_err(|e| Error::data(path, e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    for slot in [
        &mut cfg.labels.vocabulary,
        &mut cfg.labels.frequent,
        &mut cfg.labels.clusters,
    ] {
        if let Some(p) = slot {
            if p.is_relative() {
                *p = base.join(&p);
            }
        }
    }
    validate(&cfg, path)?;
    Ok(cfg)
}

fn validate(cfg: &PipelineConfig, path: &Path) -> Result<()> {
    let t = &cfg.tracker;
    if !(0.0..=1.0).contains(&t.confidence_threshold) {
        return Err(Error::data(
            path,
            format!("confidence_threshold {} outside [0, 1]", t.confidence_threshold),
        ));
    }
    if !(0.0..=1.0).contains(&t.tau_new) {
        return Err(Error::data(path, format!("tau_new {} outside [0, 1]", t.tau_new)));
    }
    if cfg.grounding.contour_width == 0 {
        return Err(Error::data(path, "contour_width must be at least 1"));
    }
    if cfg.grounding.stride == 0 {
        return Err(Error::data(path, "stride must be at least 1"));
    }
    if cfg.labels.top_k == 0 {
        return Err(Error::data(path, "top_k must be at least 1"));
    }
    if let Some(remote) = &cfg.remote {
        if remote.endpoint.is_empty() {
            return Err(Error::data(path, "remote section needs an endpoint"));
        }
    }
    Ok(())
}
