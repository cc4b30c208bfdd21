//! Backend selection: `--backend fixture:FILE | replay:FILE | remote:`
//! resolved into a suite, plus label-space assembly from the config's
//! vocabulary and membership files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use semtrack::backends::fixture::{FixtureEmbedder, FixtureScript, ScriptedLlm, ScriptedVlm};
use semtrack::backends::remote::{RemoteClient, RemoteEmbedder, RemoteLlm, RemoteVlm};
use semtrack::backends::replay::{
    RecordingEmbedder, RecordingLlm, RecordingVlm, ReplayEmbedder, ReplayLlm, ReplayStore,
    ReplayVlm, TranscriptSink,
};
use semtrack::backends::scenario::{Scenario, ScenarioDetector, ScenarioTracker};
use semtrack::backends::{
    BackendSuite, DetectorBackend, EmbeddingBackend, LlmBackend, MaskTrackerBackend, VlmBackend,
};
use semtrack::geometry::{BoundingBox, Detection};
use semtrack::io::config::PipelineConfig;
use semtrack::io::synsets;
use semtrack::label_space::{
    build_label_space, LabelSpace, LabelSpaceAux, LabelSpaceName, Synset,
};
use semtrack::mask::Mask;
use semtrack::{Error, Frame};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Fixture(PathBuf),
    Replay(PathBuf),
    Remote,
}

impl BackendSpec {
    pub fn parse(raw: &str) -> Result<Self, CliError> {
        if let Some(rest) = raw.strip_prefix("fixture:") {
            if rest.is_empty() {
                return Err(CliError::usage("--backend fixture: needs a fixture file path"));
            }
            return Ok(BackendSpec::Fixture(PathBuf::from(rest)));
        }
        if let Some(rest) = raw.strip_prefix("replay:") {
            if rest.is_empty() {
                return Err(CliError::usage("--backend replay: needs a transcript path"));
            }
            return Ok(BackendSpec::Replay(PathBuf::from(rest)));
        }
        if raw == "remote" || raw == "remote:" {
            return Ok(BackendSpec::Remote);
        }
        Err(CliError::usage(format!(
            "--backend {raw:?} not recognized; expected fixture:FILE, replay:FILE, or remote:"
        )))
    }

    pub fn provenance(&self) -> &'static str {
        match self {
            BackendSpec::Fixture(_) => "fixture",
            BackendSpec::Replay(_) => "replay",
            BackendSpec::Remote => "remote",
        }
    }
}

/// Placeholder for roles a backend spec does not serve. Any call is a
/// backend error naming the role, so misuse fails loudly instead of
/// silently producing empty output.
struct Unserved(&'static str);

impl DetectorBackend for Unserved {
    fn detect(&self, _frame_index: usize, _frame: &Frame) -> semtrack::Result<Vec<Detection>> {
        Err(Error::backend("detector", format!("{} backend serves no detector role", self.0)))
    }
}

impl MaskTrackerBackend for Unserved {
    fn propagate(
        &mut self,
        _frame_index: usize,
        _frame: &Frame,
        _identities: &[u32],
    ) -> semtrack::Result<BTreeMap<u32, Mask>> {
        Err(Error::backend(
            "mask-tracker",
            format!("{} backend serves no mask-tracker role", self.0),
        ))
    }

    fn init_identity(
        &mut self,
        _frame_index: usize,
        _frame: &Frame,
        _identity: u32,
        _prompt: &BoundingBox,
    ) -> semtrack::Result<Mask> {
        Err(Error::backend(
            "mask-tracker",
            format!("{} backend serves no mask-tracker role", self.0),
        ))
    }
}

/// Detection and mask propagation are generated upstream by GPU models, so
/// only scenario fixtures can serve them here.
pub fn tracking_backends(
    spec: &BackendSpec,
) -> Result<(Box<dyn DetectorBackend>, Box<dyn MaskTrackerBackend>), CliError> {
    match spec {
        BackendSpec::Fixture(path) => {
            let scenario = Scenario::load(path)?;
            let detector = ScenarioDetector::new(scenario.clone());
            let tracker = ScenarioTracker::new(scenario);
            Ok((Box::new(detector), Box::new(tracker)))
        }
        _ => Err(CliError::usage(
            "track supports only fixture: backends; detection and mask propagation \
             are not served by replay: or remote:",
        )),
    }
}

/// Suite for the semantic stages (summary, captions, alignment). The
/// detector and mask-tracker slots are never consulted by those stages and
/// fail loudly if something does. `record` tees every vlm/llm/embedder
/// exchange into a transcript.
pub fn semantic_suite(
    spec: &BackendSpec,
    cfg: &PipelineConfig,
    record: Option<&Path>,
) -> Result<BackendSuite, CliError> {
    let (vlm, llm, embedder): (Box<dyn VlmBackend>, Box<dyn LlmBackend>, Box<dyn EmbeddingBackend>) =
        match spec {
            BackendSpec::Fixture(path) => {
                let script = Arc::new(FixtureScript::load(path)?);
                (
                    Box::new(ScriptedVlm(script.clone())),
                    Box::new(ScriptedLlm(script)),
                    Box::new(FixtureEmbedder::default()),
                )
            }
            BackendSpec::Replay(path) => {
                let store = Arc::new(ReplayStore::load(path)?);
                (
                    Box::new(ReplayVlm(store.clone())),
                    Box::new(ReplayLlm(store.clone())),
                    Box::new(ReplayEmbedder(store)),
                )
            }
            BackendSpec::Remote => {
                let section = cfg.remote.as_ref().ok_or_else(|| {
                    CliError::usage(
                        "--backend remote: needs a [remote] section in the config file",
                    )
                })?;
                let client = RemoteClient::new(section)?;
                (
                    Box::new(RemoteVlm {
                        client: client.clone(),
                        model: section.vlm_model.clone(),
                    }),
                    Box::new(RemoteLlm {
                        client: client.clone(),
                        model: section.llm_model.clone(),
                    }),
                    Box::new(RemoteEmbedder {
                        client,
                        model: section.embedding_model.clone(),
                    }),
                )
            }
        };

    let (vlm, llm, embedder) = match record {
        Some(path) => {
            let sink = TranscriptSink::create(path)?;
            (
                Box::new(RecordingVlm {
                    inner: vlm,
                    sink: sink.clone(),
                }) as Box<dyn VlmBackend>,
                Box::new(RecordingLlm {
                    inner: llm,
                    sink: sink.clone(),
                }) as Box<dyn LlmBackend>,
                Box::new(RecordingEmbedder {
                    inner: embedder,
                    sink,
                }) as Box<dyn EmbeddingBackend>,
            )
        }
        None => (vlm, llm, embedder),
    };

    Ok(BackendSuite {
        detector: Box::new(Unserved(spec.provenance())),
        mask_tracker: Box::new(Unserved(spec.provenance())),
        vlm,
        llm,
        embedder,
        provenance: spec.provenance().to_string(),
    })
}

/// The retrieval vocabulary: the config's file when set, the bundled list
/// otherwise.
pub fn vocabulary(cfg: &PipelineConfig) -> Result<Vec<Synset>, CliError> {
    match &cfg.labels.vocabulary {
        Some(path) => Ok(synsets::load_synsets(path)?),
        None => Ok(synsets::bundled_vocabulary()),
    }
}

/// Assemble a label space over the configured vocabulary, loading whatever
/// membership file the space needs. A missing file names itself and the
/// config key to fix.
pub fn label_space(cfg: &PipelineConfig, name: LabelSpaceName) -> Result<LabelSpace, CliError> {
    let vocab = vocabulary(cfg)?;
    let space = match name {
        LabelSpaceName::Full | LabelSpaceName::LemmaMerged => {
            build_label_space(name, &vocab, LabelSpaceAux::None)?
        }
        LabelSpaceName::Frequent => {
            let list = match &cfg.labels.frequent {
                Some(path) => synsets::load_frequent(path).map_err(|e| {
                    actionable(path, "labels.frequent", "frequent-subset list", e)
                })?,
                None => synsets::bundled_frequent(),
            };
            build_label_space(name, &vocab, LabelSpaceAux::FrequentList(&list))?
        }
        LabelSpaceName::Clustered => {
            let clusters = match &cfg.labels.clusters {
                Some(path) => synsets::load_clusters(path).map_err(|e| {
                    actionable(path, "labels.clusters", "cluster assignment", e)
                })?,
                None => synsets::bundled_clusters(),
            };
            build_label_space(name, &vocab, LabelSpaceAux::Clusters(&clusters))?
        }
    };
    Ok(space)
}

fn actionable(path: &Path, key: &str, what: &str, cause: Error) -> CliError {
    Error::data(
        path,
        format!("{what} could not be loaded ({cause}); fix {key} in the config or drop it to use the bundled file"),
    )
    .into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_prefixes_parse_and_everything_else_is_usage() {
        assert_eq!(
            BackendSpec::parse("fixture:s.json").unwrap(),
            BackendSpec::Fixture(PathBuf::from("s.json"))
        );
        assert_eq!(
            BackendSpec::parse("replay:t.jsonl").unwrap(),
            BackendSpec::Replay(PathBuf::from("t.jsonl"))
        );
        assert_eq!(BackendSpec::parse("remote:").unwrap(), BackendSpec::Remote);
        for bad in ["gpu:", "fixture:", "replay:", "s.json", ""] {
            let err = BackendSpec::parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad:?} should be a usage error");
        }
    }

    #[test]
    fn track_rejects_non_fixture_backends() {
        let err = tracking_backends(&BackendSpec::Remote).err().unwrap();
        assert_eq!(err.exit_code(), 2);
        let err = tracking_backends(&BackendSpec::Replay(PathBuf::from("t.jsonl")))
            .err()
            .unwrap();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_cluster_file_error_names_the_config_key() {
        let mut cfg = PipelineConfig::default();
        cfg.labels.clusters = Some(PathBuf::from("/nonexistent/clusters.tsv"));
        let err = label_space(&cfg, LabelSpaceName::Clustered).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let text = err.to_string();
        assert!(text.contains("labels.clusters"), "{text}");
        assert!(text.contains("bundled"), "{text}");
        assert!(text.contains("/nonexistent/clusters.tsv"), "{text}");
    }

    #[test]
    fn bundled_spaces_assemble_for_every_name() {
        let cfg = PipelineConfig::default();
        for name in LabelSpaceName::ALL {
            let space = label_space(&cfg, name).unwrap();
            assert!(space.class_count() > 0, "{name:?}");
        }
    }

    #[test]
    fn unserved_roles_fail_as_backend_errors() {
        let det = Unserved("replay");
        let err = det.detect(0, &Frame::new(2, 2)).err().unwrap();
        let cli: CliError = err.into();
        assert_eq!(cli.exit_code(), 4);
    }
}
