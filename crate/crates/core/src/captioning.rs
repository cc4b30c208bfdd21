//! Caption orchestration: one vision-language call for the video summary,
//! one per identity over its grounded clip, then interaction extraction
//! over the resulting caption map. Exactly 1 + N caption calls per video.

use std::collections::{BTreeMap, BTreeSet};

use crate::backends::{BackendSuite, VlmBackend};
use crate::error::{Error, Result, Stage};
use crate::interact::{self, AlignConfig, GlossIndex, PredicateSet};
use crate::label_space::Synset;
use crate::prompts;
use crate::render::{render_grounded_clip, GroundedClip, GroundingMode};
use crate::track::TrackSet;
use crate::Frame;

/// Everything the semantic stages produce for one video.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SemanticAnnotation {
    pub summary: String,
    pub captions: BTreeMap<u32, String>,
    /// Raw predicate verbs, kept so alignment can be re-run offline.
    pub predicates: BTreeMap<(u32, u32), Vec<String>>,
    pub interactions: BTreeMap<(u32, u32), BTreeSet<String>>,
}

#[derive(Debug, Clone)]
pub struct AnnotateConfig {
    /// Stroke width for the grounded clips.
    pub contour_width: u32,
    /// Grounding style used for the instance-caption clips.
    pub grounding: GroundingMode,
    /// Uniform frame stride for backend payloads; 1 sends every frame.
    pub stride: usize,
    /// Retrieval pool for predicate alignment.
    pub vocabulary: Vec<Synset>,
    pub align: AlignConfig,
}

impl AnnotateConfig {
    pub fn new(vocabulary: Vec<Synset>) -> Self {
        AnnotateConfig {
            contour_width: 5,
            grounding: GroundingMode::SingleContour,
            stride: 1,
            vocabulary,
            align: AlignConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.contour_width == 0 {
            return Err(Error::invalid("config", "contour width must be at least 1"));
        }
        if self.stride == 0 {
            return Err(Error::invalid("config", "frame stride must be at least 1"));
        }
        if self.align.top_k == 0 {
            return Err(Error::invalid("config", "top-K must be at least 1"));
        }
        if self.vocabulary.is_empty() {
            return Err(Error::invalid("config", "retrieval vocabulary is empty"));
        }
        Ok(())
    }
}

/// Trim and keep the first non-empty line. Generative backends pad the
/// single sentence the prompts ask for; anything beyond the first line is
/// dropped. `None` means the response carried no text at all.
pub fn normalize_response(raw: &str) -> Option<String> {
    raw.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(str::to_string)
}

fn strided<'a>(frames: &'a [Frame], stride: usize) -> Vec<Frame> {
    frames.iter().step_by(stride.max(1)).cloned().collect()
}

/// One-sentence summary of the raw, unrendered video.
pub fn generate_summary(video: &[Frame], vlm: &dyn VlmBackend) -> Result<String> {
    generate_summary_strided(video, vlm, 1)
}

pub fn generate_summary_strided(
    video: &[Frame],
    vlm: &dyn VlmBackend,
    stride: usize,
) -> Result<String> {
    if video.is_empty() {
        return Err(Error::invalid("video", "frame sequence is empty"));
    }
    let prompt = prompts::summary_prompt();
    let raw = vlm
        .describe(&prompt, &strided(video, stride))
        .map_err(|e| e.in_stage(Stage::Summary))?;
    normalize_response(&raw)
        .ok_or_else(|| Error::backend("vlm", "empty summary response").in_stage(Stage::Summary))
}

/// One-sentence caption of the grounded clip's target, prompted with the
/// clip's stroke color.
pub fn generate_instance_caption(clip: &GroundedClip, vlm: &dyn VlmBackend) -> Result<String> {
    generate_instance_caption_strided(clip, vlm, 1)
}

pub fn generate_instance_caption_strided(
    clip: &GroundedClip,
    vlm: &dyn VlmBackend,
    stride: usize,
) -> Result<String> {
    let stage = Stage::InstanceCaption;
    let prompt = prompts::instance_caption_prompt(clip.target_color);
    let raw = vlm
        .describe(&prompt, &strided(&clip.frames, stride))
        .map_err(|e| e.at_stage(stage, 0, vec![clip.target_identity]))?;
    normalize_response(&raw).ok_or_else(|| {
        Error::backend("vlm", "empty caption response").at_stage(stage, 0, vec![clip.target_identity])
    })
}

/// Run the semantic stages over a tracked video: summary from the raw
/// frames, a caption per identity from its grounded clip, predicates from
/// the caption map, labels from alignment. Deterministic given
/// deterministic backends.
pub fn annotate_video(
    video: &[Frame],
    tracks: &TrackSet,
    suite: &BackendSuite,
    cfg: &AnnotateConfig,
) -> Result<SemanticAnnotation> {
    cfg.validate()?;
    if video.len() != tracks.frames_processed() {
        return Err(Error::invalid(
            "tracks",
            format!(
                "track set covers {} frames but the video has {}",
                tracks.frames_processed(),
                video.len()
            ),
        ));
    }

    let summary = generate_summary_strided(video, suite.vlm.as_ref(), cfg.stride)?;

    let render_cfg = crate::track::TrackerConfig {
        contour_width: cfg.contour_width,
        ..crate::track::TrackerConfig::default()
    };
    let mut captions = BTreeMap::new();
    for identity in tracks.identities().collect::<Vec<_>>() {
        let clip = render_grounded_clip(video, tracks, identity, cfg.grounding, &render_cfg)?;
        let caption = generate_instance_caption_strided(&clip, suite.vlm.as_ref(), cfg.stride)?;
        captions.insert(identity, caption);
    }

    let predicates = if captions.len() < 2 {
        PredicateSet::default()
    } else {
        interact::extract_predicates(&captions, suite.llm.as_ref())?
    };

    let interactions = if predicates.is_empty() {
        BTreeMap::new()
    } else {
        let index = GlossIndex::build(&cfg.vocabulary, suite.embedder.as_ref())
            .map_err(|e| e.in_stage(Stage::SynsetAlignment))?;
        interact::align_interactions(
            &predicates,
            &index,
            &captions,
            suite.embedder.as_ref(),
            suite.llm.as_ref(),
            &cfg.align,
        )?
    };

    Ok(SemanticAnnotation {
        summary,
        captions,
        predicates: predicates.by_pair,
        interactions,
    })
}
