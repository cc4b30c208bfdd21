//! Metrics report file: line-delimited JSON with a metadata record, one
//! record per video, and a closing corpus aggregate. Serialization order
//! is canonical so identical evaluations produce identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::metrics::caption::{
    CaptionEvalResult, BLEU_MAX_ORDER, CIDER_MAX_ORDER, METEOR_ALPHA, METEOR_BETA, METEOR_GAMMA,
    ROUGE_BETA,
};
use crate::metrics::interaction::InteractionEvalResult;
use crate::metrics::tracking::TrackingEvalResult;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Metric parameterization echoed into every report so numbers are
/// comparable only to runs with the same block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub iou_threshold: f64,
    pub alpha_grid: Vec<f64>,
    pub bleu_order: usize,
    pub meteor_alpha: f64,
    pub meteor_beta: i32,
    pub meteor_gamma: f64,
    pub meteor_matchers: Vec<String>,
    pub rouge_beta: f64,
    pub cider_max_order: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            iou_threshold: 0.5,
            alpha_grid: crate::metrics::tracking::alpha_grid(),
            bleu_order: BLEU_MAX_ORDER,
            meteor_alpha: METEOR_ALPHA,
            meteor_beta: METEOR_BETA,
            meteor_gamma: METEOR_GAMMA,
            meteor_matchers: vec!["exact".into(), "stem".into()],
            rouge_beta: ROUGE_BETA,
            cider_max_order: CIDER_MAX_ORDER,
        }
    }
}

/// Placeholders for metrics the schema anticipates but nothing computes
/// yet; they serialize as nulls so downstream readers can rely on the keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReservedMetrics {
    pub macro_f1: Option<f64>,
    pub head_f1: Option<f64>,
    pub tail_f1: Option<f64>,
    pub semantic_credit: Option<f64>,
    pub direction_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    /// Backend provenance label from the suite that produced predictions.
    pub provenance: String,
    pub label_space: String,
    pub selector: String,
    /// Full command-line flag echo, flag name to rendered value.
    pub flags: BTreeMap<String, String>,
    pub params: MetricParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingRecord {
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub loca: f64,
    pub mota: f64,
    pub idsw: usize,
    pub idf1: f64,
    pub idp: f64,
    pub idr: f64,
    pub gt_detections: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
}

impl From<&TrackingEvalResult> for TrackingRecord {
    fn from(r: &TrackingEvalResult) -> Self {
        TrackingRecord {
            hota: r.hota,
            deta: r.deta,
            assa: r.assa,
            loca: r.loca,
            mota: r.mota,
            idsw: r.switches,
            idf1: r.idf1,
            idp: r.idp,
            idr: r.idr,
            gt_detections: r.gt_detections,
            false_negatives: r.clear_false_negatives,
            false_positives: r.clear_false_positives,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptionScoresRecord {
    pub bleu: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
}

impl From<CaptionEvalResult> for CaptionScoresRecord {
    fn from(r: CaptionEvalResult) -> Self {
        CaptionScoresRecord {
            bleu: r.bleu,
            meteor: r.meteor,
            rouge_l: r.rouge_l,
            cider: r.cider,
        }
    }
}

impl CaptionScoresRecord {
    pub fn zero() -> Self {
        CaptionScoresRecord {
            bleu: 0.0,
            meteor: 0.0,
            rouge_l: 0.0,
            cider: 0.0,
        }
    }

    pub fn mean(items: &[CaptionScoresRecord]) -> Option<Self> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        Some(CaptionScoresRecord {
            bleu: items.iter().map(|s| s.bleu).sum::<f64>() / n,
            meteor: items.iter().map(|s| s.meteor).sum::<f64>() / n,
            rouge_l: items.iter().map(|s| s.rouge_l).sum::<f64>() / n,
            cider: items.iter().map(|s| s.cider).sum::<f64>() / n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    /// Video-summary scores, when both sides carry a summary.
    pub summary: Option<CaptionScoresRecord>,
    /// Mean over this video's scored instance captions.
    pub instances: Option<CaptionScoresRecord>,
    pub scored_instances: usize,
    /// Ground-truth captions with no prediction to score against.
    pub missing_instances: usize,
    /// Predicted captions for identities outside the bijection.
    pub extra_instances: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyRecord {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub per_class: BTreeMap<String, TallyRecord>,
}

impl From<&InteractionEvalResult> for InteractionRecord {
    fn from(r: &InteractionEvalResult) -> Self {
        InteractionRecord {
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            tp: r.tp,
            fp: r.fp,
            fn_: r.fn_,
            per_class: r
                .per_class
                .iter()
                .map(|(k, t)| {
                    (
                        k.clone(),
                        TallyRecord {
                            tp: t.tp,
                            fp: t.fp,
                            fn_: t.fn_,
                        },
                    )
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VideoReport {
    pub tracking: Option<TrackingRecord>,
    pub captions: Option<CaptionRecord>,
    pub interactions: Option<InteractionRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub videos: usize,
    /// Unweighted means of the per-video tracking ratios plus summed counts.
    pub tracking: Option<TrackingRecord>,
    /// Means over every scored caption item in the corpus.
    pub caption_summary: Option<CaptionScoresRecord>,
    pub caption_instances: Option<CaptionScoresRecord>,
    /// Micro scores recomputed from pooled interaction counts.
    pub interactions: Option<InteractionRecord>,
    pub reserved: ReservedMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReportLine {
    Meta {
        schema_version: u32,
        #[serde(flatten)]
        meta: ReportMeta,
    },
    Video {
        video_id: String,
        #[serde(flatten)]
        body: VideoReport,
    },
    Aggregate {
        #[serde(flatten)]
        body: AggregateReport,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub meta: ReportMeta,
    pub videos: BTreeMap<String, VideoReport>,
    pub aggregate: AggregateReport,
}

impl Report {
    pub fn to_jsonl(&self) -> String {
        let mut lines = Vec::with_capacity(self.videos.len() + 2);
        lines.push(ReportLine::Meta {
            schema_version: REPORT_SCHEMA_VERSION,
            meta: self.meta.clone(),
        });
        for (video_id, body) in &self.videos {
            lines.push(ReportLine::Video {
                video_id: video_id.clone(),
                body: body.clone(),
            });
        }
        lines.push(ReportLine::Aggregate {
            body: self.aggregate.clone(),
        });
        let mut out = String::new();
        for line in &lines {
            out.push_str(&serde_json::to_string(line).expect("report serialization"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(src: &str, origin: &Path) -> Result<Self> {
        let mut meta = None;
        let mut videos = BTreeMap::new();
        let mut aggregate = None;
        for (idx, raw) in src.lines().enumerate() {
            let line_no = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let line: ReportLine = serde_json::from_str(raw)
                .map_err(|e| Error::record(origin, line_no, e.to_string()))?;
            match line {
                ReportLine::Meta {
                    schema_version,
                    meta: m,
                } => {
                    if schema_version != REPORT_SCHEMA_VERSION {
                        return Err(Error::record(
                            origin,
                            line_no,
                            format!(
                                "unsupported schema version {schema_version}, expected {REPORT_SCHEMA_VERSION}"
                            ),
                        ));
                    }
                    if meta.replace(m).is_some() {
                        return Err(Error::record(origin, line_no, "duplicate meta record"));
                    }
                }
                ReportLine::Video { video_id, body } => {
                    if meta.is_none() {
                        return Err(Error::record(
                            origin,
                            line_no,
                            "video record before the meta record",
                        ));
                    }
                    if videos.insert(video_id.clone(), body).is_some() {
                        return Err(Error::record(
                            origin,
                            line_no,
                            format!("duplicate video record {video_id:?}"),
                        ));
                    }
                }
                ReportLine::Aggregate { body } => {
                    if aggregate.replace(body).is_some() {
                        return Err(Error::record(origin, line_no, "duplicate aggregate record"));
                    }
                }
            }
        }
        let meta = meta.ok_or_else(|| Error::data(origin, "missing meta record"))?;
        let aggregate = aggregate.ok_or_else(|| Error::data(origin, "missing aggregate record"))?;
        Ok(Report {
            meta,
            videos,
            aggregate,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_jsonl())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&src, path)
    }
}
