//! `semtrack eval`: score a prediction corpus against ground truth and
//! write a metric report. Videos evaluate independently (and in parallel);
//! caption items pool into one corpus so CIDEr's document frequencies span
//! every video.

use std::collections::{BTreeMap, BTreeSet};

use semtrack::io::annotation::{load_annotation_dir, AnnotationFile};
use semtrack::io::report::{
    AggregateReport, CaptionRecord, CaptionScoresRecord, Report, ReportMeta, ReservedMetrics,
    VideoReport,
};
use semtrack::label_space::LabelSpace;
use semtrack::metrics::caption::{eval_caption_corpus, CaptionCorpusItem, CaptionEvalResult};
use semtrack::metrics::interaction::{eval_interactions, InteractionEvalResult};
use semtrack::metrics::tracking::{
    eval_tracking, TrackingData, TrackingEvalConfig, TrackingEvalResult,
};

use crate::parallel::parallel_map;
use crate::reporting::{mean_tracking, merge_interactions};
use crate::{backend, CliError, Context, EvalArgs};

/// Everything one video contributes before caption pooling.
struct VideoEval {
    video_id: String,
    tracking: TrackingEvalResult,
    interactions: InteractionEvalResult,
    summary_item: Option<CaptionCorpusItem>,
    instance_items: Vec<CaptionCorpusItem>,
    missing_instances: usize,
    extra_instances: usize,
}

fn non_empty(text: &str) -> bool {
    !text.trim().is_empty()
}

/// Score one video. Captions pair through the identity bijection; a pair
/// only yields an item when both sides carry text, anything else counts as
/// missing (uncovered ground truth) or extra (uncovered prediction).
fn eval_one(
    video_id: &str,
    gt: &AnnotationFile,
    pred: &AnnotationFile,
    space: &LabelSpace,
) -> Result<VideoEval, CliError> {
    let tracking = eval_tracking(
        &TrackingData::from_annotation(gt),
        &TrackingData::from_annotation(pred),
        &TrackingEvalConfig::default(),
    )?;
    let interactions = eval_interactions(gt, pred, space, &tracking.identity_bijection);

    let summary_item = match (&gt.summary, &pred.summary) {
        (Some(reference), Some(hypothesis)) if non_empty(reference) && non_empty(hypothesis) => {
            Some(CaptionCorpusItem {
                refs: vec![reference.clone()],
                hyp: hypothesis.clone(),
            })
        }
        _ => None,
    };

    let mut instance_items = Vec::new();
    let mut covered_gt: BTreeSet<u32> = BTreeSet::new();
    let mut covered_pred: BTreeSet<u32> = BTreeSet::new();
    for (&pred_id, &gt_id) in &tracking.identity_bijection {
        let (Some(hyp), Some(reference)) = (pred.captions.get(&pred_id), gt.captions.get(&gt_id))
        else {
            continue;
        };
        if !non_empty(hyp) || !non_empty(reference) {
            continue;
        }
        instance_items.push(CaptionCorpusItem {
            refs: vec![reference.clone()],
            hyp: hyp.clone(),
        });
        covered_gt.insert(gt_id);
        covered_pred.insert(pred_id);
    }
    let missing_instances = gt
        .captions
        .iter()
        .filter(|(id, text)| non_empty(text) && !covered_gt.contains(id))
        .count();
    let extra_instances = pred
        .captions
        .iter()
        .filter(|(id, text)| non_empty(text) && !covered_pred.contains(id))
        .count();

    Ok(VideoEval {
        video_id: video_id.to_string(),
        tracking,
        interactions,
        summary_item,
        instance_items,
        missing_instances,
        extra_instances,
    })
}

fn scores(r: &CaptionEvalResult) -> CaptionScoresRecord {
    CaptionScoresRecord {
        bleu: r.bleu,
        meteor: r.meteor,
        rouge_l: r.rouge_l,
        cider: r.cider,
    }
}

/// Score pooled caption items and hand each video its own scores back.
/// Returns (per-video scores, all scores) or `None` when nothing scored.
fn pool_captions(
    items: Vec<(usize, CaptionCorpusItem)>,
    video_count: usize,
) -> Result<(Vec<Vec<CaptionScoresRecord>>, Vec<CaptionScoresRecord>), CliError> {
    let mut per_video: Vec<Vec<CaptionScoresRecord>> = vec![Vec::new(); video_count];
    if items.is_empty() {
        return Ok((per_video, Vec::new()));
    }
    let corpus: Vec<CaptionCorpusItem> = items.iter().map(|(_, item)| item.clone()).collect();
    let results = eval_caption_corpus(&corpus)?;
    let mut all = Vec::with_capacity(results.len());
    for ((owner, _), result) in items.iter().zip(&results) {
        per_video[*owner].push(scores(result));
        all.push(scores(result));
    }
    Ok((per_video, all))
}

pub fn run(args: &EvalArgs, ctx: &Context) -> Result<(), CliError> {
    let space_name = args.label_space.unwrap_or(ctx.config.labels.space);
    let space = backend::label_space(&ctx.config, space_name)?;
    let gt_corpus = load_annotation_dir(&args.gt)?;
    let pred_corpus = load_annotation_dir(&args.pred)?;

    for video_id in pred_corpus.keys() {
        if !gt_corpus.contains_key(video_id) {
            eprintln!("warning: prediction for {video_id:?} has no ground truth; ignoring it");
        }
    }
    let empty_stub = |gt: &AnnotationFile| AnnotationFile::new(gt.video_id.clone(), gt.frame_count);
    let mut pairs: Vec<(String, &AnnotationFile, AnnotationFile)> = Vec::new();
    for (video_id, gt) in &gt_corpus {
        let pred = match pred_corpus.get(video_id) {
            Some(pred) => pred.clone(),
            None => {
                eprintln!(
                    "warning: no prediction for {video_id:?}; scoring an empty one, all its ground truth counts as missed"
                );
                empty_stub(gt)
            }
        };
        pairs.push((video_id.clone(), gt, pred));
    }

    let evals: Vec<VideoEval> = parallel_map(&pairs, ctx.jobs, |(video_id, gt, pred)| {
        eval_one(video_id, gt, pred, &space)
    })?;

    let mut summary_items = Vec::new();
    let mut instance_items = Vec::new();
    for (i, eval) in evals.iter().enumerate() {
        if let Some(item) = &eval.summary_item {
            summary_items.push((i, item.clone()));
        }
        for item in &eval.instance_items {
            instance_items.push((i, item.clone()));
        }
    }
    let (summary_by_video, summary_all) = pool_captions(summary_items, evals.len())?;
    let (instances_by_video, instances_all) = pool_captions(instance_items, evals.len())?;

    let mut videos = BTreeMap::new();
    let mut tracking_records = Vec::new();
    let mut interaction_results = Vec::new();
    for (i, eval) in evals.iter().enumerate() {
        let tracking: semtrack::io::report::TrackingRecord = (&eval.tracking).into();
        tracking_records.push(tracking.clone());
        interaction_results.push(eval.interactions.clone());
        let captions = CaptionRecord {
            summary: summary_by_video[i].first().copied(),
            instances: CaptionScoresRecord::mean(&instances_by_video[i]),
            scored_instances: instances_by_video[i].len(),
            missing_instances: eval.missing_instances,
            extra_instances: eval.extra_instances,
        };
        videos.insert(
            eval.video_id.clone(),
            VideoReport {
                tracking: Some(tracking),
                captions: Some(captions),
                interactions: Some((&eval.interactions).into()),
            },
        );
    }

    let aggregate = AggregateReport {
        videos: evals.len(),
        tracking: mean_tracking(&tracking_records),
        caption_summary: CaptionScoresRecord::mean(&summary_all),
        caption_instances: CaptionScoresRecord::mean(&instances_all),
        interactions: merge_interactions(&interaction_results),
        reserved: ReservedMetrics::default(),
    };

    let mut flags = ctx.flags.clone();
    flags.insert("gt".into(), args.gt.display().to_string());
    flags.insert("pred".into(), args.pred.display().to_string());
    flags.insert("label-space".into(), space_name.as_str().to_string());
    let report = Report {
        meta: ReportMeta {
            provenance: "offline".into(),
            label_space: space_name.as_str().to_string(),
            selector: "-".into(),
            flags,
            params: Default::default(),
        },
        videos,
        aggregate,
    };
    report.save(&args.out)?;

    let t = report.aggregate.tracking.as_ref();
    let i = report.aggregate.interactions.as_ref();
    println!(
        "evaluated {} videos: HOTA {} MOTA {} IDF1 {} interaction-F1 {} -> {}",
        report.aggregate.videos,
        t.map_or("-".into(), |r| format!("{:.4}", r.hota)),
        t.map_or("-".into(), |r| format!("{:.4}", r.mota)),
        t.map_or("-".into(), |r| format!("{:.4}", r.idf1)),
        i.map_or("-".into(), |r| format!("{:.4}", r.f1)),
        args.out.display()
    );
    Ok(())
}
