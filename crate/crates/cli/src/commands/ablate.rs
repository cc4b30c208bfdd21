//! `semtrack ablate`: sweep evaluation configurations over an existing
//! prediction corpus. The label-space x selector grid re-aligns the stored
//! predicate verbs with each selector and scores every space, so one
//! prediction run yields the whole table; each cell equals an independent
//! `eval` of predictions annotated with the matching flags. `--grounding`
//! re-renders the instance clips per mode and reports how many pixels each
//! mode touches.

use std::collections::BTreeMap;
use std::path::Path;

use semtrack::interact::{align_interactions, AlignConfig, GlossIndex, PredicateSet, Selector};
use semtrack::io::annotation::{load_annotation_dir, AnnotationFile};
use semtrack::io::report::InteractionRecord;
use semtrack::io::video::{load_video, save_frames};
use semtrack::io::write_atomic;
use semtrack::label_space::{LabelSpace, LabelSpaceName};
use semtrack::metrics::interaction::{eval_interactions, InteractionEvalResult};
use semtrack::metrics::tracking::{eval_tracking, TrackingData, TrackingEvalConfig};
use semtrack::render::{render_grounded_clip, GroundingMode};
use semtrack::track::TrackerConfig;

use crate::parallel::parallel_map;
use crate::reporting::merge_interactions;
use crate::{backend, AblateArgs, CliError, Context};

/// One video's inputs to the grid: the ground truth, the identity mapping,
/// and the re-aligned labels per selector.
struct VideoGrid<'a> {
    gt: &'a AnnotationFile,
    pred: AnnotationFile,
    bijection: BTreeMap<u32, u32>,
    per_selector: BTreeMap<&'static str, BTreeMap<(u32, u32), Vec<String>>>,
}

fn pixels_changed(a: &semtrack::Frame, b: &semtrack::Frame) -> usize {
    a.pixels().zip(b.pixels()).filter(|(x, y)| x != y).count()
}

pub fn run(args: &AblateArgs, ctx: &Context) -> Result<(), CliError> {
    if !args.grounding.is_empty() && args.frames_root.is_none() {
        return Err(CliError::usage("--grounding needs --frames-root to re-render clips"));
    }
    let spec = backend::BackendSpec::parse(&args.backend)?;
    let suite = backend::semantic_suite(&spec, &ctx.config, None)?;
    let gt_corpus = load_annotation_dir(&args.gt)?;
    let pred_corpus = load_annotation_dir(&args.pred)?;

    let vocabulary = backend::vocabulary(&ctx.config)?;
    let mut spaces: Vec<(LabelSpaceName, LabelSpace)> = Vec::new();
    for name in LabelSpaceName::ALL {
        spaces.push((name, backend::label_space(&ctx.config, name)?));
    }
    let index = GlossIndex::build(&vocabulary, suite.embedder.as_ref())?;
    let align_base = AlignConfig {
        selector: Selector::Llm,
        top_k: ctx.config.labels.top_k,
    };

    // Alignment consults backends, so it runs sequentially; the grid
    // scoring below is pure computation and parallelizes per video.
    let mut grids: Vec<VideoGrid> = Vec::new();
    for (video_id, pred) in &pred_corpus {
        let Some(gt) = gt_corpus.get(video_id) else {
            eprintln!("warning: prediction for {video_id:?} has no ground truth; skipping it");
            continue;
        };
        let tracking = eval_tracking(
            &TrackingData::from_annotation(gt),
            &TrackingData::from_annotation(pred),
            &TrackingEvalConfig::default(),
        )?;
        let predicates = PredicateSet {
            by_pair: pred.predicates.clone(),
        };
        let mut per_selector = BTreeMap::new();
        for selector in Selector::ALL {
            let cfg = AlignConfig {
                selector,
                ..align_base
            };
            let labels = align_interactions(
                &predicates,
                &index,
                &pred.captions,
                suite.embedder.as_ref(),
                suite.llm.as_ref(),
                &cfg,
            )?;
            let as_vecs: BTreeMap<(u32, u32), Vec<String>> = labels
                .into_iter()
                .filter(|(_, set)| !set.is_empty())
                .map(|(pair, set)| (pair, set.into_iter().collect()))
                .collect();
            per_selector.insert(selector.as_str(), as_vecs);
        }
        grids.push(VideoGrid {
            gt,
            pred: pred.clone(),
            bijection: tracking.identity_bijection,
            per_selector,
        });
    }
    for video_id in gt_corpus.keys() {
        if !pred_corpus.contains_key(video_id) {
            eprintln!("warning: no prediction for {video_id:?}; the grid skips it");
        }
    }

    // cells[space][selector] = merged micro scores over all videos.
    type CellResults = BTreeMap<(usize, usize), InteractionEvalResult>;
    let per_video_cells: Vec<CellResults> = parallel_map(&grids, ctx.jobs, |grid| {
        let mut cells = CellResults::new();
        for (si, (_, space)) in spaces.iter().enumerate() {
            for (ki, selector) in Selector::ALL.iter().enumerate() {
                let mut variant = grid.pred.clone();
                variant.interactions = grid.per_selector[selector.as_str()].clone();
                let result = eval_interactions(grid.gt, &variant, space, &grid.bijection);
                cells.insert((si, ki), result);
            }
        }
        Ok(cells)
    })?;

    let mut lines = Vec::new();
    let mut flags = ctx.flags.clone();
    flags.insert("backend".into(), args.backend.clone());
    flags.insert("gt".into(), args.gt.display().to_string());
    flags.insert("pred".into(), args.pred.display().to_string());
    if let Some(root) = &args.frames_root {
        flags.insert("frames-root".into(), root.display().to_string());
    }
    if !args.grounding.is_empty() {
        let modes: Vec<&str> = args.grounding.iter().map(|m| m.as_str()).collect();
        flags.insert("grounding".into(), modes.join(","));
    }
    lines.push(serde_json::json!({
        "schema_version": 1,
        "kind": "ablation-meta",
        "videos": grids.len(),
        "provenance": suite.provenance,
        "flags": flags,
    }));

    println!("interaction grid over {} videos (micro F1):", grids.len());
    let header: Vec<String> = Selector::ALL.iter().map(|s| s.as_str().to_string()).collect();
    println!("{:<14} {}", "space", header.join("  "));
    for (si, (name, _)) in spaces.iter().enumerate() {
        let mut row = format!("{:<14}", name.as_str());
        for (ki, selector) in Selector::ALL.iter().enumerate() {
            let per_video: Vec<InteractionEvalResult> = per_video_cells
                .iter()
                .filter_map(|cells| cells.get(&(si, ki)).cloned())
                .collect();
            let merged = merge_interactions(&per_video).unwrap_or(InteractionRecord {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
                tp: 0,
                fp: 0,
                fn_: 0,
                per_class: BTreeMap::new(),
            });
            row.push_str(&format!(" {:>11.4}", merged.f1));
            lines.push(serde_json::json!({
                "kind": "cell",
                "label_space": name.as_str(),
                "selector": selector.as_str(),
                "precision": merged.precision,
                "recall": merged.recall,
                "f1": merged.f1,
                "tp": merged.tp,
                "fp": merged.fp,
                "fn": merged.fn_,
            }));
        }
        println!("{row}");
    }

    if !args.grounding.is_empty() {
        let root = args.frames_root.as_ref().expect("checked above");
        render_rows(args, ctx, root, &pred_corpus, &mut lines)?;
    }

    let mut text = String::new();
    for line in &lines {
        text.push_str(&line.to_string());
        text.push('\n');
    }
    write_atomic(&args.out, &text)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Re-render every identity's grounded clip in each requested mode and
/// report the pixels the overlay touched; optionally write the clips out.
fn render_rows(
    args: &AblateArgs,
    ctx: &Context,
    frames_root: &Path,
    pred_corpus: &BTreeMap<String, AnnotationFile>,
    lines: &mut Vec<serde_json::Value>,
) -> Result<(), CliError> {
    let render_cfg = TrackerConfig {
        contour_width: ctx.config.grounding.contour_width,
        ..TrackerConfig::default()
    };
    let mut modes: Vec<GroundingMode> = Vec::new();
    for mode in &args.grounding {
        if !modes.contains(mode) {
            modes.push(*mode);
        }
    }
    for mode in modes {
        let mut total_changed = 0usize;
        let mut total_clips = 0usize;
        for (video_id, pred) in pred_corpus {
            let frames = load_video(&frames_root.join(video_id))?;
            let tracks = pred.to_track_set()?;
            let mut changed = 0usize;
            let mut identities = 0usize;
            for identity in tracks.identities().collect::<Vec<_>>() {
                let clip = render_grounded_clip(&frames, &tracks, identity, mode, &render_cfg)?;
                changed += clip
                    .frames
                    .iter()
                    .zip(&frames)
                    .map(|(out, src)| pixels_changed(out, src))
                    .sum::<usize>();
                identities += 1;
                if let Some(out_root) = &args.clips_out {
                    let dir = out_root
                        .join(video_id)
                        .join(mode.as_str())
                        .join(identity.to_string());
                    save_frames(&dir, &clip.frames)?;
                }
            }
            lines.push(serde_json::json!({
                "kind": "grounding",
                "mode": mode.as_str(),
                "video": video_id,
                "identities": identities,
                "frames": frames.len(),
                "changed_pixels": changed,
            }));
            total_changed += changed;
            total_clips += identities;
        }
        println!(
            "grounding {}: {} clips, {} pixels touched",
            mode.as_str(),
            total_clips,
            total_changed
        );
        lines.push(serde_json::json!({
            "kind": "grounding-total",
            "mode": mode.as_str(),
            "clips": total_clips,
            "changed_pixels": total_changed,
        }));
    }
    Ok(())
}
