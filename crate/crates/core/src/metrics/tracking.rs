//! Tracking evaluation: the HOTA family with its per-alpha decomposition,
//! the CLEAR metrics (MOTA, identity switches), and the identity-based
//! IDF1/IDP/IDR scores whose global bijection is also reused to pair
//! identities for interaction scoring.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use crate::io::annotation::AnnotationFile;
use crate::metrics::matching::max_weight_assignment;
use crate::track::TrackSet;

/// Float guard band for similarity-vs-threshold comparisons, so an IoU
/// that equals a grid value is counted as meeting it.
const SIM_EPS: f64 = 1e-12;

/// Per-identity boxed frames, the shape every tracking metric consumes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackingData {
    pub frame_count: usize,
    pub tracks: BTreeMap<u32, BTreeMap<usize, BoundingBox>>,
}

impl TrackingData {
    pub fn new(frame_count: usize) -> Self {
        TrackingData {
            frame_count,
            tracks: BTreeMap::new(),
        }
    }

    pub fn insert_box(&mut self, identity: u32, frame: usize, bbox: BoundingBox) {
        debug_assert!(frame < self.frame_count, "frame beyond declared range");
        self.tracks.entry(identity).or_default().insert(frame, bbox);
    }

    pub fn from_annotation(file: &AnnotationFile) -> Self {
        let mut data = TrackingData::new(file.frame_count);
        for (id, track) in &file.tracks {
            for (i, entry) in track.entries.iter().enumerate() {
                if let Some(b) = entry.bbox() {
                    data.insert_box(*id, track.birth_frame + i, b);
                }
            }
        }
        data
    }

    pub fn from_track_set(tracks: &TrackSet) -> Self {
        let mut data = TrackingData::new(tracks.frames_processed());
        for track in tracks.tracks() {
            for (frame, bbox) in track.boxed_frames() {
                data.insert_box(track.identity, frame, bbox);
            }
        }
        data
    }

    fn objects_at(&self, frame: usize) -> Vec<(u32, BoundingBox)> {
        self.tracks
            .iter()
            .filter_map(|(id, frames)| frames.get(&frame).map(|b| (*id, *b)))
            .collect()
    }

    fn detection_total(&self) -> usize {
        self.tracks.values().map(BTreeMap::len).sum()
    }
}

/// Standard localization-threshold grid: 0.05 to 0.95 in steps of 0.05.
pub fn alpha_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

#[derive(Debug, Clone)]
pub struct TrackingEvalConfig {
    /// Binary overlap threshold for CLEAR and identity metrics.
    pub iou_threshold: f64,
    pub alphas: Vec<f64>,
}

impl Default for TrackingEvalConfig {
    fn default() -> Self {
        TrackingEvalConfig {
            iou_threshold: 0.5,
            alphas: alpha_grid(),
        }
    }
}

/// HOTA components at one localization threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSlice {
    pub alpha: f64,
    pub tp: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub deta: f64,
    pub assa: f64,
    pub hota: f64,
    pub loca: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingEvalResult {
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub loca: f64,
    pub per_alpha: Vec<AlphaSlice>,
    pub mota: f64,
    pub switches: usize,
    pub clear_false_negatives: usize,
    pub clear_false_positives: usize,
    pub gt_detections: usize,
    pub idf1: f64,
    pub idp: f64,
    pub idr: f64,
    /// Predicted identity to ground-truth identity, from the IDF1 global
    /// matching; only pairs that overlap at least once are kept.
    pub identity_bijection: BTreeMap<u32, u32>,
}

/// Evaluate predicted tracks against ground truth over a shared frame
/// range. Similarity is box IoU throughout.
pub fn eval_tracking(
    gt: &TrackingData,
    pred: &TrackingData,
    cfg: &TrackingEvalConfig,
) -> Result<TrackingEvalResult> {
    if gt.frame_count != pred.frame_count {
        return Err(Error::invalid(
            "tracking eval",
            format!(
                "frame ranges differ: ground truth {} vs prediction {}",
                gt.frame_count, pred.frame_count
            ),
        ));
    }
    if cfg.alphas.is_empty() {
        return Err(Error::invalid("tracking eval", "alpha grid is empty"));
    }

    let gt_ids: Vec<u32> = gt.tracks.keys().copied().collect();
    let pred_ids: Vec<u32> = pred.tracks.keys().copied().collect();
    let gt_pos: BTreeMap<u32, usize> = gt_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let pred_pos: BTreeMap<u32, usize> =
        pred_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let ng = gt_ids.len();
    let np = pred_ids.len();

    let gt_count: Vec<f64> = gt_ids.iter().map(|id| gt.tracks[id].len() as f64).collect();
    let pred_count: Vec<f64> = pred_ids.iter().map(|id| pred.tracks[id].len() as f64).collect();

    // Per-frame object lists and similarity matrices, computed once.
    struct FrameSlice {
        gt: Vec<usize>,
        pred: Vec<usize>,
        sim: Vec<Vec<f64>>,
    }
    let mut frames = Vec::with_capacity(gt.frame_count);
    for t in 0..gt.frame_count {
        let gs = gt.objects_at(t);
        let ps = pred.objects_at(t);
        let sim: Vec<Vec<f64>> = gs
            .iter()
            .map(|(_, gb)| ps.iter().map(|(_, pb)| iou(gb, pb)).collect())
            .collect();
        frames.push(FrameSlice {
            gt: gs.iter().map(|(id, _)| gt_pos[id]).collect(),
            pred: ps.iter().map(|(id, _)| pred_pos[id]).collect(),
            sim,
        });
    }

    // Global alignment: per-frame similarity Jaccards accumulated per id
    // pair, then normalized by the union of the two ids' detections.
    let mut potential = vec![vec![0.0f64; np]; ng];
    for fs in &frames {
        let row_sums: Vec<f64> = fs.sim.iter().map(|r| r.iter().sum()).collect();
        let mut col_sums = vec![0.0f64; fs.pred.len()];
        for row in &fs.sim {
            for (c, s) in row.iter().enumerate() {
                col_sums[c] += s;
            }
        }
        for (r, &gi) in fs.gt.iter().enumerate() {
            for (c, &pj) in fs.pred.iter().enumerate() {
                let s = fs.sim[r][c];
                let denom = row_sums[r] + col_sums[c] - s;
                if denom > SIM_EPS {
                    potential[gi][pj] += s / denom;
                }
            }
        }
    }
    let gas = |gi: usize, pj: usize| -> f64 {
        let denom = gt_count[gi] + pred_count[pj] - potential[gi][pj];
        if denom > SIM_EPS {
            potential[gi][pj] / denom
        } else {
            0.0
        }
    };

    // HOTA: per alpha, a fresh per-frame matching over edges with
    // similarity >= alpha. The weight makes match count dominate, then
    // total alignment, then similarity as the final tie-break.
    let mut per_alpha = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        let mut tp = 0usize;
        let mut fns = 0usize;
        let mut fps = 0usize;
        let mut loca_sum = 0.0f64;
        let mut matches = vec![vec![0.0f64; np]; ng];
        for fs in &frames {
            let m = fs.gt.len().max(fs.pred.len());
            let big = 2.0 * (m as f64 + 1.0);
            let weights: Vec<Vec<f64>> = fs
                .gt
                .iter()
                .enumerate()
                .map(|(r, &gi)| {
                    fs.pred
                        .iter()
                        .enumerate()
                        .map(|(c, &pj)| {
                            let s = fs.sim[r][c];
                            if s >= alpha - SIM_EPS {
                                big + gas(gi, pj) + 1e-4 * s
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            let assignment = max_weight_assignment(&weights);
            let mut matched = 0usize;
            for (r, col) in assignment.iter().enumerate() {
                if let Some(c) = *col {
                    let s = fs.sim[r][c];
                    if s >= alpha - SIM_EPS {
                        matched += 1;
                        loca_sum += s;
                        matches[fs.gt[r]][fs.pred[c]] += 1.0;
                    }
                }
            }
            tp += matched;
            fns += fs.gt.len() - matched;
            fps += fs.pred.len() - matched;
        }
        let det_denom = (tp + fns + fps).max(1) as f64;
        let deta = tp as f64 / det_denom;
        let mut ass_sum = 0.0f64;
        for gi in 0..ng {
            for pj in 0..np {
                let m = matches[gi][pj];
                if m > 0.0 {
                    ass_sum += m * (m / (gt_count[gi] + pred_count[pj] - m));
                }
            }
        }
        let assa = ass_sum / (tp.max(1) as f64);
        // No true positives leaves localization quality undefined; report 1.
        let loca = if tp > 0 { loca_sum / tp as f64 } else { 1.0 };
        per_alpha.push(AlphaSlice {
            alpha,
            tp,
            false_negatives: fns,
            false_positives: fps,
            deta,
            assa,
            hota: (deta * assa).sqrt(),
            loca,
        });
    }
    let mean = |f: &dyn Fn(&AlphaSlice) -> f64| -> f64 {
        per_alpha.iter().map(|s| f(s)).sum::<f64>() / per_alpha.len() as f64
    };
    let hota = mean(&|s| s.hota);
    let deta = mean(&|s| s.deta);
    let assa = mean(&|s| s.assa);
    let loca = mean(&|s| s.loca);

    // CLEAR: matches persist from the previous frame while still above
    // threshold; the rest re-match by IoU. A switch is counted when a
    // ground-truth object resumes with a different identity than its last
    // known one.
    let tau = cfg.iou_threshold;
    let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
    let mut last_known: BTreeMap<usize, usize> = BTreeMap::new();
    let mut clear_fn = 0usize;
    let mut clear_fp = 0usize;
    let mut switches = 0usize;
    for fs in &frames {
        let mut current: BTreeMap<usize, usize> = BTreeMap::new();
        let mut gt_free: Vec<usize> = Vec::new();
        let mut pred_used = vec![false; fs.pred.len()];
        for (r, &gi) in fs.gt.iter().enumerate() {
            let carried = prev.get(&gi).and_then(|&pj| {
                let c = fs.pred.iter().position(|&q| q == pj)?;
                (fs.sim[r][c] >= tau - SIM_EPS).then_some(c)
            });
            match carried {
                Some(c) => {
                    pred_used[c] = true;
                    current.insert(gi, fs.pred[c]);
                }
                None => gt_free.push(r),
            }
        }
        let free_cols: Vec<usize> = (0..fs.pred.len()).filter(|c| !pred_used[*c]).collect();
        if !gt_free.is_empty() && !free_cols.is_empty() {
            let weights: Vec<Vec<f64>> = gt_free
                .iter()
                .map(|&r| {
                    free_cols
                        .iter()
                        .map(|&c| {
                            let s = fs.sim[r][c];
                            if s >= tau - SIM_EPS {
                                s
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            for (k, col) in max_weight_assignment(&weights).iter().enumerate() {
                if let Some(c) = *col {
                    let r = gt_free[k];
                    let c = free_cols[c];
                    if fs.sim[r][c] >= tau - SIM_EPS {
                        current.insert(fs.gt[r], fs.pred[c]);
                    }
                }
            }
        }
        for (&gi, &pj) in &current {
            if let Some(&old) = last_known.get(&gi) {
                if old != pj {
                    switches += 1;
                }
            }
            last_known.insert(gi, pj);
        }
        clear_fn += fs.gt.len() - current.len();
        clear_fp += fs.pred.len() - current.len();
        prev = current;
    }
    let gt_total = gt.detection_total();
    let mota = 1.0 - (clear_fn + clear_fp + switches) as f64 / gt_total.max(1) as f64;

    // Identity metrics: one global bijection between tracks maximizing the
    // number of frames where the paired identities overlap above threshold.
    let mut overlap = vec![vec![0.0f64; np]; ng];
    for fs in &frames {
        for (r, &gi) in fs.gt.iter().enumerate() {
            for (c, &pj) in fs.pred.iter().enumerate() {
                if fs.sim[r][c] >= tau - SIM_EPS {
                    overlap[gi][pj] += 1.0;
                }
            }
        }
    }
    let id_assignment = max_weight_assignment(&overlap);
    let mut idtp = 0.0f64;
    let mut identity_bijection = BTreeMap::new();
    for (gi, col) in id_assignment.iter().enumerate() {
        if let Some(pj) = *col {
            if overlap[gi][pj] > 0.0 {
                idtp += overlap[gi][pj];
                identity_bijection.insert(pred_ids[pj], gt_ids[gi]);
            }
        }
    }
    let pred_total = pred.detection_total();
    let idfp = pred_total as f64 - idtp;
    let idfn = gt_total as f64 - idtp;
    let idp = if pred_total == 0 {
        if gt_total == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        idtp / pred_total as f64
    };
    let idr = if gt_total == 0 {
        if pred_total == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        idtp / gt_total as f64
    };
    let idf1_denom = 2.0 * idtp + idfp + idfn;
    let idf1 = if idf1_denom == 0.0 {
        1.0
    } else {
        2.0 * idtp / idf1_denom
    };

    Ok(TrackingEvalResult {
        hota,
        deta,
        assa,
        loca,
        per_alpha,
        mota,
        switches,
        clear_false_negatives: clear_fn,
        clear_false_positives: clear_fp,
        gt_detections: gt_total,
        idf1,
        idp,
        idr,
        identity_bijection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(x: f64, y: f64) -> BoundingBox {
        BoundingBox {
            x,
            y,
            w: 10.0,
            h: 10.0,
        }
    }

    /// One identity holding one position for `frames` frames.
    fn constant_track(data: &mut TrackingData, id: u32, range: std::ops::Range<usize>, x: f64) {
        for t in range {
            data.insert_box(id, t, unit_box(x, 0.0));
        }
    }

    #[test]
    fn identical_tracks_score_perfectly() {
        let mut gt = TrackingData::new(10);
        constant_track(&mut gt, 1, 0..10, 0.0);
        constant_track(&mut gt, 2, 3..10, 50.0);
        let pred = gt.clone();
        let res = eval_tracking(&gt, &pred, &TrackingEvalConfig::default()).unwrap();
        assert!((res.hota - 1.0).abs() < 1e-12);
        assert!((res.deta - 1.0).abs() < 1e-12);
        assert!((res.assa - 1.0).abs() < 1e-12);
        assert!((res.loca - 1.0).abs() < 1e-12);
        assert_eq!(res.mota, 1.0);
        assert_eq!(res.switches, 0);
        assert_eq!(res.idf1, 1.0);
        assert_eq!(res.identity_bijection[&1], 1);
        assert_eq!(res.identity_bijection[&2], 2);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let mut gt = TrackingData::new(5);
        constant_track(&mut gt, 1, 0..5, 0.0);
        let pred = TrackingData::new(5);
        let res = eval_tracking(&gt, &pred, &TrackingEvalConfig::default()).unwrap();
        assert_eq!(res.hota, 0.0);
        assert_eq!(res.deta, 0.0);
        assert_eq!(res.mota, 0.0, "five misses over five ground-truth boxes");
        assert_eq!(res.idf1, 0.0);
        assert_eq!(res.idp, 0.0);
        assert_eq!(res.idr, 0.0);
        assert!(res.identity_bijection.is_empty());
    }

    #[test]
    fn half_covered_track_has_hand_computed_components() {
        // One ground-truth identity over 2 frames; the prediction covers
        // only the first, perfectly. Alignment 1/(2+1-1) = 0.5 at every
        // alpha, detection 1/2, so HOTA = sqrt(0.25) = 0.5.
        let mut gt = TrackingData::new(2);
        constant_track(&mut gt, 1, 0..2, 0.0);
        let mut pred = TrackingData::new(2);
        constant_track(&mut pred, 7, 0..1, 0.0);
        let res = eval_tracking(&gt, &pred, &TrackingEvalConfig::default()).unwrap();
        assert!((res.deta - 0.5).abs() < 1e-12);
        assert!((res.assa - 0.5).abs() < 1e-12);
        assert!((res.hota - 0.5).abs() < 1e-12);
        assert!((res.loca - 1.0).abs() < 1e-12);
        assert!((res.mota - 0.5).abs() < 1e-12);
        assert_eq!(res.switches, 0);
        assert!((res.idf1 - (2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(res.idp, 1.0);
        assert_eq!(res.idr, 0.5);
        assert_eq!(res.identity_bijection[&7], 1);
    }

    #[test]
    fn split_track_counts_one_switch() {
        // Ground truth: one identity, 10 frames. Prediction: identity 1 for
        // the first 5 frames, identity 2 for the last 5, perfect boxes.
        let mut gt = TrackingData::new(10);
        constant_track(&mut gt, 1, 0..10, 0.0);
        let mut pred = TrackingData::new(10);
        constant_track(&mut pred, 1, 0..5, 0.0);
        constant_track(&mut pred, 2, 5..10, 0.0);
        let res = eval_tracking(&gt, &pred, &TrackingEvalConfig::default()).unwrap();
        assert_eq!(res.switches, 1);
        assert!((res.mota - 0.9).abs() < 1e-12);
        assert!((res.idf1 - 0.5).abs() < 1e-12);
        assert!((res.deta - 1.0).abs() < 1e-12, "every frame still matches");
        assert!(res.assa < 1.0, "association is penalized by the split");
    }

    #[test]
    fn hota_is_self_consistent_across_the_grid() {
        let mut gt = TrackingData::new(8);
        constant_track(&mut gt, 1, 0..8, 0.0);
        constant_track(&mut gt, 2, 2..8, 30.0);
        let mut pred = TrackingData::new(8);
        constant_track(&mut pred, 5, 0..6, 2.0);
        constant_track(&mut pred, 6, 2..8, 31.0);
        let res = eval_tracking(&gt, &pred, &TrackingEvalConfig::default()).unwrap();
        assert_eq!(res.per_alpha.len(), 19);
        let mean_hota: f64 =
            res.per_alpha.iter().map(|s| (s.deta * s.assa).sqrt()).sum::<f64>() / 19.0;
        assert!((res.hota - mean_hota).abs() < 1e-12);
        for s in &res.per_alpha {
            assert!((s.hota - (s.deta * s.assa).sqrt()).abs() < 1e-12);
            assert!(s.deta >= 0.0 && s.deta <= 1.0);
            assert!(s.assa >= 0.0 && s.assa <= 1.0);
        }
    }

    #[test]
    fn mismatched_frame_ranges_are_rejected() {
        let gt = TrackingData::new(5);
        let pred = TrackingData::new(6);
        assert!(eval_tracking(&gt, &pred, &TrackingEvalConfig::default()).is_err());
    }

    #[test]
    fn empty_both_sides_uses_documented_conventions() {
        let gt = TrackingData::new(3);
        let pred = TrackingData::new(3);
        let res = eval_tracking(&gt, &pred, &TrackingEvalConfig::default()).unwrap();
        assert_eq!(res.mota, 1.0, "nothing to miss");
        assert_eq!(res.idf1, 1.0);
        assert_eq!(res.deta, 0.0, "detection accuracy is vacuously zero");
    }
}
