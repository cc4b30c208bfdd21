//! Corpus aggregation shared by `eval` and `ablate`. Interaction counts
//! pool across videos (micro average); tracking ratios average per video
//! with the raw counts summed alongside.

use std::collections::BTreeMap;

use semtrack::io::report::{InteractionRecord, TallyRecord, TrackingRecord};
use semtrack::metrics::interaction::InteractionEvalResult;

/// Pool per-video confusion counts and recompute the micro scores under
/// the same zero-denominator conventions the per-video evaluation uses:
/// no predictions scores precision 0; no ground truth scores recall 1 only
/// when there are also no predictions.
pub fn merge_interactions(results: &[InteractionEvalResult]) -> Option<InteractionRecord> {
    if results.is_empty() {
        return None;
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    let mut per_class: BTreeMap<String, TallyRecord> = BTreeMap::new();
    for result in results {
        tp += result.tp;
        fp += result.fp;
        fn_ += result.fn_;
        for (class, tally) in &result.per_class {
            let slot = per_class.entry(class.clone()).or_default();
            slot.tp += tally.tp;
            slot.fp += tally.fp;
            slot.fn_ += tally.fn_;
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 {
        if tp + fp == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Some(InteractionRecord {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
        per_class,
    })
}

/// Corpus tracking summary: ratio metrics are unweighted means over videos
/// (every video counts equally regardless of length), event counts are
/// plain sums.
pub fn mean_tracking(records: &[TrackingRecord]) -> Option<TrackingRecord> {
    if records.is_empty() {
        return None;
    }
    let n = records.len() as f64;
    let mean = |f: fn(&TrackingRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    Some(TrackingRecord {
        hota: mean(|r| r.hota),
        deta: mean(|r| r.deta),
        assa: mean(|r| r.assa),
        loca: mean(|r| r.loca),
        mota: mean(|r| r.mota),
        idsw: records.iter().map(|r| r.idsw).sum(),
        idf1: mean(|r| r.idf1),
        idp: mean(|r| r.idp),
        idr: mean(|r| r.idr),
        gt_detections: records.iter().map(|r| r.gt_detections).sum(),
        false_negatives: records.iter().map(|r| r.false_negatives).sum(),
        false_positives: records.iter().map(|r| r.false_positives).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use semtrack::metrics::interaction::ClassTally;

    fn result(tp: usize, fp: usize, fn_: usize) -> InteractionEvalResult {
        let mut per_class = BTreeMap::new();
        per_class.insert("talk.v.02".to_string(), ClassTally { tp, fp, fn_ });
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 {
            if tp + fp == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        InteractionEvalResult {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            per_class,
        }
    }

    #[test]
    fn pooled_counts_drive_the_micro_scores() {
        let merged = merge_interactions(&[result(3, 1, 0), result(1, 1, 2)]).unwrap();
        assert_eq!((merged.tp, merged.fp, merged.fn_), (4, 2, 2));
        assert!((merged.precision - 4.0 / 6.0).abs() < 1e-12);
        assert!((merged.recall - 4.0 / 6.0).abs() < 1e-12);
        assert!((merged.f1 - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(merged.per_class["talk.v.02"].tp, 4);
    }

    #[test]
    fn zero_denominator_conventions_match_per_video_scoring() {
        let empty = merge_interactions(&[result(0, 0, 0)]).unwrap();
        assert_eq!((empty.precision, empty.recall, empty.f1), (0.0, 1.0, 0.0));
        let only_fp = merge_interactions(&[result(0, 2, 0)]).unwrap();
        assert_eq!((only_fp.precision, only_fp.recall, only_fp.f1), (0.0, 0.0, 0.0));
        assert!(merge_interactions(&[]).is_none());
    }

    #[test]
    fn tracking_means_ratios_and_sums_counts() {
        let a = TrackingRecord {
            hota: 1.0,
            deta: 1.0,
            assa: 1.0,
            loca: 1.0,
            mota: 1.0,
            idsw: 0,
            idf1: 1.0,
            idp: 1.0,
            idr: 1.0,
            gt_detections: 10,
            false_negatives: 0,
            false_positives: 0,
        };
        let b = TrackingRecord {
            hota: 0.5,
            deta: 0.5,
            assa: 0.5,
            loca: 0.8,
            mota: 0.4,
            idsw: 2,
            idf1: 0.5,
            idp: 0.5,
            idr: 0.5,
            gt_detections: 20,
            false_negatives: 6,
            false_positives: 4,
        };
        let merged = mean_tracking(&[a, b]).unwrap();
        assert!((merged.hota - 0.75).abs() < 1e-12);
        assert!((merged.mota - 0.7).abs() < 1e-12);
        assert!((merged.loca - 0.9).abs() < 1e-12);
        assert_eq!(merged.idsw, 2);
        assert_eq!(merged.gt_detections, 30);
        assert_eq!(merged.false_negatives, 6);
        assert_eq!(merged.false_positives, 4);
        assert!(mean_tracking(&[]).is_none());
    }
}
