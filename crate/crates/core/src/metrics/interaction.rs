//! Interaction recognition scoring: strict exact-match precision, recall,
//! and micro-F1 over label sets per ordered identity pair, plus corpus
//! frequency statistics.

use std::collections::BTreeMap;

use crate::io::annotation::AnnotationFile;
use crate::label_space::LabelSpace;

/// Per-label confusion counts. `fn_` is the false-negative count (`fn` is
/// reserved).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassTally {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionEvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub per_class: BTreeMap<String, ClassTally>,
}

/// Score predicted interactions against ground truth with micro-averaged
/// exact set matching.
///
/// `identity_match` maps predicted identities to ground-truth identities
/// (the bijection produced by tracking evaluation). Pairs involving an
/// unmatched predicted identity cannot correspond to any ground truth, so
/// their labels count as pure false positives. Both label sets are mapped
/// through `space` first; labels outside the space are dropped on both
/// sides, which is how restricted spaces narrow the evaluation.
pub fn eval_interactions(
    gt: &AnnotationFile,
    pred: &AnnotationFile,
    space: &LabelSpace,
    identity_match: &BTreeMap<u32, u32>,
) -> InteractionEvalResult {
    let mut gt_pairs = BTreeMap::new();
    for (pair, labels) in gt.interaction_sets() {
        let mapped = space.map_set(&labels);
        if !mapped.is_empty() {
            gt_pairs.insert(pair, mapped);
        }
    }
    let mut pred_pairs: BTreeMap<(u32, u32), std::collections::BTreeSet<String>> = BTreeMap::new();
    let mut per_class: BTreeMap<String, ClassTally> = BTreeMap::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for ((subject, object), labels) in pred.interaction_sets() {
        let mapped = space.map_set(&labels);
        if mapped.is_empty() {
            continue;
        }
        match (identity_match.get(&subject), identity_match.get(&object)) {
            (Some(&s), Some(&o)) => {
                pred_pairs.entry((s, o)).or_default().extend(mapped);
            }
            _ => {
                fp += mapped.len();
                for label in mapped {
                    per_class.entry(label).or_default().fp += 1;
                }
            }
        }
    }

    let pairs: std::collections::BTreeSet<(u32, u32)> = gt_pairs
        .keys()
        .chain(pred_pairs.keys())
        .copied()
        .collect();
    let empty = std::collections::BTreeSet::new();
    for pair in pairs {
        let g = gt_pairs.get(&pair).unwrap_or(&empty);
        let p = pred_pairs.get(&pair).unwrap_or(&empty);
        for label in g.intersection(p) {
            tp += 1;
            per_class.entry(label.clone()).or_default().tp += 1;
        }
        for label in g.difference(p) {
            fn_ += 1;
            per_class.entry(label.clone()).or_default().fn_ += 1;
        }
        for label in p.difference(g) {
            fp += 1;
            per_class.entry(label.clone()).or_default().fp += 1;
        }
    }

    // Zero-denominator conventions: no predictions scores precision 0; no
    // ground truth scores recall 1 only when there are also no predictions.
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
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

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionStats {
    /// Labels with instance counts, most frequent first; ties break
    /// alphabetically.
    pub ranking: Vec<(String, usize)>,
    pub total: usize,
    pub top1_share: f64,
    pub top30_share: f64,
}

/// Count interaction label instances across a corpus. Every label in every
/// ordered pair's set is one instance.
pub fn interaction_stats<'a, I>(corpus: I) -> InteractionStats
where
    I: IntoIterator<Item = &'a AnnotationFile>,
{
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for file in corpus {
        for labels in file.interaction_sets().values() {
            for label in labels {
                *counts.entry(label.clone()).or_insert(0) += 1;
            }
        }
    }
    let total: usize = counts.values().sum();
    let mut ranking: Vec<(String, usize)> = counts.into_iter().collect();
    ranking.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let share = |n: usize| -> f64 {
        if total == 0 {
            0.0
        } else {
            ranking.iter().take(n).map(|(_, c)| c).sum::<usize>() as f64 / total as f64
        }
    };
    let top1_share = share(1);
    let top30_share = share(30);
    InteractionStats {
        ranking,
        total,
        top1_share,
        top30_share,
    }
}
