//! Caption quality scoring: BLEU-4, METEOR (exact + stem matching),
//! ROUGE-L, and corpus-level CIDEr.
//!
//! All four share one tokenizer: lowercase, punctuation replaced by
//! whitespace, split on whitespace. CIDEr is corpus-relative (its IDF is
//! computed over the reference sets being scored), so a singleton corpus
//! always scores 0 on it.

use std::collections::{HashMap, HashSet};

use rust_stemmers::{Algorithm, Stemmer};

use crate::error::{Error, Result};

pub const BLEU_MAX_ORDER: usize = 4;
pub const CIDER_MAX_ORDER: usize = 4;
pub const METEOR_ALPHA: f64 = 0.9;
pub const METEOR_BETA: i32 = 3;
pub const METEOR_GAMMA: f64 = 0.5;
pub const ROUGE_BETA: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptionEvalResult {
    pub bleu: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
}

/// One hypothesis with its reference set; the unit CIDEr computes IDF over.
#[derive(Debug, Clone)]
pub struct CaptionCorpusItem {
    pub refs: Vec<String>,
    pub hyp: String,
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU-4 with brevity penalty, no smoothing. Orders longer than the
/// hypothesis are excluded (weights renormalized) so that self-evaluation
/// of short sentences is still exact; any zero clipped precision among the
/// included orders yields 0.
fn bleu(refs: &[Vec<String>], hyp: &[String]) -> f64 {
    let c = hyp.len();
    if c == 0 {
        return 0.0;
    }
    // Effective reference length: closest to the hypothesis, shorter on ties.
    let r = refs
        .iter()
        .map(Vec::len)
        .min_by_key(|&l| ((l as i64 - c as i64).abs(), l))
        .unwrap_or(0);
    let max_order = BLEU_MAX_ORDER.min(c);
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let hyp_counts = ngram_counts(hyp, n);
        let total: usize = hyp_counts.values().sum();
        let mut clipped = 0usize;
        for (gram, &count) in &hyp_counts {
            let best = refs
                .iter()
                .map(|r| ngram_counts(r, n).get(gram).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            clipped += count.min(best);
        }
        if clipped == 0 {
            return 0.0;
        }
        log_sum += (clipped as f64 / total as f64).ln() / max_order as f64;
    }
    let bp = if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    bp * log_sum.exp()
}

/// One-to-one unigram alignment in two stages (surface form, then stem),
/// each matching hypothesis words left to right against the earliest free
/// reference word.
fn meteor_single(reference: &[String], hyp: &[String], stemmer: &Stemmer) -> f64 {
    if reference.is_empty() || hyp.is_empty() {
        return 0.0;
    }
    let mut ref_used = vec![false; reference.len()];
    let mut align: Vec<Option<usize>> = vec![None; hyp.len()];
    let mut stage = |hyp_keys: &[String], ref_keys: &[String], align: &mut Vec<Option<usize>>| {
        for (i, key) in hyp_keys.iter().enumerate() {
            if align[i].is_some() {
                continue;
            }
            for (j, other) in ref_keys.iter().enumerate() {
                if !ref_used[j] && other == key {
                    ref_used[j] = true;
                    align[i] = Some(j);
                    break;
                }
            }
        }
    };
    stage(hyp, reference, &mut align);
    let hyp_stems: Vec<String> = hyp.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    let ref_stems: Vec<String> = reference
        .iter()
        .map(|t| stemmer.stem(t).into_owned())
        .collect();
    stage(&hyp_stems, &ref_stems, &mut align);

    let matched: Vec<(usize, usize)> = align
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    let m = matched.len() as f64;
    if matched.is_empty() {
        return 0.0;
    }
    let precision = m / hyp.len() as f64;
    let recall = m / reference.len() as f64;
    let fmean = precision * recall / (METEOR_ALPHA * precision + (1.0 - METEOR_ALPHA) * recall);
    // A chunk is a maximal run of matches adjacent in both sentences.
    let mut chunks = 0usize;
    for (k, &(i, j)) in matched.iter().enumerate() {
        if k == 0 || i != matched[k - 1].0 + 1 || j != matched[k - 1].1 + 1 {
            chunks += 1;
        }
    }
    let penalty = METEOR_GAMMA * (chunks as f64 / m).powi(METEOR_BETA);
    fmean * (1.0 - penalty)
}

fn meteor(refs: &[Vec<String>], hyp: &[String], stemmer: &Stemmer) -> f64 {
    refs.iter()
        .map(|r| meteor_single(r, hyp, stemmer))
        .fold(0.0, f64::max)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn rouge_l_single(reference: &[String], hyp: &[String]) -> f64 {
    if reference.is_empty() || hyp.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(reference, hyp) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let precision = lcs / hyp.len() as f64;
    let recall = lcs / reference.len() as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    (1.0 + b2) * recall * precision / (recall + b2 * precision)
}

fn rouge_l(refs: &[Vec<String>], hyp: &[String]) -> f64 {
    refs.iter().map(|r| rouge_l_single(r, hyp)).fold(0.0, f64::max)
}

/// N-gram vectors weighted by TF times corpus IDF, one per order.
type GramVec<'a> = HashMap<&'a [String], f64>;

fn tf_idf_vec<'a>(
    tokens: &'a [String],
    n: usize,
    idf: &HashMap<Vec<String>, f64>,
    max_idf: f64,
) -> GramVec<'a> {
    ngram_counts(tokens, n)
        .into_iter()
        .map(|(gram, tf)| {
            let w = idf.get(gram).copied().unwrap_or(max_idf);
            (gram, tf as f64 * w)
        })
        .collect()
}

fn cosine(a: &GramVec, b: &GramVec) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(g, x)| b.get(g).map(|y| x * y))
        .sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Score a corpus of hypothesis/reference items together. BLEU, METEOR
/// and ROUGE-L are per-item; CIDEr shares document frequencies across the
/// whole corpus, counting each n-gram at most once per item's reference
/// set.
pub fn eval_caption_corpus(items: &[CaptionCorpusItem]) -> Result<Vec<CaptionEvalResult>> {
    if items.is_empty() {
        return Err(Error::invalid("caption eval", "empty corpus"));
    }
    for (i, item) in items.iter().enumerate() {
        if item.hyp.trim().is_empty() {
            return Err(Error::invalid(
                "caption eval",
                format!("item {i}: empty hypothesis"),
            ));
        }
        if item.refs.is_empty() || item.refs.iter().any(|r| r.trim().is_empty()) {
            return Err(Error::invalid(
                "caption eval",
                format!("item {i}: empty reference"),
            ));
        }
    }

    let hyps: Vec<Vec<String>> = items.iter().map(|it| tokenize(&it.hyp)).collect();
    let refs: Vec<Vec<Vec<String>>> = items
        .iter()
        .map(|it| it.refs.iter().map(|r| tokenize(r)).collect())
        .collect();

    // Document frequency over reference sets, clipped to one per item.
    let m = items.len() as f64;
    let mut idf_by_n: Vec<HashMap<Vec<String>, f64>> = Vec::with_capacity(CIDER_MAX_ORDER);
    for n in 1..=CIDER_MAX_ORDER {
        let mut df: HashMap<Vec<String>, usize> = HashMap::new();
        for item_refs in &refs {
            let mut seen: HashSet<&[String]> = HashSet::new();
            for r in item_refs {
                if r.len() >= n {
                    for gram in r.windows(n) {
                        seen.insert(gram);
                    }
                }
            }
            for gram in seen {
                *df.entry(gram.to_vec()).or_insert(0) += 1;
            }
        }
        idf_by_n.push(
            df.into_iter()
                .map(|(gram, d)| (gram, (m / d.max(1) as f64).ln()))
                .collect(),
        );
    }
    // Grams never seen in any reference take the maximum possible IDF.
    let max_idf = m.ln();

    let stemmer = Stemmer::create(Algorithm::English);
    let mut out = Vec::with_capacity(items.len());
    for (hyp, item_refs) in hyps.iter().zip(&refs) {
        let mut cider_sum = 0.0;
        for n in 1..=CIDER_MAX_ORDER {
            let idf = &idf_by_n[n - 1];
            let hyp_vec = tf_idf_vec(hyp, n, idf, max_idf);
            let per_ref: f64 = item_refs
                .iter()
                .map(|r| cosine(&hyp_vec, &tf_idf_vec(r, n, idf, max_idf)))
                .sum::<f64>()
                / item_refs.len() as f64;
            cider_sum += per_ref;
        }
        out.push(CaptionEvalResult {
            bleu: bleu(item_refs, hyp),
            meteor: meteor(item_refs, hyp, &stemmer),
            rouge_l: rouge_l(item_refs, hyp),
            cider: cider_sum / CIDER_MAX_ORDER as f64,
        });
    }
    Ok(out)
}

/// Score a single hypothesis against its references. CIDEr degenerates to
/// 0 here because the corpus has one item; use [`eval_caption_corpus`]
/// when CIDEr matters.
pub fn eval_caption(refs: &[String], hyp: &str) -> Result<CaptionEvalResult> {
    let items = [CaptionCorpusItem {
        refs: refs.to_vec(),
        hyp: hyp.to_owned(),
    }];
    Ok(eval_caption_corpus(&items)?.remove(0))
}
