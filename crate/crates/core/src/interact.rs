//! Interaction extraction: pull directed predicate verbs out of the
//! instance captions with one structured language-model call, then align
//! each verb to a vocabulary label by gloss-embedding retrieval plus an
//! optional language-model pick among the top candidates.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use crate::backends::{EmbeddingBackend, LlmBackend, OutputSchema};
use crate::error::{Error, Result, Stage};
use crate::label_space::Synset;
use crate::prompts;

/// Directed predicate verbs per ordered identity pair. Verbs are lowercase
/// base forms as received; no self pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredicateSet {
    pub by_pair: BTreeMap<(u32, u32), Vec<String>>,
}

impl PredicateSet {
    pub fn is_empty(&self) -> bool {
        self.by_pair.is_empty()
    }
}

/// Ranked retrieval result for one predicate: scores non-increasing,
/// each in [-1, 1], at most K entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    pub predicate: String,
    pub candidates: Vec<(Synset, f64)>,
}

/// How the final label is chosen among the retrieved candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selector {
    /// Language model picks one candidate by index.
    Llm,
    /// Highest-cosine candidate, no language-model call.
    Top1Cosine,
    /// All retrieved candidates become predictions.
    Top5Cosine,
}

impl Selector {
    pub fn as_str(self) -> &'static str {
        match self {
            Selector::Llm => "llm",
            Selector::Top1Cosine => "top1-cosine",
            Selector::Top5Cosine => "top5-cosine",
        }
    }

    pub const ALL: [Selector; 3] = [Selector::Llm, Selector::Top1Cosine, Selector::Top5Cosine];
}

impl std::str::FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "llm" => Ok(Selector::Llm),
            "top1-cosine" => Ok(Selector::Top1Cosine),
            "top5-cosine" => Ok(Selector::Top5Cosine),
            other => Err(Error::invalid(
                "selector",
                format!("unknown selector {other:?}, expected llm, top1-cosine, or top5-cosine"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AlignConfig {
    pub selector: Selector,
    pub top_k: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            selector: Selector::Llm,
            top_k: 5,
        }
    }
}

/// Structured-output constraint for the predicate-extraction call.
pub fn predicate_schema() -> OutputSchema {
    OutputSchema::new(
        "interaction_predicates",
        serde_json::json!({
            "type": "object",
            "patternProperties": {
                "^ID_[0-9]+$": {
                    "type": "object",
                    "patternProperties": {
                        "^ID_[0-9]+$": {"type": "array", "items": {"type": "string"}}
                    },
                    "additionalProperties": false
                }
            },
            "additionalProperties": false
        }),
    )
}

/// Structured-output constraint for the candidate-selection call.
pub fn selection_schema() -> OutputSchema {
    OutputSchema::new(
        "synset_choice",
        serde_json::json!({
            "type": "object",
            "properties": {"wordnet-id": {"type": "string"}},
            "required": ["wordnet-id"],
            "additionalProperties": false
        }),
    )
}

fn parse_identity_key(key: &str) -> Option<u32> {
    let digits = key.strip_prefix("ID_")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// One language-model call over the full caption map, parsed into directed
/// predicate sets. Fewer than two captions make pairs impossible, so the
/// call is skipped and the result is empty.
pub fn extract_predicates(
    captions: &BTreeMap<u32, String>,
    llm: &dyn LlmBackend,
) -> Result<PredicateSet> {
    if captions.is_empty() {
        return Err(Error::invalid("captions", "caption map is empty"));
    }
    if captions.len() < 2 {
        return Ok(PredicateSet::default());
    }
    let prompt = prompts::predicate_extraction_prompt(captions);
    let schema = predicate_schema();
    let raw = llm
        .complete(&prompt, Some(&schema))
        .map_err(|e| e.in_stage(Stage::PredicateExtraction))?;
    parse_predicate_response(&raw, captions).map_err(|e| e.in_stage(Stage::PredicateExtraction))
}

fn parse_predicate_response(
    raw: &str,
    captions: &BTreeMap<u32, String>,
) -> Result<PredicateSet> {
    let violation = |reason: String| Error::SchemaViolation {
        reason,
        raw: raw.to_string(),
    };
    let value: Value = serde_json::from_str(raw.trim())
        .map_err(|e| violation(format!("response is not JSON: {e}")))?;
    let top = value
        .as_object()
        .ok_or_else(|| violation("top level is not an object".into()))?;

    let mut out = PredicateSet::default();
    for (subj_key, inner) in top {
        let subject = parse_identity_key(subj_key)
            .ok_or_else(|| violation(format!("key {subj_key:?} is not of the form ID_<n>")))?;
        let inner = inner
            .as_object()
            .ok_or_else(|| violation(format!("{subj_key} does not map to an object")))?;
        if !captions.contains_key(&subject) {
            log::warn!("predicate response names unknown identity {subject}, dropping its entries");
            continue;
        }
        for (obj_key, verbs) in inner {
            let object = parse_identity_key(obj_key)
                .ok_or_else(|| violation(format!("key {obj_key:?} is not of the form ID_<n>")))?;
            let verbs = verbs
                .as_array()
                .ok_or_else(|| violation(format!("{subj_key}/{obj_key} is not an array")))?;
            if object == subject {
                continue;
            }
            if !captions.contains_key(&object) {
                log::warn!(
                    "predicate response names unknown identity {object}, dropping pair ({subject}, {object})"
                );
                continue;
            }
            let mut cleaned: Vec<String> = Vec::new();
            for verb in verbs {
                let verb = verb
                    .as_str()
                    .ok_or_else(|| violation(format!("{subj_key}/{obj_key} contains a non-string verb")))?;
                let verb = verb.trim().to_lowercase();
                if !verb.is_empty() && !cleaned.contains(&verb) {
                    cleaned.push(verb);
                }
            }
            if !cleaned.is_empty() {
                out.by_pair.insert((subject, object), cleaned);
            }
        }
    }
    Ok(out)
}

/// Cosine similarity of the embeddings of a predicate and a gloss.
/// Degenerate (zero-norm or non-finite) cases score 0.
pub fn gloss_similarity(
    predicate: &str,
    synset: &Synset,
    embedder: &dyn EmbeddingBackend,
) -> Result<f64> {
    let p = embedder.embed(predicate)?;
    let g = embedder.embed(&synset.gloss)?;
    Ok(cosine(&p, &g, &synset.id)?)
}

fn cosine(a: &[f64], b: &[f64], context: &str) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::backend(
            "embedder",
            format!("dimension mismatch ({} vs {}) scoring {context}", a.len(), b.len()),
        ));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        log::warn!("zero-norm embedding scoring {context}, similarity defined as 0");
        return Ok(0.0);
    }
    let cos = dot / (na * nb);
    if !cos.is_finite() {
        log::warn!("non-finite similarity scoring {context}, defined as 0");
        return Ok(0.0);
    }
    Ok(cos.clamp(-1.0, 1.0))
}

/// Gloss embeddings for a vocabulary, computed once and reused across
/// every retrieval in a run.
pub struct GlossIndex<'a> {
    synsets: &'a [Synset],
    vectors: Vec<Vec<f64>>,
}

impl<'a> GlossIndex<'a> {
    pub fn build(synsets: &'a [Synset], embedder: &dyn EmbeddingBackend) -> Result<Self> {
        if synsets.is_empty() {
            return Err(Error::invalid("vocabulary", "synset list is empty"));
        }
        let mut vectors = Vec::with_capacity(synsets.len());
        for s in synsets {
            vectors.push(embedder.embed(&s.gloss)?);
        }
        Ok(GlossIndex { synsets, vectors })
    }

    pub fn synsets(&self) -> &[Synset] {
        self.synsets
    }
}

/// Top-K synsets by gloss cosine against `predicate`. Ties break by
/// lexicographic synset id so retrieval is deterministic.
pub fn retrieve_topk(
    predicate: &str,
    index: &GlossIndex<'_>,
    embedder: &dyn EmbeddingBackend,
    k: usize,
) -> Result<CandidateList> {
    if k == 0 {
        return Err(Error::invalid("retrieval", "K must be at least 1"));
    }
    let p = embedder.embed(predicate)?;
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(index.synsets.len());
    for (i, vector) in index.vectors.iter().enumerate() {
        scored.push((i, cosine(&p, vector, &index.synsets[i].id)?));
    }
    scored.sort_by(|(ia, sa), (ib, sb)| {
        sb.partial_cmp(sa)
            .expect("similarities are finite")
            .then_with(|| index.synsets[*ia].id.cmp(&index.synsets[*ib].id))
    });
    scored.truncate(k);
    Ok(CandidateList {
        predicate: predicate.to_string(),
        candidates: scored
            .into_iter()
            .map(|(i, s)| (index.synsets[i].clone(), s))
            .collect(),
    })
}

/// Context sentence for the selection prompt: both instance captions plus
/// the predicate under alignment.
pub fn selection_sentence(subject_caption: &str, object_caption: &str, predicate: &str) -> String {
    format!("{subject_caption} {object_caption} Predicate: {predicate}.")
}

/// Ask the language model to pick one candidate by 1-based index. A single
/// candidate is returned directly without a call. An unparseable or
/// out-of-range answer falls back to the rank-1 candidate.
pub fn select_synset(
    predicate: &str,
    candidates: &CandidateList,
    sentence: &str,
    llm: &dyn LlmBackend,
) -> Result<Synset> {
    let list = &candidates.candidates;
    if list.is_empty() {
        return Err(Error::invalid("selection", "candidate list is empty"));
    }
    if list.len() == 1 {
        return Ok(list[0].0.clone());
    }
    let numbered: Vec<(String, String)> = list
        .iter()
        .map(|(s, _)| (s.id.clone(), s.gloss.clone()))
        .collect();
    let prompt = prompts::synset_selection_prompt(sentence, &numbered);
    let schema = selection_schema();
    let raw = llm
        .complete(&prompt, Some(&schema))
        .map_err(|e| e.in_stage(Stage::SynsetAlignment))?;
    match parse_selection_index(&raw, list.len()) {
        Some(i) => Ok(list[i - 1].0.clone()),
        None => {
            log::warn!(
                "unusable selection answer {raw:?} for predicate {predicate:?}, falling back to rank 1"
            );
            Ok(list[0].0.clone())
        }
    }
}

fn parse_selection_index(raw: &str, len: usize) -> Option<usize> {
    let value: Value = serde_json::from_str(raw.trim()).ok()?;
    let field = value.get("wordnet-id")?;
    let index: usize = match field {
        Value::String(s) => s.trim().parse().ok()?,
        Value::Number(n) => usize::try_from(n.as_u64()?).ok()?,
        _ => return None,
    };
    (1..=len).contains(&index).then_some(index)
}

/// Align every predicate to label ids. Retrieval runs once per distinct
/// verb; a failing predicate is logged and yields no label rather than
/// aborting the pair.
pub fn align_interactions(
    preds: &PredicateSet,
    index: &GlossIndex<'_>,
    captions: &BTreeMap<u32, String>,
    embedder: &dyn EmbeddingBackend,
    llm: &dyn LlmBackend,
    cfg: &AlignConfig,
) -> Result<BTreeMap<(u32, u32), BTreeSet<String>>> {
    let mut retrieved: BTreeMap<&str, CandidateList> = BTreeMap::new();
    let mut out: BTreeMap<(u32, u32), BTreeSet<String>> = BTreeMap::new();
    for (&(subject, object), verbs) in &preds.by_pair {
        let labels = out.entry((subject, object)).or_default();
        for verb in verbs {
            if !retrieved.contains_key(verb.as_str()) {
                match retrieve_topk(verb, index, embedder, cfg.top_k) {
                    Ok(list) => {
                        retrieved.insert(verb, list);
                    }
                    Err(e) => {
                        log::warn!("retrieval failed for predicate {verb:?}: {e}");
                        continue;
                    }
                }
            }
            let candidates = &retrieved[verb.as_str()];
            match cfg.selector {
                Selector::Top1Cosine => {
                    labels.insert(candidates.candidates[0].0.id.clone());
                }
                Selector::Top5Cosine => {
                    for (synset, _) in &candidates.candidates {
                        labels.insert(synset.id.clone());
                    }
                }
                Selector::Llm => {
                    let (Some(sc), Some(oc)) = (captions.get(&subject), captions.get(&object))
                    else {
                        log::warn!(
                            "missing caption for pair ({subject}, {object}), skipping predicate {verb:?}"
                        );
                        continue;
                    };
                    let sentence = selection_sentence(sc, oc, verb);
                    match select_synset(verb, candidates, &sentence, llm) {
                        Ok(synset) => {
                            labels.insert(synset.id);
                        }
                        Err(e) => log::warn!(
                            "selection failed for predicate {verb:?} on pair ({subject}, {object}): {e}"
                        ),
                    }
                }
            }
        }
    }
    out.retain(|_, labels| !labels.is_empty());
    Ok(out)
}
