//! Prompt templates for the four model queries, stored as versioned text
//! assets and instantiated by literal placeholder replacement.
//!
//! The templates contain literal braces of their own (JSON examples), so
//! instantiation is plain string substitution of the named placeholders,
//! never a general format engine.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateId {
    Summary,
    InstanceCaption,
    PredicateExtraction,
    SynsetSelection,
}

#[derive(Debug, Clone, Copy)]
pub struct PromptTemplate {
    pub template_id: TemplateId,
    pub text: &'static str,
}

const SUMMARY: &str = include_str!("../assets/prompts/summary.txt");
const INSTANCE_CAPTION: &str = include_str!("../assets/prompts/instance_caption.txt");
const PREDICATE_EXTRACTION: &str = include_str!("../assets/prompts/predicate_extraction.txt");
const SYNSET_SELECTION: &str = include_str!("../assets/prompts/synset_selection.txt");

pub fn template(id: TemplateId) -> PromptTemplate {
    let text = match id {
        TemplateId::Summary => SUMMARY,
        TemplateId::InstanceCaption => INSTANCE_CAPTION,
        TemplateId::PredicateExtraction => PREDICATE_EXTRACTION,
        TemplateId::SynsetSelection => SYNSET_SELECTION,
    };
    PromptTemplate {
        template_id: id,
        text,
    }
}

/// The summary prompt has no placeholders; the video itself is the input.
pub fn summary_prompt() -> String {
    SUMMARY.to_string()
}

/// Instance captioning prompt with every `{color}` occurrence replaced by
/// the render color of the target's contour.
pub fn instance_caption_prompt(color: &str) -> String {
    INSTANCE_CAPTION.replace("{color}", color)
}

/// Predicate extraction prompt over the full caption map. Captions are
/// embedded as a JSON object with `ID_<identity>` keys in identity order.
pub fn predicate_extraction_prompt(captions: &BTreeMap<u32, String>) -> String {
    let mut obj = String::from("{\n");
    for (i, (id, caption)) in captions.iter().enumerate() {
        if i > 0 {
            obj.push_str(",\n");
        }
        let quoted = serde_json::to_string(caption).expect("strings always serialize");
        obj.push_str(&format!("   \"ID_{id}\": {quoted}"));
    }
    obj.push_str("\n}");
    PREDICATE_EXTRACTION.replace("{captions}", &obj)
}

/// Synset selection prompt: the context sentence plus the numbered
/// candidate list, one `<number>|<wordnet-id>|<definition-text>` line per
/// candidate, numbered from 1 in retrieval rank order.
pub fn synset_selection_prompt(sentence: &str, candidates: &[(String, String)]) -> String {
    let lines: Vec<String> = candidates
        .iter()
        .enumerate()
        .map(|(i, (id, gloss))| format!("{}|{}|{}", i + 1, id, gloss))
        .collect();
    SYNSET_SELECTION
        .replace("{sentence}", sentence)
        .replace("{candidates}", &lines.join("\n"))
}

/// Sanity check run at load time by consumers that care: every template
/// carries exactly the placeholders its instantiation substitutes.
pub fn validate_templates() -> Result<()> {
    if INSTANCE_CAPTION.matches("{color}").count() == 0 {
        return Err(Error::invalid("prompt template", "instance caption lost {color}"));
    }
    if !PREDICATE_EXTRACTION.contains("{captions}") {
        return Err(Error::invalid("prompt template", "predicate extraction lost {captions}"));
    }
    if !SYNSET_SELECTION.contains("{sentence}") || !SYNSET_SELECTION.contains("{candidates}") {
        return Err(Error::invalid("prompt template", "synset selection lost a placeholder"));
    }
    for (id, forbidden) in [
        (TemplateId::Summary, "{color}"),
        (TemplateId::SynsetSelection, "{captions}"),
    ] {
        if template(id).text.contains(forbidden) {
            return Err(Error::invalid("prompt template", "placeholder in wrong template"));
        }
    }
    Ok(())
}
