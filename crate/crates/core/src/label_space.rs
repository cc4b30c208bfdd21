//! Interaction label vocabulary and the class-space transforms used for
//! evaluation: full synsets, lemma-merged classes, a frequent-label subset,
//! and coarse clusters.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size of the reference vocabulary. Class-count validation of the derived
/// spaces only applies to vocabularies of this size; toy vocabularies used
/// in tests are exempt.
pub const FULL_VOCABULARY_SIZE: usize = 335;
pub const LEMMA_MERGED_CLASSES: usize = 259;
pub const FREQUENT_CLASSES: usize = 9;
pub const CLUSTERED_CLASSES: usize = 20;

/// One interaction label: a WordNet-style sense id with its lemma and
/// dictionary gloss. A minority of vocabulary labels are not sense ids
/// (plain strings like `high_five`); those are carried as pseudo-synsets
/// whose lemma is the label itself and whose gloss is supplied alongside.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synset {
    pub id: String,
    pub lemma: String,
    pub gloss: String,
}

impl Synset {
    pub fn new(id: &str, lemma: &str, gloss: &str) -> Result<Self> {
        if gloss.is_empty() {
            return Err(Error::invalid("synset", format!("{id}: empty gloss")));
        }
        if lemma.is_empty() {
            return Err(Error::invalid("synset", format!("{id}: empty lemma")));
        }
        if let Some((id_lemma, _, _)) = parse_sense_id(id) {
            if id_lemma != lemma {
                return Err(Error::invalid(
                    "synset",
                    format!("{id}: lemma field {lemma:?} disagrees with id"),
                ));
            }
        } else if lemma != id {
            return Err(Error::invalid(
                "synset",
                format!("{id}: non-sense label must use the label as its lemma"),
            ));
        }
        Ok(Synset {
            id: id.to_string(),
            lemma: lemma.to_string(),
            gloss: gloss.to_string(),
        })
    }

    pub fn is_wordnet_form(&self) -> bool {
        parse_sense_id(&self.id).is_some()
    }
}

/// Parse `lemma.pos.nn` into its parts. Returns `None` for labels that do
/// not follow the sense-id form.
pub fn parse_sense_id(id: &str) -> Option<(&str, char, u32)> {
    let mut it = id.rsplitn(3, '.');
    let sense = it.next()?;
    let pos = it.next()?;
    let lemma = it.next()?;
    if lemma.is_empty() || sense.len() != 2 {
        return None;
    }
    let sense_num: u32 = sense.parse().ok()?;
    let mut pos_chars = pos.chars();
    let pos_char = pos_chars.next()?;
    if pos_chars.next().is_some() || !"nvasr".contains(pos_char) {
        return None;
    }
    Some((lemma, pos_char, sense_num))
}

/// Lemma a label id merges into: the parsed lemma for sense ids, the label
/// itself otherwise.
pub fn lemma_of(id: &str) -> &str {
    parse_sense_id(id).map_or(id, |(lemma, _, _)| lemma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSpaceName {
    Full,
    LemmaMerged,
    Frequent,
    Clustered,
}

impl LabelSpaceName {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSpaceName::Full => "full",
            LabelSpaceName::LemmaMerged => "lemma-merged",
            LabelSpaceName::Frequent => "frequent",
            LabelSpaceName::Clustered => "clustered",
        }
    }

    pub const ALL: [LabelSpaceName; 4] = [
        LabelSpaceName::Full,
        LabelSpaceName::LemmaMerged,
        LabelSpaceName::Frequent,
        LabelSpaceName::Clustered,
    ];
}

impl std::str::FromStr for LabelSpaceName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(LabelSpaceName::Full),
            "lemma-merged" => Ok(LabelSpaceName::LemmaMerged),
            "frequent" => Ok(LabelSpaceName::Frequent),
            "clustered" => Ok(LabelSpaceName::Clustered),
            other => Err(Error::invalid(
                "label space",
                format!("unknown space {other:?}, expected full, lemma-merged, frequent, or clustered"),
            )),
        }
    }
}

/// Auxiliary membership data for spaces the vocabulary alone cannot define.
pub enum LabelSpaceAux<'a> {
    None,
    /// Label ids forming the frequent subset, in preference order.
    FrequentList(&'a [String]),
    /// Label id to cluster name, total on the vocabulary.
    Clusters(&'a BTreeMap<String, String>),
}

/// A class space over the vocabulary plus the label-to-class mapping.
/// The mapping is total on the vocabulary except under `Frequent`, where
/// labels outside the subset have no class and are dropped from scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSpace {
    pub name: LabelSpaceName,
    classes: Vec<String>,
    class_set: BTreeSet<String>,
    mapping: BTreeMap<String, String>,
}

impl LabelSpace {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Class of a label, or `None` when the label has no class in this
    /// space (unknown label, or outside the frequent subset). Class ids
    /// map to themselves, so the mapping is idempotent.
    pub fn map<'a>(&'a self, label: &'a str) -> Option<&'a str> {
        if let Some(c) = self.mapping.get(label) {
            return Some(c.as_str());
        }
        self.class_set.contains(label).then_some(label)
    }

    /// Map a set of labels into class space, dropping unmapped labels.
    pub fn map_set(&self, labels: &BTreeSet<String>) -> BTreeSet<String> {
        labels
            .iter()
            .filter_map(|l| self.map(l))
            .map(str::to_string)
            .collect()
    }
}

/// Build a class space over `vocabulary`.
///
/// `Full` maps every label to itself. `LemmaMerged` merges labels sharing a
/// lemma; on a full-size vocabulary the class count is validated as a hard
/// error. `Frequent` needs the subset list and `Clustered` the cluster
/// assignment, both via `aux`.
pub fn build_label_space(
    name: LabelSpaceName,
    vocabulary: &[Synset],
    aux: LabelSpaceAux<'_>,
) -> Result<LabelSpace> {
    let official = vocabulary.len() == FULL_VOCABULARY_SIZE;
    let vocab_ids: BTreeSet<&str> = vocabulary.iter().map(|s| s.id.as_str()).collect();
    if vocab_ids.len() != vocabulary.len() {
        return Err(Error::Validation("vocabulary contains duplicate label ids".into()));
    }

    let (classes, mapping): (Vec<String>, BTreeMap<String, String>) = match (name, aux) {
        (LabelSpaceName::Full, LabelSpaceAux::None) => {
            let classes: Vec<String> = vocabulary.iter().map(|s| s.id.clone()).collect();
            let mapping = classes.iter().map(|c| (c.clone(), c.clone())).collect();
            (classes, mapping)
        }
        (LabelSpaceName::LemmaMerged, LabelSpaceAux::None) => {
            let mut mapping = BTreeMap::new();
            let mut classes = BTreeSet::new();
            for s in vocabulary {
                mapping.insert(s.id.clone(), s.lemma.clone());
                classes.insert(s.lemma.clone());
            }
            if official && classes.len() != LEMMA_MERGED_CLASSES {
                return Err(Error::Validation(format!(
                    "lemma merge produced {} classes, expected {LEMMA_MERGED_CLASSES}",
                    classes.len()
                )));
            }
            (classes.into_iter().collect(), mapping)
        }
        (LabelSpaceName::Frequent, LabelSpaceAux::FrequentList(list)) => {
            for id in list {
                if !vocab_ids.contains(id.as_str()) {
                    return Err(Error::Validation(format!(
                        "frequent label {id} not in the vocabulary"
                    )));
                }
            }
            let unique: BTreeSet<&String> = list.iter().collect();
            if unique.len() != list.len() {
                return Err(Error::Validation("frequent list has duplicates".into()));
            }
            if official && list.len() != FREQUENT_CLASSES {
                return Err(Error::Validation(format!(
                    "frequent subset has {} labels, expected {FREQUENT_CLASSES}",
                    list.len()
                )));
            }
            let mapping = list.iter().map(|c| (c.clone(), c.clone())).collect();
            (list.to_vec(), mapping)
        }
        (LabelSpaceName::Clustered, LabelSpaceAux::Clusters(assignment)) => {
            let mut missing = Vec::new();
            for s in vocabulary {
                if !assignment.contains_key(&s.id) {
                    missing.push(s.id.clone());
                }
            }
            if !missing.is_empty() {
                missing.truncate(5);
                return Err(Error::Validation(format!(
                    "cluster assignment missing labels: {missing:?}"
                )));
            }
            let mut mapping = BTreeMap::new();
            let mut classes = BTreeSet::new();
            for s in vocabulary {
                let c = assignment[&s.id].clone();
                classes.insert(c.clone());
                mapping.insert(s.id.clone(), c);
            }
            if official && classes.len() != CLUSTERED_CLASSES {
                return Err(Error::Validation(format!(
                    "cluster assignment uses {} clusters, expected {CLUSTERED_CLASSES}",
                    classes.len()
                )));
            }
            (classes.into_iter().collect(), mapping)
        }
        (LabelSpaceName::Frequent, _) => {
            return Err(Error::invalid("label space", "frequent space needs a subset list"))
        }
        (LabelSpaceName::Clustered, _) => {
            return Err(Error::invalid("label space", "clustered space needs a cluster file"))
        }
        _ => return Err(Error::invalid("label space", "unexpected auxiliary data")),
    };

    let class_set = classes.iter().cloned().collect();
    Ok(LabelSpace {
        name,
        classes,
        class_set,
        mapping,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syn(id: &str, gloss: &str) -> Synset {
        Synset::new(id, lemma_of(id), gloss).unwrap()
    }

    #[test]
    fn sense_id_parsing() {
        assert_eq!(parse_sense_id("talk.v.01"), Some(("talk", 'v', 1)));
        assert_eq!(parse_sense_id("hash_out.v.01"), Some(("hash_out", 'v', 1)));
        assert_eq!(parse_sense_id("handshake.n.01"), Some(("handshake", 'n', 1)));
        assert_eq!(parse_sense_id("pass.v.20"), Some(("pass", 'v', 20)));
        assert_eq!(parse_sense_id("high_five"), None);
        assert_eq!(parse_sense_id("talk.v.1"), None, "sense must be two digits");
        assert_eq!(parse_sense_id("talk.x.01"), None, "unknown pos");
        assert_eq!(parse_sense_id(".v.01"), None);
    }

    #[test]
    fn lemma_of_handles_both_forms() {
        assert_eq!(lemma_of("talk.v.02"), "talk");
        assert_eq!(lemma_of("high_five"), "high_five");
    }

    #[test]
    fn synset_validation() {
        assert!(Synset::new("talk.v.01", "talk", "exchange thoughts").is_ok());
        assert!(Synset::new("talk.v.01", "speak", "g").is_err());
        assert!(Synset::new("talk.v.01", "talk", "").is_err());
        assert!(Synset::new("high_five", "high_five", "palm slap").is_ok());
        assert!(Synset::new("high_five", "high", "palm slap").is_err());
    }

    #[test]
    fn full_space_is_identity() {
        let vocab = vec![syn("talk.v.01", "a"), syn("look.v.01", "b")];
        let space = build_label_space(LabelSpaceName::Full, &vocab, LabelSpaceAux::None).unwrap();
        assert_eq!(space.class_count(), 2);
        assert_eq!(space.map("talk.v.01"), Some("talk.v.01"));
        assert_eq!(space.map("smile.v.01"), None);
    }

    #[test]
    fn lemma_merge_groups_shared_lemmas() {
        let vocab = vec![
            syn("talk.v.01", "a"),
            syn("talk.v.02", "b"),
            syn("look.v.01", "c"),
        ];
        let space =
            build_label_space(LabelSpaceName::LemmaMerged, &vocab, LabelSpaceAux::None).unwrap();
        assert_eq!(space.class_count(), 2);
        assert_eq!(space.map("talk.v.01"), Some("talk"));
        assert_eq!(space.map("talk.v.02"), Some("talk"));
        assert_eq!(space.map("look.v.01"), Some("look"));
        // Idempotence on class representatives.
        assert_eq!(space.map("talk"), Some("talk"));
    }

    #[test]
    fn frequent_space_is_partial() {
        let vocab = vec![syn("talk.v.01", "a"), syn("look.v.01", "b"), syn("smile.v.01", "c")];
        let list = vec!["talk.v.01".to_string(), "look.v.01".to_string()];
        let space =
            build_label_space(LabelSpaceName::Frequent, &vocab, LabelSpaceAux::FrequentList(&list))
                .unwrap();
        assert_eq!(space.class_count(), 2);
        assert_eq!(space.map("talk.v.01"), Some("talk.v.01"));
        assert_eq!(space.map("smile.v.01"), None);
        let mapped = space.map_set(
            &["talk.v.01".to_string(), "smile.v.01".to_string()].into_iter().collect(),
        );
        assert_eq!(mapped.len(), 1);
    }

    #[test]
    fn frequent_rejects_unknown_and_duplicate_members() {
        let vocab = vec![syn("talk.v.01", "a")];
        let bad = vec!["nod.v.01".to_string()];
        assert!(build_label_space(
            LabelSpaceName::Frequent,
            &vocab,
            LabelSpaceAux::FrequentList(&bad)
        )
        .is_err());
        let dup = vec!["talk.v.01".to_string(), "talk.v.01".to_string()];
        assert!(build_label_space(
            LabelSpaceName::Frequent,
            &vocab,
            LabelSpaceAux::FrequentList(&dup)
        )
        .is_err());
    }

    #[test]
    fn clustered_space_requires_total_assignment() {
        let vocab = vec![syn("talk.v.01", "a"), syn("look.v.01", "b")];
        let mut clusters = BTreeMap::new();
        clusters.insert("talk.v.01".to_string(), "communication".to_string());
        let err = build_label_space(
            LabelSpaceName::Clustered,
            &vocab,
            LabelSpaceAux::Clusters(&clusters),
        )
        .unwrap_err();
        assert!(err.to_string().contains("look.v.01"));

        clusters.insert("look.v.01".to_string(), "observation".to_string());
        let space = build_label_space(
            LabelSpaceName::Clustered,
            &vocab,
            LabelSpaceAux::Clusters(&clusters),
        )
        .unwrap();
        assert_eq!(space.class_count(), 2);
        assert_eq!(space.map("talk.v.01"), Some("communication"));
    }

    #[test]
    fn missing_aux_is_an_error() {
        let vocab = vec![syn("talk.v.01", "a")];
        assert!(build_label_space(LabelSpaceName::Frequent, &vocab, LabelSpaceAux::None).is_err());
        assert!(build_label_space(LabelSpaceName::Clustered, &vocab, LabelSpaceAux::None).is_err());
    }

    #[test]
    fn space_names_round_trip() {
        for name in LabelSpaceName::ALL {
            assert_eq!(name.as_str().parse::<LabelSpaceName>().unwrap(), name);
        }
        assert!("fullest".parse::<LabelSpaceName>().is_err());
    }
}
