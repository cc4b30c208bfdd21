//! Vocabulary files: the interaction label list (id, lemma, gloss per
//! record), the frequent-label subset, and the cluster assignment. All
//! three are tab-separated text with `#` comment lines, and a copy of each
//! ships embedded in the library.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::label_space::{build_label_space, LabelSpace, LabelSpaceAux, LabelSpaceName, Synset};

/// Bundled vocabulary sources. The label list is an example reconstruction
/// with the documented shape (335 labels merging to 259 lemmas), not an
/// official benchmark list.
pub const BUNDLED_VOCABULARY: &str = include_str!("../../assets/vocab/interactions.tsv");
pub const BUNDLED_FREQUENT: &str = include_str!("../../assets/vocab/frequent9.txt");
pub const BUNDLED_CLUSTERS: &str = include_str!("../../assets/vocab/clusters20.tsv");

fn data_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

/// Parse a vocabulary from `id<TAB>lemma<TAB>gloss` records.
pub fn parse_synsets(src: &str, origin: &Path) -> Result<Vec<Synset>> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut out = Vec::new();
    for (line_no, line) in data_lines(src) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::record(
                origin,
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let (id, lemma, gloss) = (fields[0], fields[1], fields[2]);
        if !seen.insert(id) {
            return Err(Error::record(origin, line_no, format!("duplicate label id {id}")));
        }
        let synset = Synset::new(id, lemma, gloss)
            .map_err(|e| Error::record(origin, line_no, e.to_string()))?;
        out.push(synset);
    }
    if out.is_empty() {
        return Err(Error::data(origin, "vocabulary file has no records"));
    }
    Ok(out)
}

pub fn load_synsets(path: &Path) -> Result<Vec<Synset>> {
    let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_synsets(&src, path)
}

/// Parse a frequent-label subset, one label id per line.
pub fn parse_frequent(src: &str, origin: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (line_no, line) in data_lines(src) {
        let id = line.trim();
        if id.contains('\t') {
            return Err(Error::record(origin, line_no, "expected one label id per line"));
        }
        out.push(id.to_string());
    }
    if out.is_empty() {
        return Err(Error::data(origin, "frequent-label file has no records"));
    }
    Ok(out)
}

pub fn load_frequent(path: &Path) -> Result<Vec<String>> {
    let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_frequent(&src, path)
}

/// Parse a cluster assignment from `id<TAB>cluster` records.
pub fn parse_clusters(src: &str, origin: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (line_no, line) in data_lines(src) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::record(
                origin,
                line_no,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        if out.insert(fields[0].to_string(), fields[1].to_string()).is_some() {
            return Err(Error::record(
                origin,
                line_no,
                format!("duplicate label id {}", fields[0]),
            ));
        }
    }
    if out.is_empty() {
        return Err(Error::data(origin, "cluster file has no records"));
    }
    Ok(out)
}

pub fn load_clusters(path: &Path) -> Result<BTreeMap<String, String>> {
    let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_clusters(&src, path)
}

pub fn bundled_vocabulary() -> Vec<Synset> {
    parse_synsets(BUNDLED_VOCABULARY, Path::new("<bundled>")).expect("bundled vocabulary parses")
}

pub fn bundled_frequent() -> Vec<String> {
    parse_frequent(BUNDLED_FREQUENT, Path::new("<bundled>")).expect("bundled frequent list parses")
}

pub fn bundled_clusters() -> BTreeMap<String, String> {
    parse_clusters(BUNDLED_CLUSTERS, Path::new("<bundled>")).expect("bundled clusters parse")
}

/// Build a class space over the bundled vocabulary.
pub fn bundled_label_space(name: LabelSpaceName) -> Result<LabelSpace> {
    let vocab = bundled_vocabulary();
    match name {
        LabelSpaceName::Full | LabelSpaceName::LemmaMerged => {
            build_label_space(name, &vocab, LabelSpaceAux::None)
        }
        LabelSpaceName::Frequent => {
            let list = bundled_frequent();
            build_label_space(name, &vocab, LabelSpaceAux::FrequentList(&list))
        }
        LabelSpaceName::Clustered => {
            let clusters = bundled_clusters();
            build_label_space(name, &vocab, LabelSpaceAux::Clusters(&clusters))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label_space::{
        CLUSTERED_CLASSES, FREQUENT_CLASSES, FULL_VOCABULARY_SIZE, LEMMA_MERGED_CLASSES,
    };

    #[test]
    fn bundled_vocabulary_has_documented_shape() {
        let vocab = bundled_vocabulary();
        assert_eq!(vocab.len(), FULL_VOCABULARY_SIZE);
        let wordnet = vocab.iter().filter(|s| s.is_wordnet_form()).count();
        assert_eq!(wordnet, 327, "8 labels are plain strings");
        let glosses: BTreeSet<&str> = vocab.iter().map(|s| s.gloss.as_str()).collect();
        assert_eq!(glosses.len(), vocab.len(), "glosses must be pairwise distinct");
    }

    #[test]
    fn bundled_spaces_have_documented_class_counts() {
        assert_eq!(
            bundled_label_space(LabelSpaceName::Full).unwrap().class_count(),
            FULL_VOCABULARY_SIZE
        );
        assert_eq!(
            bundled_label_space(LabelSpaceName::LemmaMerged).unwrap().class_count(),
            LEMMA_MERGED_CLASSES
        );
        assert_eq!(
            bundled_label_space(LabelSpaceName::Frequent).unwrap().class_count(),
            FREQUENT_CLASSES
        );
        assert_eq!(
            bundled_label_space(LabelSpaceName::Clustered).unwrap().class_count(),
            CLUSTERED_CLASSES
        );
    }

    #[test]
    fn duplicate_id_error_names_the_id() {
        let src = "talk.v.01\ttalk\tg1\ntalk.v.01\ttalk\tg2\n";
        let err = parse_synsets(src, Path::new("dup.tsv")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("talk.v.01"), "{msg}");
        assert!(msg.contains(":2:"), "{msg}");
    }

    #[test]
    fn malformed_record_reports_line() {
        let src = "# header\ntalk.v.01\ttalk\tg1\nbroken line without tabs\n";
        let err = parse_synsets(src, Path::new("bad.tsv")).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let src = "# comment\n\ntalk.v.01\ttalk\tg1\n  # indented comment\nlook.v.01\tlook\tg2\n";
        let vocab = parse_synsets(src, Path::new("ok.tsv")).unwrap();
        assert_eq!(vocab.len(), 2);
    }

    #[test]
    fn frequent_and_cluster_parsers_validate_shape() {
        let err = parse_frequent("a\tb\n", Path::new("f.txt")).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
        let err = parse_clusters("only-one-field\n", Path::new("c.tsv")).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
        let err = parse_clusters("a\tx\na\ty\n", Path::new("c.tsv")).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }
}
