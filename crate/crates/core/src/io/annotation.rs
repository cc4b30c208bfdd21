//! Annotation files: one line-delimited JSON record per logical item with
//! a versioned header. A file carries the tracks (per-frame boxes with
//! optional run-length masks), the video summary, per-identity captions,
//! raw predicate verbs, and aligned interaction labels. Values round-trip
//! losslessly through serialize then parse.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::mask::Mask;
use crate::track::{Track, TrackSet};

pub const ANNOTATION_SCHEMA_VERSION: u32 = 1;

/// One frame of one track. `boxed` is `[x, y, w, h]`; absent when the
/// identity has no support on the frame (empty mask).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    #[serde(rename = "box", skip_serializing_if = "Option::is_none", default)]
    pub boxed: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mask: Option<Mask>,
}

impl EntryRecord {
    pub fn bbox(&self) -> Option<BoundingBox> {
        self.boxed.map(|[x, y, w, h]| BoundingBox { x, y, w, h })
    }
}

/// One identity's trajectory. Entries are positional: entry `i` describes
/// frame `birth_frame + i`, and tracks extend to the final frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub identity: u32,
    pub birth_frame: usize,
    pub entries: Vec<EntryRecord>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationFile {
    pub video_id: String,
    pub frame_count: usize,
    pub tracks: BTreeMap<u32, TrackRecord>,
    pub summary: Option<String>,
    pub captions: BTreeMap<u32, String>,
    /// Raw predicate verbs per ordered (subject, object) pair, kept so
    /// label alignment can be re-run without another extraction call.
    pub predicates: BTreeMap<(u32, u32), Vec<String>>,
    /// Aligned label ids per ordered (subject, object) pair.
    pub interactions: BTreeMap<(u32, u32), Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Header {
        schema_version: u32,
        video_id: String,
        frame_count: usize,
    },
    Track {
        identity: u32,
        birth_frame: usize,
        entries: Vec<EntryRecord>,
    },
    Summary {
        text: String,
    },
    Caption {
        identity: u32,
        text: String,
    },
    Predicates {
        subject: u32,
        object: u32,
        verbs: Vec<String>,
    },
    Interaction {
        subject: u32,
        object: u32,
        synsets: Vec<String>,
    },
}

impl AnnotationFile {
    pub fn new(video_id: impl Into<String>, frame_count: usize) -> Self {
        AnnotationFile {
            video_id: video_id.into(),
            frame_count,
            ..AnnotationFile::default()
        }
    }

    /// Capture a tracker result. Masks are bulky, so they are copied only
    /// when `include_masks` is set; boxes are always kept.
    pub fn from_tracks(video_id: impl Into<String>, tracks: &TrackSet, include_masks: bool) -> Self {
        let mut file = AnnotationFile::new(video_id, tracks.frames_processed());
        for track in tracks.tracks() {
            let entries = track
                .entries()
                .iter()
                .map(|e| EntryRecord {
                    boxed: e.bbox.map(|b| [b.x, b.y, b.w, b.h]),
                    mask: if include_masks { e.mask.clone() } else { None },
                })
                .collect();
            file.tracks.insert(
                track.identity,
                TrackRecord {
                    identity: track.identity,
                    birth_frame: track.birth_frame,
                    entries,
                },
            );
        }
        file
    }

    /// Rebuild the in-memory track set this file was captured from. Entries
    /// carrying a mask are re-derived through it, so a stored box that
    /// disagrees with its mask is rejected instead of silently trusted;
    /// box-only entries stay box-only.
    pub fn to_track_set(&self) -> Result<TrackSet> {
        let mut set = TrackSet::new();
        for record in self.tracks.values() {
            let mut track = Track::new(record.identity, record.birth_frame);
            for (offset, entry) in record.entries.iter().enumerate() {
                match &entry.mask {
                    Some(mask) => {
                        if mask.tight_box() != entry.bbox() {
                            return Err(Error::invalid(
                                "annotation",
                                format!(
                                    "track {} frame {}: stored box disagrees with its mask",
                                    record.identity,
                                    record.birth_frame + offset
                                ),
                            ));
                        }
                        track.push_mask(mask.clone());
                    }
                    None => track.push_box_only(entry.bbox()),
                }
            }
            set.insert(track)?;
        }
        if set.frames_processed() != self.frame_count {
            if !set.is_empty() {
                return Err(Error::invalid(
                    "annotation",
                    format!(
                        "tracks end at frame {} but the file spans {} frames",
                        set.frames_processed(),
                        self.frame_count
                    ),
                ));
            }
            set.advance_to(self.frame_count);
        }
        Ok(set)
    }

    pub fn identities(&self) -> Vec<u32> {
        self.tracks.keys().copied().collect()
    }

    /// Boxes present on `frame`, ascending identity.
    pub fn objects_at(&self, frame: usize) -> Vec<(u32, BoundingBox)> {
        let mut out = Vec::new();
        for (id, track) in &self.tracks {
            if frame < track.birth_frame {
                continue;
            }
            if let Some(entry) = track.entries.get(frame - track.birth_frame) {
                if let Some(b) = entry.bbox() {
                    out.push((*id, b));
                }
            }
        }
        out
    }

    /// Interaction labels as sets, the shape the evaluator consumes.
    pub fn interaction_sets(&self) -> BTreeMap<(u32, u32), BTreeSet<String>> {
        self.interactions
            .iter()
            .map(|(pair, labels)| (*pair, labels.iter().cloned().collect()))
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut records = Vec::new();
        records.push(Record::Header {
            schema_version: ANNOTATION_SCHEMA_VERSION,
            video_id: self.video_id.clone(),
            frame_count: self.frame_count,
        });
        for track in self.tracks.values() {
            records.push(Record::Track {
                identity: track.identity,
                birth_frame: track.birth_frame,
                entries: track.entries.clone(),
            });
        }
        if let Some(text) = &self.summary {
            records.push(Record::Summary { text: text.clone() });
        }
        for (id, text) in &self.captions {
            records.push(Record::Caption {
                identity: *id,
                text: text.clone(),
            });
        }
        for ((s, o), verbs) in &self.predicates {
            records.push(Record::Predicates {
                subject: *s,
                object: *o,
                verbs: verbs.clone(),
            });
        }
        for ((s, o), synsets) in &self.interactions {
            records.push(Record::Interaction {
                subject: *s,
                object: *o,
                synsets: synsets.clone(),
            });
        }
        let mut out = String::new();
        for record in records {
            out.push_str(&serde_json::to_string(&record).expect("annotation records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(src: &str, origin: &Path) -> Result<Self> {
        let mut file: Option<AnnotationFile> = None;
        for (line_no, line) in src.lines().enumerate().map(|(i, l)| (i + 1, l)) {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(line)
                .map_err(|e| Error::record(origin, line_no, e.to_string()))?;
            match record {
                Record::Header {
                    schema_version,
                    video_id,
                    frame_count,
                } => {
                    if schema_version != ANNOTATION_SCHEMA_VERSION {
                        return Err(Error::record(
                            origin,
                            line_no,
                            format!("unsupported schema version {schema_version}"),
                        ));
                    }
                    if file.is_some() {
                        return Err(Error::record(origin, line_no, "duplicate header record"));
                    }
                    file = Some(AnnotationFile::new(video_id, frame_count));
                }
                other => {
                    let file = file.as_mut().ok_or_else(|| {
                        Error::record(origin, line_no, "first record must be the header")
                    })?;
                    file.apply(other, origin, line_no)?;
                }
            }
        }
        file.ok_or_else(|| Error::data(origin, "annotation file is empty"))
    }

    fn apply(&mut self, record: Record, origin: &Path, line_no: usize) -> Result<()> {
        match record {
            Record::Header { .. } => unreachable!("handled by the caller"),
            Record::Track {
                identity,
                birth_frame,
                entries,
            } => {
                if birth_frame + entries.len() != self.frame_count {
                    return Err(Error::record(
                        origin,
                        line_no,
                        format!(
                            "track {identity} covers frames {birth_frame}..{}, expected to end at {}",
                            birth_frame + entries.len(),
                            self.frame_count
                        ),
                    ));
                }
                let record = TrackRecord {
                    identity,
                    birth_frame,
                    entries,
                };
                if self.tracks.insert(identity, record).is_some() {
                    return Err(Error::record(
                        origin,
                        line_no,
                        format!("duplicate track record for identity {identity}"),
                    ));
                }
            }
            Record::Summary { text } => {
                if self.summary.replace(text).is_some() {
                    return Err(Error::record(origin, line_no, "duplicate summary record"));
                }
            }
            Record::Caption { identity, text } => {
                if self.captions.insert(identity, text).is_some() {
                    return Err(Error::record(
                        origin,
                        line_no,
                        format!("duplicate caption record for identity {identity}"),
                    ));
                }
            }
            Record::Predicates {
                subject,
                object,
                verbs,
            } => {
                if subject == object {
                    return Err(Error::record(
                        origin,
                        line_no,
                        format!("self-pair predicates for identity {subject}"),
                    ));
                }
                if self.predicates.insert((subject, object), verbs).is_some() {
                    return Err(Error::record(
                        origin,
                        line_no,
                        format!("duplicate predicates record for pair ({subject}, {object})"),
                    ));
                }
            }
            Record::Interaction {
                subject,
                object,
                synsets,
            } => {
                if subject == object {
                    return Err(Error::record(
                        origin,
                        line_no,
                        format!("self-pair interaction for identity {subject}"),
                    ));
                }
                if self.interactions.insert((subject, object), synsets).is_some() {
                    return Err(Error::record(
                        origin,
                        line_no,
                        format!("duplicate interaction record for pair ({subject}, {object})"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        super::write_atomic(path, &self.to_jsonl())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        AnnotationFile::from_jsonl(&src, path)
    }
}

/// Load every `.jsonl` annotation in a directory, keyed by video id.
pub fn load_annotation_dir(dir: &Path) -> Result<BTreeMap<String, AnnotationFile>> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("jsonl"))
        .collect();
    paths.sort();
    let mut out = BTreeMap::new();
    for path in paths {
        let file = AnnotationFile::load(&path)?;
        if out.contains_key(&file.video_id) {
            return Err(Error::data(
                &path,
                format!("video id {:?} appears in more than one file", file.video_id),
            ));
        }
        out.insert(file.video_id.clone(), file);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn sample_file() -> AnnotationFile {
        let mut file = AnnotationFile::new("clip-01", 3);
        let mask = Mask::from_fn(6, 4, |x, y| x >= 1 && x < 3 && y >= 1 && y < 3);
        file.tracks.insert(
            1,
            TrackRecord {
                identity: 1,
                birth_frame: 0,
                entries: vec![
                    EntryRecord {
                        boxed: Some([1.0, 1.0, 2.0, 2.0]),
                        mask: Some(mask),
                    },
                    EntryRecord {
                        boxed: None,
                        mask: Some(Mask::empty(6, 4)),
                    },
                    EntryRecord {
                        boxed: Some([2.5, 1.0, 2.0, 2.0]),
                        mask: None,
                    },
                ],
            },
        );
        file.tracks.insert(
            2,
            TrackRecord {
                identity: 2,
                birth_frame: 2,
                entries: vec![EntryRecord {
                    boxed: Some([0.0, 0.0, 1.0, 1.0]),
                    mask: None,
                }],
            },
        );
        file.summary = Some("Two people pass each other.".into());
        file.captions.insert(1, "A person in a red coat.".into());
        file.captions.insert(2, "A person carrying a bag.".into());
        file.predicates.insert((1, 2), vec!["greet".into(), "pass".into()]);
        file.interactions.insert((1, 2), vec!["greet.v.01".into()]);
        file.interactions.insert((2, 1), vec!["greet.v.01".into()]);
        file
    }

    #[test]
    fn round_trip_is_identity() {
        let file = sample_file();
        let text = file.to_jsonl();
        let parsed = AnnotationFile::from_jsonl(&text, Path::new("t.jsonl")).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.to_jsonl(), text);
    }

    #[test]
    fn save_and_load_via_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip-01.jsonl");
        let file = sample_file();
        file.save(&path).unwrap();
        assert_eq!(AnnotationFile::load(&path).unwrap(), file);
    }

    fn sample_track_set() -> TrackSet {
        let mut set = TrackSet::new();
        let mut a = Track::new(1, 0);
        a.push_mask(Mask::from_fn(6, 4, |x, y| x >= 1 && x < 3 && y >= 1 && y < 3));
        a.push_mask(Mask::empty(6, 4));
        a.push_box_only(Some(BoundingBox::new(2.5, 1.0, 2.0, 2.0).unwrap()));
        set.insert(a).unwrap();
        let mut b = Track::new(2, 2);
        b.push_mask(Mask::from_fn(6, 4, |x, y| x < 1 && y < 1));
        set.insert(b).unwrap();
        set
    }

    #[test]
    fn track_set_survives_capture_and_rebuild() {
        let set = sample_track_set();
        let file = AnnotationFile::from_tracks("clip-01", &set, true);
        let rebuilt = file.to_track_set().unwrap();
        assert_eq!(rebuilt, set);
        assert_eq!(rebuilt.frames_processed(), 3);
    }

    #[test]
    fn rebuild_without_masks_keeps_boxes() {
        let set = sample_track_set();
        let file = AnnotationFile::from_tracks("clip-01", &set, false);
        let rebuilt = file.to_track_set().unwrap();
        assert_eq!(rebuilt.frames_processed(), 3);
        let track = rebuilt.tracks().next().unwrap();
        assert!(track.entries().iter().all(|e| e.mask.is_none()));
        assert_eq!(track.box_at(0), set.tracks().next().unwrap().box_at(0));
    }

    #[test]
    fn rebuild_from_empty_file_keeps_frame_count() {
        let file = AnnotationFile::new("clip-01", 7);
        let set = file.to_track_set().unwrap();
        assert!(set.is_empty());
        assert_eq!(set.frames_processed(), 7);
    }

    #[test]
    fn rebuild_rejects_box_that_disagrees_with_mask() {
        let mut file = AnnotationFile::from_tracks("clip-01", &sample_track_set(), true);
        file.tracks.get_mut(&1).unwrap().entries[0].boxed = Some([0.0, 0.0, 5.0, 5.0]);
        let err = file.to_track_set().unwrap_err();
        assert!(err.to_string().contains("disagrees"), "{err}");
    }

    #[test]
    fn rebuild_rejects_tracks_shorter_than_the_file() {
        let mut file = AnnotationFile::from_tracks("clip-01", &sample_track_set(), true);
        file.frame_count = 5;
        let err = file.to_track_set().unwrap_err();
        assert!(err.to_string().contains("spans 5 frames"), "{err}");
    }

    #[test]
    fn header_must_come_first() {
        let err = AnnotationFile::from_jsonl(
            "{\"kind\":\"summary\",\"text\":\"x\"}\n",
            Path::new("t.jsonl"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("header"), "{err}");
    }

    #[test]
    fn duplicate_records_are_rejected_with_line_numbers() {
        let mut text = sample_file().to_jsonl();
        let dup = text.lines().nth(3).unwrap().to_string();
        text.push_str(&dup);
        text.push('\n');
        let err = AnnotationFile::from_jsonl(&text, Path::new("t.jsonl")).unwrap_err();
        assert!(err.to_string().contains(":10:"), "{err}");
    }

    #[test]
    fn track_coverage_is_validated() {
        let text = "{\"kind\":\"header\",\"schema_version\":1,\"video_id\":\"v\",\"frame_count\":5}\n\
                    {\"kind\":\"track\",\"identity\":1,\"birth_frame\":2,\"entries\":[{}]}\n";
        let err = AnnotationFile::from_jsonl(text, Path::new("t.jsonl")).unwrap_err();
        assert!(err.to_string().contains("track 1"), "{err}");
    }

    #[test]
    fn unsupported_schema_version_is_rejected() {
        let text = "{\"kind\":\"header\",\"schema_version\":9,\"video_id\":\"v\",\"frame_count\":0}\n";
        let err = AnnotationFile::from_jsonl(text, Path::new("t.jsonl")).unwrap_err();
        assert!(err.to_string().contains("schema version 9"), "{err}");
    }

    #[test]
    fn objects_at_reads_positional_entries() {
        let file = sample_file();
        let f0 = file.objects_at(0);
        assert_eq!(f0.len(), 1);
        assert_eq!(f0[0].0, 1);
        assert_eq!(file.objects_at(1).len(), 0, "empty-mask frame has no box");
        let f2 = file.objects_at(2);
        assert_eq!(f2.iter().map(|(id, _)| *id).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn fuzzed_values_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for case in 0..60 {
            let frame_count = rng.gen_range(1..6);
            let mut file = AnnotationFile::new(format!("v{case}"), frame_count);
            let ids: Vec<u32> = (1..=rng.gen_range(1..4u32)).collect();
            for &id in &ids {
                let birth = rng.gen_range(0..frame_count);
                let entries = (birth..frame_count)
                    .map(|_| {
                        if rng.gen_bool(0.3) {
                            EntryRecord { boxed: None, mask: None }
                        } else {
                            EntryRecord {
                                boxed: Some([
                                    rng.gen_range(0.0..10.0),
                                    rng.gen_range(0.0..10.0),
                                    rng.gen_range(0.1..5.0),
                                    rng.gen_range(0.1..5.0),
                                ]),
                                mask: rng.gen_bool(0.4).then(|| {
                                    Mask::from_fn(5, 5, |x, y| (x + y) % 2 == case % 2)
                                }),
                            }
                        }
                    })
                    .collect();
                file.tracks.insert(
                    id,
                    TrackRecord {
                        identity: id,
                        birth_frame: birth,
                        entries,
                    },
                );
                if rng.gen_bool(0.7) {
                    file.captions.insert(id, format!("caption {id}"));
                }
            }
            if rng.gen_bool(0.8) {
                file.summary = Some(format!("summary with \"quotes\" and \u{e9} {case}"));
            }
            for &a in &ids {
                for &b in &ids {
                    if a != b && rng.gen_bool(0.5) {
                        file.predicates.insert((a, b), vec!["talk".into()]);
                        file.interactions.insert((a, b), vec!["talk.v.01".into(), "look.v.01".into()]);
                    }
                }
            }
            let parsed =
                AnnotationFile::from_jsonl(&file.to_jsonl(), Path::new("f.jsonl")).unwrap();
            assert_eq!(parsed, file);
        }
    }

    #[test]
    fn directory_loader_keys_by_video_id() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = AnnotationFile::new("a", 1);
        a.summary = Some("first".into());
        let b = AnnotationFile::new("b", 1);
        a.save(&dir.path().join("a.jsonl")).unwrap();
        b.save(&dir.path().join("b.jsonl")).unwrap();
        std::fs::write(dir.path().join("skip.txt"), "not an annotation").unwrap();
        let loaded = load_annotation_dir(dir.path()).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded["a"].summary.as_deref(), Some("first"));

        a.save(&dir.path().join("a-copy.jsonl")).unwrap();
        assert!(load_annotation_dir(dir.path()).is_err());
    }
}
