//! Track state, new-identity gating, and the causal tracking step.
//!
//! Frame-to-frame association is delegated entirely to the mask tracker
//! backend. The logic here only decides when a detection becomes a new
//! identity (IoU gate against current mask boxes) and keeps the per-identity
//! mask/box bookkeeping consistent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backends::MaskTrackerBackend;
use crate::error::{Error, Result, Stage};
use crate::geometry::{filter_detections, iou, BoundingBox, Detection};
use crate::mask::Mask;
use crate::Frame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Detections below this confidence are discarded before tracking.
    pub confidence_threshold: f64,
    /// A detection spawns a new identity only if its IoU against every
    /// current mask box stays below this gate.
    pub tau_new: f64,
    /// Stroke width of rendered contours, in pixels.
    pub contour_width: u32,
    /// Candidate count for synset retrieval.
    pub top_k: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            confidence_threshold: 0.8,
            tau_new: 0.35,
            contour_width: 5,
            top_k: 5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(Error::invalid("tracker config", "confidence_threshold outside [0,1]"));
        }
        if !(0.0..=1.0).contains(&self.tau_new) {
            return Err(Error::invalid("tracker config", "tau_new outside [0,1]"));
        }
        if self.contour_width == 0 {
            return Err(Error::invalid("tracker config", "contour_width must be at least 1"));
        }
        if self.top_k == 0 {
            return Err(Error::invalid("tracker config", "top_k must be at least 1"));
        }
        Ok(())
    }
}

/// Per-frame state of one identity. A present-but-empty mask means the
/// identity is currently occluded or absent; a missing mask occurs only in
/// annotations loaded from box-only files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackEntry {
    pub mask: Option<Mask>,
    pub bbox: Option<BoundingBox>,
}

/// One identity's mask/box sequence from its birth frame onward. Identities
/// never terminate: once born, a track has an entry for every later frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub identity: u32,
    pub birth_frame: usize,
    entries: Vec<TrackEntry>,
}

impl Track {
    pub fn new(identity: u32, birth_frame: usize) -> Self {
        Track {
            identity,
            birth_frame,
            entries: Vec::new(),
        }
    }

    /// Append the mask for the next frame; the box is re-derived from the
    /// mask so the two can never drift apart.
    pub fn push_mask(&mut self, mask: Mask) {
        let bbox = mask.tight_box();
        self.entries.push(TrackEntry {
            mask: Some(mask),
            bbox,
        });
    }

    /// Append a box-only entry (used when loading annotations that were
    /// saved without masks).
    pub fn push_box_only(&mut self, bbox: Option<BoundingBox>) {
        self.entries.push(TrackEntry { mask: None, bbox });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in frame order, starting at `birth_frame`.
    pub fn entries(&self) -> &[TrackEntry] {
        &self.entries
    }

    /// Last frame index this track has an entry for.
    pub fn last_frame(&self) -> Option<usize> {
        (!self.entries.is_empty()).then(|| self.birth_frame + self.entries.len() - 1)
    }

    pub fn entry_at(&self, frame: usize) -> Option<&TrackEntry> {
        frame
            .checked_sub(self.birth_frame)
            .and_then(|i| self.entries.get(i))
    }

    pub fn mask_at(&self, frame: usize) -> Option<&Mask> {
        self.entry_at(frame).and_then(|e| e.mask.as_ref())
    }

    pub fn box_at(&self, frame: usize) -> Option<BoundingBox> {
        self.entry_at(frame).and_then(|e| e.bbox)
    }

    /// Frames on which this track has a box, in increasing order.
    pub fn boxed_frames(&self) -> impl Iterator<Item = (usize, BoundingBox)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.bbox.map(|b| (self.birth_frame + i, b)))
    }
}

/// All tracks of one video plus the frame cursor. Identity ids start at 1,
/// are assigned in spawn order, and are never reused.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackSet {
    tracks: BTreeMap<u32, Track>,
    frames_processed: usize,
    next_identity: u32,
}

impl TrackSet {
    pub fn new() -> Self {
        TrackSet {
            tracks: BTreeMap::new(),
            frames_processed: 0,
            next_identity: 1,
        }
    }

    pub fn frames_processed(&self) -> usize {
        self.frames_processed
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn identities(&self) -> impl Iterator<Item = u32> + '_ {
        self.tracks.keys().copied()
    }

    pub fn tracks(&self) -> impl Iterator<Item = &Track> {
        self.tracks.values()
    }

    pub fn get(&self, identity: u32) -> Option<&Track> {
        self.tracks.get(&identity)
    }

    fn spawn(&mut self, birth_frame: usize) -> u32 {
        let id = self.next_identity;
        self.next_identity += 1;
        self.tracks.insert(id, Track::new(id, birth_frame));
        id
    }

    /// Raise the frame cursor for track sets whose tracks all end at
    /// `frame_count` (or that are empty); used when rebuilding a set from a
    /// stored annotation so it lines up with the video length.
    pub(crate) fn advance_to(&mut self, frame_count: usize) {
        debug_assert!(self
            .tracks
            .values()
            .all(|t| t.last_frame() == Some(frame_count.saturating_sub(1))));
        self.frames_processed = self.frames_processed.max(frame_count);
    }

    /// Insert a fully-built track (deserialization path). Rejects duplicate
    /// identities and keeps the id counter ahead of every inserted id.
    pub fn insert(&mut self, track: Track) -> Result<()> {
        if self.tracks.contains_key(&track.identity) {
            return Err(Error::invalid(
                "track set",
                format!("duplicate identity {}", track.identity),
            ));
        }
        self.next_identity = self.next_identity.max(track.identity + 1);
        if let Some(last) = track.last_frame() {
            self.frames_processed = self.frames_processed.max(last + 1);
        }
        self.tracks.insert(track.identity, track);
        Ok(())
    }
}

/// True iff `det` should become a new identity at frame `t`: its IoU against
/// the current mask box of every active identity stays below `cfg.tau_new`.
/// Identities whose mask at `t` is empty contribute IoU 0, and an empty
/// track set vacuously gates everything in.
pub fn gate_new_identity(det: &Detection, active: &TrackSet, t: usize, cfg: &TrackerConfig) -> bool {
    let max_iou = active
        .tracks()
        .filter_map(|trk| trk.box_at(t))
        .map(|b| iou(&det.bbox, &b))
        .fold(0.0f64, f64::max);
    max_iou < cfg.tau_new
}

/// Advance the tracker by one frame (the frame index is the track set's
/// internal cursor; frames must be fed in order):
///
/// 1. the backend propagates every existing identity to this frame,
/// 2. each surviving detection is gated and, if it overlaps no current mask
///    box, spawns one identity prompted with its detection box,
/// 3. boxes are re-derived from masks.
///
/// The IoU test is used only for initialization; existing identities are
/// never re-associated at the box level.
pub fn step_tracker(
    frame: &Frame,
    dets: &[Detection],
    state: &mut TrackSet,
    trk: &mut dyn MaskTrackerBackend,
    cfg: &TrackerConfig,
) -> Result<()> {
    let t = state.frames_processed;
    let existing: Vec<u32> = state.identities().collect();

    if !existing.is_empty() {
        let masks = trk
            .propagate(t, frame, &existing)
            .map_err(|e| e.at_stage(Stage::MaskTracking, t, existing.clone()))?;
        for id in &existing {
            let mask = masks.get(id).cloned().ok_or_else(|| {
                Error::backend(
                    "mask-tracker",
                    format!("propagation at frame {t} omitted identity {id}"),
                )
            })?;
            state
                .tracks
                .get_mut(id)
                .expect("identity listed from this set")
                .push_mask(mask);
        }
    }

    for det in filter_detections(dets, cfg.confidence_threshold) {
        // Later detections in the same frame gate against identities spawned
        // earlier in it, so duplicate detections cannot double-spawn.
        if gate_new_identity(&det, state, t, cfg) {
            let id = state.spawn(t);
            let mask = trk
                .init_identity(t, frame, id, &det.bbox)
                .map_err(|e| e.at_stage(Stage::MaskTracking, t, vec![id]))?;
            state
                .tracks
                .get_mut(&id)
                .expect("just spawned")
                .push_mask(mask);
        }
    }

    state.frames_processed = t + 1;
    Ok(())
}

/// Run the detector and tracker over a whole video, causally.
pub fn run_tracker(
    frames: &[Frame],
    detector: &dyn crate::backends::DetectorBackend,
    trk: &mut dyn MaskTrackerBackend,
    cfg: &TrackerConfig,
) -> Result<TrackSet> {
    cfg.validate()?;
    let mut state = TrackSet::new();
    for (t, frame) in frames.iter().enumerate() {
        let dets = detector
            .detect(t, frame)
            .map_err(|e| e.at_stage(Stage::Detection, t, Vec::new()))?;
        step_tracker(frame, &dets, &mut state, trk, cfg)?;
    }
    Ok(state)
}
