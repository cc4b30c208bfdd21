//! Synthetic video scenarios: rectangle actors with scripted motion.
//!
//! A scenario file fully determines a video (rendered frames), a detection
//! stream, a promptable mask tracker, and the ground-truth track set, which
//! makes whole-pipeline runs reproducible down to the byte.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backends::{DetectorBackend, MaskTrackerBackend};
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox, Detection};
use crate::mask::Mask;
use crate::track::{Track, TrackSet};
use crate::Frame;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame: usize,
    /// Box as [x, y, w, h].
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Actor {
    #[serde(default = "default_class")]
    pub class: String,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Box keyframes in increasing frame order; boxes are interpolated
    /// linearly between keyframes and clamped outside the keyframed range.
    pub keyframes: Vec<Keyframe>,
    /// Inclusive visibility ranges. Absent means visible on every frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible: Option<Vec<[usize; 2]>>,
}

fn default_class() -> String {
    "person".to_string()
}

fn default_confidence() -> f64 {
    0.95
}

impl Actor {
    pub fn visible_at(&self, t: usize) -> bool {
        match &self.visible {
            None => true,
            Some(ranges) => ranges.iter().any(|[a, b]| (*a..=*b).contains(&t)),
        }
    }

    /// Interpolated box at frame `t`, regardless of visibility.
    pub fn box_at(&self, t: usize) -> BoundingBox {
        let kfs = &self.keyframes;
        let t_f = t as f64;
        let first = &kfs[0];
        if t <= first.frame {
            return array_box(first.bbox);
        }
        let last = kfs.last().expect("validated non-empty");
        if t >= last.frame {
            return array_box(last.bbox);
        }
        let hi = kfs.iter().position(|k| k.frame >= t).expect("t < last frame");
        let (a, b) = (&kfs[hi - 1], &kfs[hi]);
        let alpha = (t_f - a.frame as f64) / (b.frame as f64 - a.frame as f64);
        let lerp = |i: usize| a.bbox[i] + alpha * (b.bbox[i] - a.bbox[i]);
        BoundingBox {
            x: lerp(0),
            y: lerp(1),
            w: lerp(2),
            h: lerp(3),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub width: u32,
    pub height: u32,
    pub frame_count: usize,
    pub actors: Vec<Actor>,
}

fn array_box(b: [f64; 4]) -> BoundingBox {
    BoundingBox {
        x: b[0],
        y: b[1],
        w: b[2],
        h: b[3],
    }
}

/// Fill colors for rendered actors, cycled by actor index.
const ACTOR_FILLS: [[u8; 3]; 6] = [
    [200, 60, 60],
    [60, 120, 200],
    [60, 180, 90],
    [220, 180, 60],
    [170, 90, 200],
    [90, 200, 200],
];

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)
            .map_err(|e| Error::invalid("scenario", e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::data(path, e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frame_count == 0 {
            return Err(Error::invalid("scenario", "zero dimensions or frame count"));
        }
        for (i, actor) in self.actors.iter().enumerate() {
            if actor.keyframes.is_empty() {
                return Err(Error::invalid("scenario", format!("actor {i} has no keyframes")));
            }
            for w in actor.keyframes.windows(2) {
                if w[1].frame <= w[0].frame {
                    return Err(Error::invalid(
                        "scenario",
                        format!("actor {i} keyframes not strictly increasing"),
                    ));
                }
            }
            for k in &actor.keyframes {
                if k.frame >= self.frame_count {
                    return Err(Error::invalid(
                        "scenario",
                        format!("actor {i} keyframe at {} outside video", k.frame),
                    ));
                }
                array_box(k.bbox)
                    .validate()
                    .map_err(|e| Error::invalid("scenario", format!("actor {i}: {e}")))?;
            }
            if let Some(ranges) = &actor.visible {
                for [a, b] in ranges {
                    if a > b || *b >= self.frame_count {
                        return Err(Error::invalid(
                            "scenario",
                            format!("actor {i} visibility range [{a},{b}] invalid"),
                        ));
                    }
                }
            }
            if !(0.0..=1.0).contains(&actor.confidence) {
                return Err(Error::invalid("scenario", format!("actor {i} confidence")));
            }
        }
        Ok(())
    }

    /// Render frame `t`: black background, visible actors painted as filled
    /// rectangles in actor order.
    pub fn render_frame(&self, t: usize) -> Frame {
        let mut frame = Frame::new(self.width, self.height);
        for (i, actor) in self.actors.iter().enumerate() {
            if !actor.visible_at(t) {
                continue;
            }
            let fill = ACTOR_FILLS[i % ACTOR_FILLS.len()];
            let mask = Mask::from_box(self.width, self.height, &actor.box_at(t));
            for (x, y) in mask.set_pixels() {
                frame.put_pixel(x, y, image::Rgb(fill));
            }
        }
        frame
    }

    pub fn render_video(&self) -> Vec<Frame> {
        (0..self.frame_count).map(|t| self.render_frame(t)).collect()
    }

    /// Ground-truth tracks: one identity per actor (actor order), born at
    /// the first visible frame, with the actor's rasterized box as mask on
    /// every later frame (empty while invisible).
    pub fn ground_truth(&self) -> TrackSet {
        let mut set = TrackSet::new();
        for (i, actor) in self.actors.iter().enumerate() {
            let Some(birth) = (0..self.frame_count).find(|t| actor.visible_at(*t)) else {
                continue;
            };
            let mut track = Track::new((i + 1) as u32, birth);
            for t in birth..self.frame_count {
                track.push_mask(self.actor_mask(i, t));
            }
            set.insert(track).expect("actor identities are distinct");
        }
        set
    }

    fn actor_mask(&self, actor_index: usize, t: usize) -> Mask {
        let actor = &self.actors[actor_index];
        if actor.visible_at(t) {
            Mask::from_box(self.width, self.height, &actor.box_at(t))
        } else {
            Mask::empty(self.width, self.height)
        }
    }
}

/// Detector fixture: emits one detection per visible actor, in actor order.
pub struct ScenarioDetector {
    scenario: Scenario,
}

impl ScenarioDetector {
    pub fn new(scenario: Scenario) -> Self {
        ScenarioDetector { scenario }
    }
}

impl DetectorBackend for ScenarioDetector {
    fn detect(&self, frame_index: usize, _frame: &Frame) -> Result<Vec<Detection>> {
        if frame_index >= self.scenario.frame_count {
            return Err(Error::backend(
                "detector",
                format!("frame {frame_index} outside scenario"),
            ));
        }
        Ok(self
            .scenario
            .actors
            .iter()
            .filter(|a| a.visible_at(frame_index))
            .map(|a| Detection {
                bbox: a.box_at(frame_index),
                confidence: a.confidence,
                class_label: a.class.clone(),
            })
            .collect())
    }
}

#[derive(Debug, Clone)]
enum Binding {
    /// Identity follows a scenario actor.
    Actor(usize),
    /// Prompt matched no actor; the mask stays at the prompt box forever.
    Static(BoundingBox),
}

/// Mask tracker fixture. An init prompt binds the new identity to the
/// visible actor with the highest prompt IoU (lowest actor index on ties);
/// propagation then follows that actor's scripted box, with empty masks
/// while it is invisible.
pub struct ScenarioTracker {
    scenario: Scenario,
    bindings: BTreeMap<u32, Binding>,
}

impl ScenarioTracker {
    pub fn new(scenario: Scenario) -> Self {
        ScenarioTracker {
            scenario,
            bindings: BTreeMap::new(),
        }
    }

    fn mask_for(&self, binding: &Binding, t: usize) -> Mask {
        match binding {
            Binding::Actor(i) => self.scenario.actor_mask(*i, t),
            Binding::Static(b) => Mask::from_box(self.scenario.width, self.scenario.height, b),
        }
    }
}

impl MaskTrackerBackend for ScenarioTracker {
    fn propagate(
        &mut self,
        frame_index: usize,
        _frame: &Frame,
        identities: &[u32],
    ) -> Result<BTreeMap<u32, Mask>> {
        identities
            .iter()
            .map(|id| {
                let binding = self.bindings.get(id).ok_or_else(|| {
                    Error::backend("mask-tracker", format!("unknown identity {id}"))
                })?;
                Ok((*id, self.mask_for(binding, frame_index)))
            })
            .collect()
    }

    fn init_identity(
        &mut self,
        frame_index: usize,
        _frame: &Frame,
        identity: u32,
        prompt: &BoundingBox,
    ) -> Result<Mask> {
        let best = self
            .scenario
            .actors
            .iter()
            .enumerate()
            .filter(|(_, a)| a.visible_at(frame_index))
            .map(|(i, a)| (i, iou(prompt, &a.box_at(frame_index))))
            .filter(|(_, s)| *s > 0.0)
            .max_by(|(ia, sa), (ib, sb)| sa.partial_cmp(sb).unwrap().then(ib.cmp(ia)));
        let binding = match best {
            Some((i, _)) => Binding::Actor(i),
            None => Binding::Static(*prompt),
        };
        let mask = self.mask_for(&binding, frame_index);
        self.bindings.insert(identity, binding);
        Ok(mask)
    }
}

/// A two-actor crossing scene used across tests and examples.
pub fn crossing_example() -> Scenario {
    Scenario {
        width: 64,
        height: 48,
        frame_count: 20,
        actors: vec![
            Actor {
                class: default_class(),
                confidence: 0.95,
                keyframes: vec![
                    Keyframe {
                        frame: 0,
                        bbox: [2.0, 10.0, 10.0, 16.0],
                    },
                    Keyframe {
                        frame: 19,
                        bbox: [50.0, 10.0, 10.0, 16.0],
                    },
                ],
                visible: None,
            },
            Actor {
                class: default_class(),
                confidence: 0.9,
                keyframes: vec![
                    Keyframe {
                        frame: 0,
                        bbox: [50.0, 20.0, 10.0, 16.0],
                    },
                    Keyframe {
                        frame: 19,
                        bbox: [2.0, 20.0, 10.0, 16.0],
                    },
                ],
                visible: None,
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{run_tracker, TrackerConfig};

    #[test]
    fn interpolation_hits_keyframes_and_midpoint() {
        let s = crossing_example();
        let a = &s.actors[0];
        assert_eq!(a.box_at(0).x, 2.0);
        assert_eq!(a.box_at(19).x, 50.0);
        let mid = a.box_at(19); // clamp beyond last keyframe
        assert_eq!(mid.x, 50.0);
        let b9 = a.box_at(9);
        let expected = 2.0 + (9.0 / 19.0) * 48.0;
        assert!((b9.x - expected).abs() < 1e-12);
    }

    #[test]
    fn detector_emits_visible_actors_in_order() {
        let s = crossing_example();
        let det = ScenarioDetector::new(s.clone());
        let frame = s.render_frame(0);
        let dets = det.detect(0, &frame).unwrap();
        assert_eq!(dets.len(), 2);
        assert_eq!(dets[0].bbox.x, 2.0);
        assert_eq!(dets[1].bbox.x, 50.0);
    }

    #[test]
    fn visibility_ranges_gate_detections_and_masks() {
        let mut s = crossing_example();
        s.actors[1].visible = Some(vec![[5, 9]]);
        let det = ScenarioDetector::new(s.clone());
        let f = s.render_frame(0);
        assert_eq!(det.detect(0, &f).unwrap().len(), 1);
        assert_eq!(det.detect(5, &f).unwrap().len(), 2);
        let gt = s.ground_truth();
        let t2 = gt.get(2).unwrap();
        assert_eq!(t2.birth_frame, 5);
        assert!(!t2.mask_at(5).unwrap().is_empty());
        assert!(t2.mask_at(10).unwrap().is_empty());
    }

    #[test]
    fn tracker_follows_actors_end_to_end() {
        let s = crossing_example();
        let frames = s.render_video();
        let detector = ScenarioDetector::new(s.clone());
        let mut tracker = ScenarioTracker::new(s.clone());
        let tracks = run_tracker(&frames, &detector, &mut tracker, &TrackerConfig::default()).unwrap();
        assert_eq!(tracks.identities().collect::<Vec<_>>(), vec![1, 2]);
        let gt = s.ground_truth();
        // The fixture tracker reproduces ground truth exactly on this scene.
        for id in [1u32, 2] {
            for t in 0..s.frame_count {
                assert_eq!(
                    tracks.get(id).unwrap().mask_at(t),
                    gt.get(id).unwrap().mask_at(t),
                    "id {id} frame {t}"
                );
            }
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let s = crossing_example();
        let frames = s.render_video();
        let run = || {
            let detector = ScenarioDetector::new(s.clone());
            let mut tracker = ScenarioTracker::new(s.clone());
            run_tracker(&frames, &detector, &mut tracker, &TrackerConfig::default()).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn unmatched_prompt_stays_static() {
        let s = crossing_example();
        let mut trk = ScenarioTracker::new(s.clone());
        let f = s.render_frame(0);
        let prompt = BoundingBox::new(30.0, 40.0, 4.0, 4.0).unwrap();
        let m0 = trk.init_identity(0, &f, 7, &prompt).unwrap();
        let m5 = trk.propagate(5, &f, &[7]).unwrap().remove(&7).unwrap();
        assert_eq!(m0, m5);
    }

    #[test]
    fn json_round_trip() {
        let s = crossing_example();
        let text = serde_json::to_string_pretty(&s).unwrap();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back.actors.len(), 2);
        assert_eq!(back.frame_count, 20);
    }
}
