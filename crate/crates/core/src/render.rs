//! Grounded-clip rendering: overlaying identity contours or boxes on video
//! frames as a minimal visual prompt for the captioning model.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::contour::{extract_contour, thicken_contour};
use crate::error::{Error, Result};
use crate::mask::{InstanceMask, Mask};
use crate::track::{TrackSet, TrackerConfig};
use crate::Frame;

/// Named render colors. Index 0 is the default target color; MultiContour
/// maps identity `i` to entry `(i - 1) mod len`, so identity 1 is also the
/// first palette entry.
pub const PALETTE: [(&str, [u8; 3]); 8] = [
    ("red", [255, 0, 0]),
    ("green", [0, 200, 0]),
    ("blue", [0, 64, 255]),
    ("yellow", [255, 220, 0]),
    ("magenta", [255, 0, 255]),
    ("cyan", [0, 220, 220]),
    ("orange", [255, 140, 0]),
    ("purple", [150, 0, 230]),
];

/// Palette entry for an identity under the deterministic identity-to-color
/// mapping used by MultiContour rendering.
pub fn color_for_identity(identity: u32) -> (&'static str, [u8; 3]) {
    PALETTE[(identity.saturating_sub(1) as usize) % PALETTE.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundingMode {
    /// Only the target identity's thickened mask contour is drawn.
    SingleContour,
    /// Every identity's contour is drawn, each in its palette color.
    MultiContour,
    /// The target's tight box outline replaces the mask contour.
    SingleBox,
}

impl GroundingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GroundingMode::SingleContour => "single-contour",
            GroundingMode::MultiContour => "multi-contour",
            GroundingMode::SingleBox => "single-box",
        }
    }
}

impl std::str::FromStr for GroundingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single-contour" => Ok(GroundingMode::SingleContour),
            "multi-contour" => Ok(GroundingMode::MultiContour),
            "single-box" => Ok(GroundingMode::SingleBox),
            other => Err(Error::invalid(
                "grounding mode",
                format!("unknown mode {other:?}, expected single-contour, multi-contour, or single-box"),
            )),
        }
    }
}

/// A video re-rendered to ground one identity. Pixels outside the drawn
/// stroke bands are bit-identical to the source frames.
pub struct GroundedClip {
    pub frames: Vec<Frame>,
    pub target_identity: u32,
    pub mode: GroundingMode,
    /// Name of the color the target is drawn in, as interpolated into the
    /// captioning prompt.
    pub target_color: &'static str,
}

fn paint(frame: &mut Frame, band: &Mask, rgb: [u8; 3]) {
    for (x, y) in band.set_pixels() {
        frame.put_pixel(x, y, image::Rgb(rgb));
    }
}

/// Stroke band for one identity's mask at one frame: inner boundary
/// thickened to the configured width.
fn contour_band(mask: &Mask, identity: u32, frame_index: usize, width: u32) -> Mask {
    let contour = extract_contour(&InstanceMask {
        frame_index,
        identity,
        mask: mask.clone(),
    });
    thicken_contour(&contour, width, (mask.width(), mask.height()))
}

/// Stroke band for the tight-box outline of a mask: the one-pixel perimeter
/// ring of the box, thickened like a contour. For a filled rectangular mask
/// this coincides with the contour band.
fn box_band(mask: &Mask, width: u32) -> Mask {
    let Some(b) = mask.tight_box() else {
        return Mask::empty(mask.width(), mask.height());
    };
    let (x0, y0) = (b.x as u32, b.y as u32);
    let (x1, y1) = ((b.x + b.w) as u32 - 1, (b.y + b.h) as u32 - 1);
    let ring = Mask::from_fn(mask.width(), mask.height(), |x, y| {
        let inside = (x0..=x1).contains(&x) && (y0..=y1).contains(&y);
        inside && (x == x0 || x == x1 || y == y0 || y == y1)
    });
    let contour = extract_contour(&InstanceMask {
        frame_index: 0,
        identity: 0,
        mask: ring,
    });
    thicken_contour(&contour, width, (mask.width(), mask.height()))
}

/// Render the video with the target identity grounded per `mode`. Frames on
/// which the target's mask is empty or absent pass through unmodified in
/// every mode.
pub fn render_grounded_clip(
    video: &[Frame],
    tracks: &TrackSet,
    target: u32,
    mode: GroundingMode,
    cfg: &TrackerConfig,
) -> Result<GroundedClip> {
    let Some(_) = tracks.get(target) else {
        return Err(Error::invalid(
            "grounding target",
            format!("identity {target} not present in track set"),
        ));
    };
    let target_color = match mode {
        GroundingMode::MultiContour => color_for_identity(target).0,
        _ => PALETTE[0].0,
    };
    let width = cfg.contour_width;

    let mut frames = Vec::with_capacity(video.len());
    for (t, src) in video.iter().enumerate() {
        let target_mask = tracks.get(target).and_then(|trk| trk.mask_at(t));
        let target_present = target_mask.is_some_and(|m| !m.is_empty());
        if !target_present {
            frames.push(src.clone());
            continue;
        }
        let mut frame = src.clone();
        match mode {
            GroundingMode::SingleContour => {
                let mask = target_mask.expect("checked non-empty");
                paint(&mut frame, &contour_band(mask, target, t, width), PALETTE[0].1);
            }
            GroundingMode::MultiContour => {
                // Ascending identity order; overlapping strokes resolve to
                // the higher identity's color deterministically.
                for track in tracks.tracks() {
                    let Some(mask) = track.mask_at(t) else { continue };
                    if mask.is_empty() {
                        continue;
                    }
                    let rgb = color_for_identity(track.identity).1;
                    paint(&mut frame, &contour_band(mask, track.identity, t, width), rgb);
                }
            }
            GroundingMode::SingleBox => {
                let mask = target_mask.expect("checked non-empty");
                paint(&mut frame, &box_band(mask, width), PALETTE[0].1);
            }
        }
        frames.push(frame);
    }

    Ok(GroundedClip {
        frames,
        target_identity: target,
        mode,
        target_color,
    })
}

/// Coordinates at which two equally-sized frames differ. Test and audit
/// helper for the minimal-invasiveness guarantee.
pub fn diff_pixels(a: &Frame, b: &Frame) -> BTreeSet<(u32, u32)> {
    debug_assert_eq!(a.dimensions(), b.dimensions());
    let mut out = BTreeSet::new();
    for y in 0..a.height() {
        for x in 0..a.width() {
            if a.get_pixel(x, y) != b.get_pixel(x, y) {
                out.insert((x, y));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;
    use crate::track::Track;

    /// One 16x12 frame video with a 3x3 mask for identity 1 at (5,4).
    fn single_square_setup() -> (Vec<Frame>, TrackSet) {
        let video = vec![Frame::from_pixel(16, 12, image::Rgb([10, 20, 30]))];
        let mut tracks = TrackSet::new();
        let mut track = Track::new(1, 0);
        track.push_mask(Mask::from_box(
            16,
            12,
            &BoundingBox::new(5.0, 4.0, 3.0, 3.0).unwrap(),
        ));
        tracks.insert(track).unwrap();
        (video, tracks)
    }

    fn cfg_width(width: u32) -> TrackerConfig {
        TrackerConfig {
            contour_width: width,
            ..TrackerConfig::default()
        }
    }

    #[test]
    fn width_one_single_contour_recolors_exactly_the_boundary() {
        let (video, tracks) = single_square_setup();
        let clip =
            render_grounded_clip(&video, &tracks, 1, GroundingMode::SingleContour, &cfg_width(1))
                .unwrap();
        assert_eq!(clip.frames.len(), 1);
        assert_eq!(clip.target_color, "red");
        let diff = diff_pixels(&video[0], &clip.frames[0]);
        assert_eq!(diff.len(), 8);
        assert!(!diff.contains(&(6, 5)), "interior pixel must be untouched");
        for (x, y) in diff {
            assert_eq!(*clip.frames[0].get_pixel(x, y), image::Rgb([255, 0, 0]));
        }
    }

    #[test]
    fn single_box_recolors_exactly_the_perimeter_cells() {
        let (video, tracks) = single_square_setup();
        let clip =
            render_grounded_clip(&video, &tracks, 1, GroundingMode::SingleBox, &cfg_width(1))
                .unwrap();
        let diff = diff_pixels(&video[0], &clip.frames[0]);
        assert_eq!(diff.len(), 8);
        assert!(!diff.contains(&(6, 5)));
    }

    #[test]
    fn empty_target_passes_frames_through() {
        let video = vec![Frame::from_pixel(8, 8, image::Rgb([1, 2, 3])); 3];
        let mut tracks = TrackSet::new();
        let mut track = Track::new(1, 0);
        for _ in 0..3 {
            track.push_mask(Mask::empty(8, 8));
        }
        tracks.insert(track).unwrap();
        let clip =
            render_grounded_clip(&video, &tracks, 1, GroundingMode::SingleContour, &cfg_width(5))
                .unwrap();
        for (src, out) in video.iter().zip(&clip.frames) {
            assert!(diff_pixels(src, out).is_empty());
        }
    }

    #[test]
    fn unknown_target_is_an_error() {
        let (video, tracks) = single_square_setup();
        assert!(render_grounded_clip(&video, &tracks, 9, GroundingMode::SingleContour, &cfg_width(1))
            .is_err());
    }

    #[test]
    fn multi_contour_single_identity_matches_single_contour() {
        let (video, tracks) = single_square_setup();
        let single =
            render_grounded_clip(&video, &tracks, 1, GroundingMode::SingleContour, &cfg_width(5))
                .unwrap();
        let multi =
            render_grounded_clip(&video, &tracks, 1, GroundingMode::MultiContour, &cfg_width(5))
                .unwrap();
        assert_eq!(single.frames[0].as_raw(), multi.frames[0].as_raw());
        assert_eq!(multi.target_color, "red");
    }

    #[test]
    fn multi_contour_draws_every_identity_in_its_color() {
        let video = vec![Frame::from_pixel(24, 12, image::Rgb([0, 0, 0]))];
        let mut tracks = TrackSet::new();
        for (id, x) in [(1u32, 2.0), (2u32, 12.0)] {
            let mut track = Track::new(id, 0);
            track.push_mask(Mask::from_box(
                24,
                12,
                &BoundingBox::new(x, 3.0, 4.0, 4.0).unwrap(),
            ));
            tracks.insert(track).unwrap();
        }
        let clip =
            render_grounded_clip(&video, &tracks, 2, GroundingMode::MultiContour, &cfg_width(1))
                .unwrap();
        assert_eq!(clip.target_color, "green");
        let f = &clip.frames[0];
        assert_eq!(*f.get_pixel(2, 3), image::Rgb(color_for_identity(1).1));
        assert_eq!(*f.get_pixel(12, 3), image::Rgb(color_for_identity(2).1));
    }

    #[test]
    fn rendering_is_idempotent() {
        let (video, tracks) = single_square_setup();
        let once =
            render_grounded_clip(&video, &tracks, 1, GroundingMode::SingleContour, &cfg_width(5))
                .unwrap();
        let twice = render_grounded_clip(
            &once.frames,
            &tracks,
            1,
            GroundingMode::SingleContour,
            &cfg_width(5),
        )
        .unwrap();
        assert_eq!(once.frames[0].as_raw(), twice.frames[0].as_raw());
    }

    #[test]
    fn diff_set_equals_computed_band_width_five() {
        let (video, tracks) = single_square_setup();
        let clip =
            render_grounded_clip(&video, &tracks, 1, GroundingMode::SingleContour, &cfg_width(5))
                .unwrap();
        let mask = tracks.get(1).unwrap().mask_at(0).unwrap();
        let band = contour_band(mask, 1, 0, 5);
        let diff = diff_pixels(&video[0], &clip.frames[0]);
        assert_eq!(diff, band.set_pixels().collect::<BTreeSet<_>>());
    }

    #[test]
    fn mode_strings_round_trip() {
        for mode in [
            GroundingMode::SingleContour,
            GroundingMode::MultiContour,
            GroundingMode::SingleBox,
        ] {
            assert_eq!(mode.as_str().parse::<GroundingMode>().unwrap(), mode);
        }
        assert!("boxes".parse::<GroundingMode>().is_err());
    }
}
