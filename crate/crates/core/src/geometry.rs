//! Boxes, detections, and the IoU gate used for track initialization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class label kept by detection filtering; everything else is discarded.
pub const PERSON_CLASS: &str = "person";

/// Axis-aligned box in continuous pixel coordinates: `(x, y)` is the top-left
/// corner, `w`/`h` the extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoundingBox { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()) {
            return Err(Error::invalid("bounding box", "non-finite coordinate"));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::invalid(
                "bounding box",
                format!("non-positive extent w={} h={}", self.w, self.h),
            ));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// Clamp the box to `[0, width] x [0, height]` frame bounds. Returns
    /// `None` if nothing of the box remains inside the frame.
    pub fn clamped(&self, width: u32, height: u32) -> Option<BoundingBox> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = self.right().min(f64::from(width));
        let y1 = self.bottom().min(f64::from(height));
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        Some(BoundingBox {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        })
    }
}

/// Intersection-over-union of two boxes, computed on continuous coordinates.
/// Symmetric, in `[0, 1]`, and `0` for disjoint boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let iy = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter / union
}

/// One detector output for a single frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub class_label: String,
}

impl Detection {
    pub fn person(bbox: BoundingBox, confidence: f64) -> Self {
        Detection {
            bbox,
            confidence,
            class_label: PERSON_CLASS.to_string(),
        }
    }

    pub fn is_person(&self) -> bool {
        self.class_label == PERSON_CLASS
    }
}

/// Keep person-class detections at or above the confidence threshold,
/// preserving detector order. Detections below the threshold never reach
/// the tracker.
pub fn filter_detections(dets: &[Detection], confidence_threshold: f64) -> Vec<Detection> {
    dets.iter()
        .filter(|d| d.is_person() && d.confidence >= confidence_threshold)
        .cloned()
        .collect()
}
