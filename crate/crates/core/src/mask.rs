//! Binary instance masks with run-length serialization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Dense binary mask over a frame, row-major.
///
/// Masks serialize as run-length counts over the row-major scan, starting
/// with the number of unset pixels (possibly zero), so an all-unset mask is
/// `[w*h]` and an all-set mask is `[0, w*h]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: u32, height: u32) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; (width as usize) * (height as usize)],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut m = Mask::empty(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    /// Mask covering `bbox` rasterized onto the frame grid: a pixel is set
    /// when its center falls inside the box.
    pub fn from_box(width: u32, height: u32, bbox: &BoundingBox) -> Self {
        Mask::from_fn(width, height, |x, y| {
            let cx = f64::from(x) + 0.5;
            let cy = f64::from(y) + 0.5;
            cx >= bbox.x && cx < bbox.right() && cy >= bbox.y && cy < bbox.bottom()
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.bits[(y as usize) * (self.width as usize) + (x as usize)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        self.bits[(y as usize) * (self.width as usize) + (x as usize)] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// Coordinates of set pixels in row-major order.
    pub fn set_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.bits.iter().enumerate().filter_map(move |(i, b)| {
            b.then(|| {
                let i = i as u32;
                (i % self.width, i / self.width)
            })
        })
    }

    pub fn intersection_count(&self, other: &Mask) -> usize {
        debug_assert_eq!((self.width, self.height), (other.width, other.height));
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a && **b)
            .count()
    }

    pub fn to_rle(&self) -> Vec<u32> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0u32;
        for &b in &self.bits {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    pub fn from_rle(width: u32, height: u32, runs: &[u32]) -> Result<Self> {
        let total = (width as u64) * (height as u64);
        let sum: u64 = runs.iter().map(|&r| u64::from(r)).sum();
        if sum != total {
            return Err(Error::invalid(
                "mask rle",
                format!("runs sum to {sum}, expected {total} for {width}x{height}"),
            ));
        }
        if runs.iter().skip(1).any(|&r| r == 0) {
            return Err(Error::invalid("mask rle", "zero-length run after the first"));
        }
        let mut bits = Vec::with_capacity(total as usize);
        let mut value = false;
        for &r in runs {
            bits.extend(std::iter::repeat(value).take(r as usize));
            value = !value;
        }
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    /// Tight axis-aligned box around the set pixels, on pixel boundaries,
    /// so a single set pixel at `(x, y)` yields a 1x1 box at `(x, y)`.
    /// `None` when the mask is empty.
    pub fn tight_box(&self) -> Option<BoundingBox> {
        let mut min_x = u32::MAX;
        let mut min_y = u32::MAX;
        let mut max_x = 0u32;
        let mut max_y = 0u32;
        let mut any = false;
        for (x, y) in self.set_pixels() {
            any = true;
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        if !any {
            return None;
        }
        Some(BoundingBox {
            x: f64::from(min_x),
            y: f64::from(min_y),
            w: f64::from(max_x - min_x + 1),
            h: f64::from(max_y - min_y + 1),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct RleRepr {
    width: u32,
    height: u32,
    rle: Vec<u32>,
}

impl Serialize for Mask {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RleRepr {
            width: self.width,
            height: self.height,
            rle: self.to_rle(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mask {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = RleRepr::deserialize(deserializer)?;
        Mask::from_rle(repr.width, repr.height, &repr.rle).map_err(serde::de::Error::custom)
    }
}

/// A mask attributed to one tracked identity on one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMask {
    pub frame_index: usize,
    pub identity: u32,
    pub mask: Mask,
}
