//! Mask contours: inner-boundary extraction and stroke thickening.

use std::collections::BTreeSet;

use crate::mask::{InstanceMask, Mask};

/// Inner boundary of one identity's mask: every contour pixel is a set
/// pixel of the source mask with at least one 4-neighbor outside the mask
/// or on the frame border. Empty iff the mask is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    pub identity: u32,
    pixels: BTreeSet<(u32, u32)>,
}

impl Contour {
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pixels.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        self.pixels.contains(&(x, y))
    }
}

/// Extract the inner boundary of `m` under 4-connectivity. A set pixel
/// belongs to the contour when any of its 4-neighbors is unset or lies
/// outside the frame.
pub fn extract_contour(m: &InstanceMask) -> Contour {
    let mask = &m.mask;
    let (w, h) = (mask.width(), mask.height());
    let mut pixels = BTreeSet::new();
    for (x, y) in mask.set_pixels() {
        let exposed = x == 0
            || y == 0
            || x + 1 == w
            || y + 1 == h
            || !mask.get(x - 1, y)
            || !mask.get(x + 1, y)
            || !mask.get(x, y - 1)
            || !mask.get(x, y + 1);
        if exposed {
            pixels.insert((x, y));
        }
    }
    Contour {
        identity: m.identity,
        pixels,
    }
}

/// Thicken a contour into a stroke band: morphological dilation by the
/// Chebyshev ball of radius `width / 2` (integer division), clamped to the
/// frame. Width 1 is the identity, so the band equals the contour itself.
pub fn thicken_contour(c: &Contour, width: u32, frame_dims: (u32, u32)) -> Mask {
    debug_assert!(width >= 1);
    let (w, h) = frame_dims;
    let r = i64::from(width / 2);
    let mut band = Mask::empty(w, h);
    for (x, y) in c.pixels() {
        for dy in -r..=r {
            for dx in -r..=r {
                let nx = i64::from(x) + dx;
                let ny = i64::from(y) + dy;
                if nx >= 0 && ny >= 0 && (nx as u32) < w && (ny as u32) < h {
                    band.set(nx as u32, ny as u32, true);
                }
            }
        }
    }
    band
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(mask: Mask) -> InstanceMask {
        InstanceMask {
            frame_index: 0,
            identity: 1,
            mask,
        }
    }

    /// Brute-force boundary test used as the oracle: re-evaluates the
    /// definition over every pixel independently of `extract_contour`'s
    /// iteration strategy.
    fn oracle_boundary(mask: &Mask) -> BTreeSet<(u32, u32)> {
        let mut out = BTreeSet::new();
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                if !mask.get(x, y) {
                    continue;
                }
                let neighbors = [
                    (x.wrapping_sub(1), y),
                    (x + 1, y),
                    (x, y.wrapping_sub(1)),
                    (x, y + 1),
                ];
                let on_border = neighbors.iter().any(|&(nx, ny)| {
                    nx >= mask.width() || ny >= mask.height() || !mask.get(nx, ny)
                });
                if on_border {
                    out.insert((x, y));
                }
            }
        }
        out
    }

    /// Brute-force Chebyshev dilation oracle.
    fn oracle_dilate(pixels: &BTreeSet<(u32, u32)>, r: u32, w: u32, h: u32) -> BTreeSet<(u32, u32)> {
        let mut out = BTreeSet::new();
        for y in 0..h {
            for x in 0..w {
                let near = pixels.iter().any(|&(px, py)| {
                    (i64::from(px) - i64::from(x)).abs() <= i64::from(r)
                        && (i64::from(py) - i64::from(y)).abs() <= i64::from(r)
                });
                if near {
                    out.insert((x, y));
                }
            }
        }
        out
    }

    #[test]
    fn single_pixel_is_its_own_contour() {
        let mut m = Mask::empty(8, 8);
        m.set(3, 4, true);
        let c = extract_contour(&instance(m));
        assert_eq!(c.pixels().collect::<Vec<_>>(), vec![(3, 4)]);
    }

    #[test]
    fn solid_square_keeps_perimeter_only() {
        let m = Mask::from_fn(9, 9, |x, y| (2..5).contains(&x) && (2..5).contains(&y));
        let c = extract_contour(&instance(m.clone()));
        assert_eq!(c.len(), 8);
        assert!(!c.contains(3, 3));
        assert_eq!(c.pixels().collect::<BTreeSet<_>>(), oracle_boundary(&m));
    }

    #[test]
    fn thin_row_is_all_contour() {
        let m = Mask::from_fn(7, 3, |x, y| y == 1 && (1..6).contains(&x));
        let c = extract_contour(&instance(m.clone()));
        assert_eq!(c.len(), 5);
        assert_eq!(c.pixels().collect::<BTreeSet<_>>(), oracle_boundary(&m));
    }

    #[test]
    fn frame_border_counts_as_outside() {
        let m = Mask::from_fn(4, 4, |_, _| true);
        let c = extract_contour(&instance(m.clone()));
        // All pixels except the 2x2 interior are boundary.
        assert_eq!(c.len(), 12);
        assert_eq!(c.pixels().collect::<BTreeSet<_>>(), oracle_boundary(&m));
    }

    #[test]
    fn contour_is_subset_of_mask() {
        let m = Mask::from_fn(16, 12, |x, y| (x * 7 + y * 3) % 5 < 2);
        let c = extract_contour(&instance(m.clone()));
        for (x, y) in c.pixels() {
            assert!(m.get(x, y));
        }
    }

    #[test]
    fn width_one_thickening_is_identity() {
        let m = Mask::from_fn(9, 9, |x, y| (2..5).contains(&x) && (2..5).contains(&y));
        let c = extract_contour(&instance(m));
        let band = thicken_contour(&c, 1, (9, 9));
        assert_eq!(band.count(), c.len());
        for (x, y) in c.pixels() {
            assert!(band.get(x, y));
        }
    }

    #[test]
    fn width_five_single_pixel_gives_5x5_block() {
        let mut m = Mask::empty(21, 21);
        m.set(10, 10, true);
        let c = extract_contour(&instance(m));
        let band = thicken_contour(&c, 5, (21, 21));
        assert_eq!(band.count(), 25);
        for y in 8..=12 {
            for x in 8..=12 {
                assert!(band.get(x, y));
            }
        }
    }

    #[test]
    fn square_contour_width_three_matches_oracle() {
        let m = Mask::from_fn(11, 11, |x, y| (4..7).contains(&x) && (4..7).contains(&y));
        let c = extract_contour(&instance(m));
        let band = thicken_contour(&c, 3, (11, 11));
        assert_eq!(band.count(), 25);
        let expected = oracle_dilate(&c.pixels().collect(), 1, 11, 11);
        assert_eq!(band.set_pixels().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn dilation_clamps_to_frame() {
        let mut m = Mask::empty(6, 6);
        m.set(0, 0, true);
        let c = extract_contour(&instance(m));
        let band = thicken_contour(&c, 5, (6, 6));
        // Only the in-frame quadrant of the 5x5 ball survives.
        assert_eq!(band.count(), 9);
        let expected = oracle_dilate(&c.pixels().collect(), 2, 6, 6);
        assert_eq!(band.set_pixels().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn even_width_rounds_radius_down() {
        let mut m = Mask::empty(9, 9);
        m.set(4, 4, true);
        let c = extract_contour(&instance(m));
        // width 4 -> radius 2, same as width 5.
        assert_eq!(thicken_contour(&c, 4, (9, 9)).count(), 25);
        assert_eq!(thicken_contour(&c, 2, (9, 9)).count(), 9);
    }

    #[test]
    fn random_masks_match_oracles() {
        for seed in 0u32..20 {
            let m = Mask::from_fn(13, 9, |x, y| (x * 31 + y * 17 + seed * 7) % 11 < 4);
            let c = extract_contour(&instance(m.clone()));
            assert_eq!(c.pixels().collect::<BTreeSet<_>>(), oracle_boundary(&m));
            let band = thicken_contour(&c, 5, (13, 9));
            let expected = oracle_dilate(&c.pixels().collect(), 2, 13, 9);
            assert_eq!(band.set_pixels().collect::<BTreeSet<_>>(), expected);
        }
    }
}
