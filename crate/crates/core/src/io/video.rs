//! Frame-directory video format: one losslessly encoded PNG per frame,
//! file stems are frame indices, numbering starts at zero with no gaps.

use std::fs;
use std::path::{Path, PathBuf};

use image::ImageFormat;

use crate::error::{Error, Result};
use crate::Frame;

/// Load every frame from a directory. Frame order is numeric file order;
/// a gap in the numbering is an error listing the missing indices.
pub fn load_video(dir: &Path) -> Result<Vec<Frame>> {
    let mut indexed: Vec<(usize, PathBuf)> = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::data(&path, "frame file name is not valid UTF-8"))?;
        if stem.is_empty() || !stem.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::data(&path, "frame file stem must be a decimal index"));
        }
        let index: usize = stem
            .parse()
            .map_err(|_| Error::data(&path, "frame index out of range"))?;
        indexed.push((index, path));
    }
    if indexed.is_empty() {
        return Err(Error::data(dir, "no .png frames found"));
    }
    indexed.sort_by_key(|(i, _)| *i);
    for window in indexed.windows(2) {
        if window[0].0 == window[1].0 {
            return Err(Error::data(
                &window[1].1,
                format!("duplicate frame index {}", window[1].0),
            ));
        }
    }
    let present: Vec<usize> = indexed.iter().map(|(i, _)| *i).collect();
    let last = *present.last().unwrap();
    if present.len() != last + 1 || present[0] != 0 {
        let mut missing: Vec<usize> = (0..=last).filter(|i| !present.contains(i)).collect();
        missing.truncate(10);
        return Err(Error::data(
            dir,
            format!("frame numbering has gaps, missing indices {missing:?}"),
        ));
    }

    let mut frames = Vec::with_capacity(indexed.len());
    for (index, path) in &indexed {
        let img = image::open(path)
            .map_err(|e| Error::data(path, format!("failed to decode frame: {e}")))?
            .to_rgb8();
        if let Some(first) = frames.first() {
            let first: &Frame = first;
            if img.dimensions() != first.dimensions() {
                return Err(Error::data(
                    path,
                    format!(
                        "frame {index} is {}x{}, expected {}x{}",
                        img.width(),
                        img.height(),
                        first.width(),
                        first.height()
                    ),
                ));
            }
        }
        frames.push(img);
    }
    Ok(frames)
}

/// Write frames as zero-padded PNGs (000000.png, 000001.png, ...),
/// creating the directory if needed.
pub fn save_frames(dir: &Path, frames: &[Frame]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in frames.iter().enumerate() {
        let path = dir.join(format!("{i:06}.png"));
        frame
            .save_with_format(&path, ImageFormat::Png)
            .map_err(|e| Error::data(&path, format!("failed to encode frame: {e}")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(w: u32, h: u32, fill: [u8; 3]) -> Frame {
        Frame::from_pixel(w, h, image::Rgb(fill))
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let frames = vec![frame(8, 6, [10, 20, 30]), frame(8, 6, [200, 0, 0])];
        save_frames(dir.path(), &frames).unwrap();
        let loaded = load_video(dir.path()).unwrap();
        assert_eq!(loaded, frames);
    }

    #[test]
    fn gap_in_numbering_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        frame(4, 4, [0, 0, 0]).save(dir.path().join("000000.png")).unwrap();
        frame(4, 4, [0, 0, 0]).save(dir.path().join("000002.png")).unwrap();
        let err = load_video(dir.path()).unwrap_err();
        assert!(err.to_string().contains("[1]"), "{err}");
    }

    #[test]
    fn numbering_must_start_at_zero() {
        let dir = tempfile::tempdir().unwrap();
        frame(4, 4, [0, 0, 0]).save(dir.path().join("000001.png")).unwrap();
        let err = load_video(dir.path()).unwrap_err();
        assert!(err.to_string().contains("[0]"), "{err}");
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        frame(4, 4, [0, 0, 0]).save(dir.path().join("000000.png")).unwrap();
        frame(5, 4, [0, 0, 0]).save(dir.path().join("000001.png")).unwrap();
        let err = load_video(dir.path()).unwrap_err();
        assert!(err.to_string().contains("5x4"), "{err}");
    }

    #[test]
    fn non_numeric_png_is_rejected_and_other_files_ignored() {
        let dir = tempfile::tempdir().unwrap();
        frame(4, 4, [0, 0, 0]).save(dir.path().join("000000.png")).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        assert_eq!(load_video(dir.path()).unwrap().len(), 1);
        frame(4, 4, [0, 0, 0]).save(dir.path().join("cover.png")).unwrap();
        assert!(load_video(dir.path()).is_err());
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_video(dir.path()).is_err());
    }
}
