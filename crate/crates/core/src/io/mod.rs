//! Persistence: frame directories, annotation files, vocabulary files,
//! metric reports, and pipeline configuration.

pub mod annotation;
pub mod config;
pub mod report;
pub mod synsets;
pub mod video;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Write `contents` to `path` atomically: write a sibling temp file, then
/// rename over the target. Readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::data(path, "path has no file name"))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
