//! `semtrack track`: run the causal person tracker over a frame directory
//! and write the trajectories as an annotation file without semantic
//! fields.

use std::path::Path;

use semtrack::io::annotation::AnnotationFile;
use semtrack::io::video::load_video;
use semtrack::track::run_tracker;

use crate::backend::{self, BackendSpec};
use crate::{CliError, Context, TrackArgs};

/// A frame directory without a single PNG is an invocation mistake, not a
/// data defect; catch it before the loader reports it as one.
fn ensure_frames_present(dir: &Path) -> Result<(), CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::usage(format!("--frames {}: {e}", dir.display())))?;
    for entry in entries.flatten() {
        if entry.path().extension().and_then(|e| e.to_str()) == Some("png") {
            return Ok(());
        }
    }
    Err(CliError::usage(format!(
        "--frames {}: directory contains no .png frames",
        dir.display()
    )))
}

pub fn run(args: &TrackArgs, ctx: &Context) -> Result<(), CliError> {
    let spec = BackendSpec::parse(&args.backend)?;
    ensure_frames_present(&args.frames)?;
    let frames = load_video(&args.frames)?;
    let (detector, mut tracker) = backend::tracking_backends(&spec)?;
    let cfg = ctx.config.tracker_config();
    let tracks = run_tracker(&frames, detector.as_ref(), tracker.as_mut(), &cfg)?;

    let video_id = match &args.video_id {
        Some(id) => id.clone(),
        None => args
            .frames
            .file_name()
            .and_then(|n| n.to_str())
            .map(str::to_string)
            .ok_or_else(|| {
                CliError::usage("--frames path has no usable directory name; pass --video-id")
            })?,
    };
    let file = AnnotationFile::from_tracks(&video_id, &tracks, !args.boxes_only);
    file.save(&args.out)?;
    println!(
        "tracked {} identities over {} frames -> {}",
        file.tracks.len(),
        file.frame_count,
        args.out.display()
    );
    Ok(())
}
