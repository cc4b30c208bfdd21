//! Training-free semantic multi-object tracking toolkit.
//!
//! The pipeline turns per-frame person detections and instance masks into
//! identity-consistent tracks, renders contour-grounded clips per identity,
//! drives vision-language and language backends to produce a video summary,
//! instance captions, and directed WordNet-labeled interactions, and scores
//! all four outputs (tracking, summary, captions, interactions).
//!
//! All learned models sit behind the traits in [`backends`]; everything in
//! this crate is deterministic given deterministic backends.

pub mod backends;
pub mod captioning;
pub mod contour;
pub mod error;
pub mod geometry;
pub mod interact;
pub mod io;
pub mod label_space;
pub mod mask;
pub mod metrics;
pub mod prompts;
pub mod render;
pub mod track;

/// A decoded video frame. Videos enter the toolkit as directories of
/// lossless frame images, so a frame is just an RGB bitmap.
pub type Frame = image::RgbImage;

pub use error::{Error, Result};
