//! Evaluation metrics.

pub mod caption;
pub mod interaction;
pub mod matching;
pub mod tracking;
