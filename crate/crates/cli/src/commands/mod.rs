pub mod ablate;
pub mod annotate;
pub mod eval;
pub mod stats;
pub mod track;
