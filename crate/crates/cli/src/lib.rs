//! Command-line layer over the `membec` library: config resolution, the
//! parallel sweep engine, figure pipelines and CSV/SVG output.

pub mod csvio;
pub mod figures;
pub mod plot;
pub mod sweep;
