//! Figures and machine-readable results.

pub mod json;
pub mod svg;

pub use json::{
    from_json, read_results, to_json, write_json, ResultsDocument, SetRecord, SweepDocument, TimingDocument,
    TimingRecord, WaveRecord,
};
pub use svg::{
    gray_fill, render_column_map, render_cost_sweep, render_selection_map, render_timing_curves,
    render_wave_selections, MapColumn, MapEntry, Marker, SelectionMapSpec, TimingSeries,
};

use std::path::Path;

use crate::error::{Error, Result};

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
