//! CSV ingestion, result files and SVG figures.

mod ingest;
mod results;
mod svg;

pub use ingest::{
    load_csv, read_dataset_csv, write_dataset_csv, IngestSchema, LoadReport, Loaded, MissingPolicy, Preset,
};
pub use results::{medians_path, write_medians_csv, write_runs_csv, write_sweep_csv, MEDIANS_HEADER_TAIL, RUNS_HEADER_TAIL};
pub use svg::{render_curve, render_heatmap, SvgMetric};
