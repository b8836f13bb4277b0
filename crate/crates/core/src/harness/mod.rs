//! Experiment orchestration: configuration, the two model suites, the
//! proposition check, plain-text persistence and SVG plots.

mod config;
mod persist;
mod plot;
mod suite;

pub use config::{ExperimentConfig, ModelId, Suite, OUT_DIR_ENV};
pub use persist::{
    checkpoint_from_str, checkpoint_to_string, load_dataset, load_model, load_spec, read_dataset, save_dataset, save_model, save_spec,
    spec_from_str, spec_to_string, write_dataset, Checkpoint,
};
pub use plot::{metric_value, svg_line_chart};
pub use suite::{
    cell_seed, data_seed, evaluate, fit_model, metrics_path, risk_seed, run_cell, run_cells, run_suite, run_suite_to_dir, suite_data,
    timings_path, CellResult, Evaluation, Fitted, SuiteReport,
};

use crate::error::Result;
use crate::vcdim::{verify_proposition, PropositionReport};

/// Runs the constructive check for every `(n, family)` pair in the config.
pub fn run_proposition_suite(cfg: &ExperimentConfig) -> Result<Vec<PropositionReport>> {
    let mut out = Vec::new();
    for &family in &cfg.families {
        for &n in &cfg.proposition_n {
            out.push(verify_proposition(n, family)?);
        }
    }
    Ok(out)
}
