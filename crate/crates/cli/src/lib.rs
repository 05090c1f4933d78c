//! Experiment driver for `anisomesh`: strategy runs, audits, renders and
//! inequality sweeps.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod svg;

pub use anisomesh;
pub use config::{ExperimentConfig, MeshSource, StrategyChoice};
pub use experiment::{run_experiment, ConvergenceRow, StrategyRun};

/// Caps rayon's global pool from `ANISOMESH_THREADS`; ignored if unset or invalid.
pub fn init_threads() {
    let Some(n) = std::env::var("ANISOMESH_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) else {
        return;
    };
    if n > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not set thread count: {e}");
        }
    }
}
