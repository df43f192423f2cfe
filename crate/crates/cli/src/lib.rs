//! Experiment driver: JSON configs in, CSV tables out.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::Path;

pub use config::{Experiment, ExperimentConfig, Overrides};
pub use error::CliError;
pub use output::Table;

/// Loads (if given), resolves and runs one experiment, writing the CSV to
/// the configured `out` (or returning it for stdout). `gen-data` writes its
/// dataset to `out` and always returns its summary.
pub fn execute(experiment: Experiment, config: Option<&Path>, ov: &Overrides) -> Result<Option<String>, CliError> {
    let cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    }
    .resolve(experiment, ov)?;
    if let Some(k) = cfg.jobs {
        // fails only if the global pool already exists, e.g. in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let out = match experiment {
        Experiment::GenData => run::run_gen_data(&cfg),
        Experiment::Construct => run::run_construct(&cfg),
        Experiment::ApproxRate => run::run_approx_rate(&cfg),
        Experiment::LearnRate => run::run_learn_rate(&cfg),
        Experiment::CoverBound => run::run_cover_bound(&cfg),
        Experiment::Decompose => run::run_decompose(&cfg),
        Experiment::Train => run::run_train(&cfg),
    }?;
    let text = out.table.render(experiment.name(), &cfg.hash());
    let printed = match (&cfg.out, experiment) {
        (Some(path), e) if e != Experiment::GenData => {
            std::fs::write(path, &text)?;
            None
        }
        _ => Some(text),
    };
    match out.violation {
        Some(v) => Err(CliError::BoundViolation(v)),
        None => Ok(printed),
    }
}
