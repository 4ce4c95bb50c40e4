//! Configurable experiments that reproduce the acceptance checks and write reports.

pub mod config;
mod experiments;
pub mod report;

pub use config::{Domain, ExperimentConfig, ExperimentId, Reaction, Settings};
pub use experiments::HEAT_REFERENCE_C;
pub use report::{
    emit, Clause, ExperimentReport, Format, Quantity, Relation, Verdict, REPORT_FILE,
};

use crate::{Error, Result};

/// Runs one experiment. Failures are wrapped with the experiment's name.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let go = || {
        cfg.settings.validate()?;
        match cfg.experiment {
            ExperimentId::FreeKpp => experiments::free_kpp(cfg),
            ExperimentId::Anisotropic => experiments::anisotropic(cfg),
            ExperimentId::HolesKpp => experiments::holes_kpp(cfg),
            ExperimentId::SlantCombustion => experiments::slant_combustion(cfg),
            ExperimentId::MonostableSandwich => experiments::monostable_sandwich(cfg),
            ExperimentId::Symmetry => experiments::symmetry(cfg),
            ExperimentId::HeatAudit => experiments::heat_audit(cfg),
        }
    };
    go().map_err(|e| match e {
        Error::Experiment { .. } => e,
        other => Error::Experiment {
            experiment: cfg.experiment.name().to_string(),
            source: Box::new(other),
        },
    })
}

/// Name and one-line summary of every built-in experiment.
pub fn list() -> Vec<(&'static str, &'static str)> {
    ExperimentId::ALL
        .iter()
        .map(|id| (id.name(), id.summary()))
        .collect()
}
