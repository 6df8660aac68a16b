//! Replicated experiments over an n grid, aggregation, estimators of the
//! theory constants and result files.

pub mod aggregate;
pub mod config;
pub mod experiment;
pub mod fit;
pub mod io;

pub use aggregate::{AggregateRow, AggregateTable, MeanSe, Series};
pub use config::{ExperimentConfig, McmcBudget, TestRule};
pub use experiment::{
    aggregate, run_experiment, run_replication, ExperimentOutput, ReplicationRecord,
};
pub use fit::{
    check_state_equations, check_vt_growth, estimate_lambda, estimate_nu, fit_exponent, fit_table,
    Check, Estimate, FitReport, FitResult, StateResidual,
};
pub use io::RunManifest;
