//! Orchestration layer: inequality certificates, counting experiments, and
//! the command-line interface.

pub mod cli;
pub mod experiment;
pub mod verify;

pub use cli::run_cli;
pub use experiment::{
    perturbation_experiment, run_cell, solve_experiment, topology_experiment, CellOutcome,
    CertifiedSolution, ExperimentConfig, TopologyReport, TopologyRow,
};
pub use verify::{c_of_delta, gamma_alpha, verify_ps, verify_splus, CertificateReport};
