//! Problem definitions and analysis used by the command-line harness and the
//! acceptance suite.

pub mod analysis;
pub mod config;
pub mod output;
pub mod problems;
pub mod suite;

pub use analysis::{conservation_report, convergence_table, locate_fronts, ConservationReport, ConvergenceRow};
pub use config::{PrimitiveState, ProblemConfig, ProblemKind, TwoStateInit};
pub use output::{kinetic_profiles, read_profiles, write_profiles, ProfileRow};
pub use problems::{build_solver, init_accuracy, init_lax, init_riemann, initial_field, nse_reference, run_problem, FluidReference, RunOutput};
pub use suite::{convergence_suite, SuiteEntry};
