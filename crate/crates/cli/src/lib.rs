//! Front end for `fibspace`: run configuration, invariant suites,
//! convergence studies and file-based commands.

// NaN must fail tolerance checks, hence `!(x <= tol)`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod convergence;
pub mod error;
pub mod report;
pub mod scene;
pub mod suites;

pub use config::RunConfig;
pub use error::CliError;
pub use report::{Check, Report};
pub use scene::Scene;
