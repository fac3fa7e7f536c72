//! Run configuration, pipelines and artifact bundles behind the `twlab` binary.

pub mod bundle;
pub mod config;
pub mod run;

pub use bundle::{Check, ResultBundle, Table};
pub use config::{parse_config, parse_config_with, Command, ConfigError, Overrides, RunConfig};
pub use run::{run, RunError};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CHECK_FAILURE: i32 = 2;
    pub const NON_CONVERGENCE: i32 = 3;
    pub const CONFIG_ERROR: i32 = 4;
}

/// Exit code of a finished bundle.
pub fn exit_code(bundle: &ResultBundle) -> i32 {
    if !bundle.converged {
        exit::NON_CONVERGENCE
    } else if !bundle.all_passed() {
        exit::CHECK_FAILURE
    } else {
        exit::SUCCESS
    }
}
