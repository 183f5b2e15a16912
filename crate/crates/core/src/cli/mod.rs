//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | invalid configuration or usage |
//! | 3 | invalid model or parameters outside the supported regime |
//! | 4 | numerical failure (steady state, eigendecomposition, vanishing populations) |
//! | 5 | I/O failure |
//! | 6 | `leapfrog-check` found a sampled value not above 1 |

mod config;
mod run;

pub use config::{parse_config, Command, ConfigError, ConfigErrors, Overrides, RunConfig, TauGrid};
pub use run::{execute, exit_code_for, run, Outcome, RunFailure, RunSummary, MANIFEST};

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const MODEL: i32 = 3;
    pub const NUMERICAL: i32 = 4;
    pub const IO: i32 = 5;
    pub const CHECK_FAILED: i32 = 6;
}
