//! Batch front end for gdm-core: scenario files in, JSON reports and CSV
//! traces out.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;
pub mod selftest;

pub use commands::{run, Command, Invocation, Outcome};
pub use error::{CliError, Result};
pub use scenario::{parse_scenario, DensitySpec, Scenario};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VIOLATED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_NOT_APPLICABLE: u8 = 4;

/// Caps the global rayon pool from `GDM_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("GDM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("GDM_THREADS must be a positive integer, got `{raw}`")))?;
    // A second initialization (e.g. in tests) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
