//! Configuration, experiment orchestration and report emission behind the
//! `etsim` binary.

pub mod config;
pub mod experiments;
pub mod report;
pub mod sweep;
pub mod verify;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{load_config, parse_config, Experiment, ExperimentConfig, Overrides, ReportFormat, RewardSpec};
pub use experiments::{run_multiblock, run_pool, run_pricing, run_simulate};
pub use report::{emit_report, exit_code, load_report, render_report, ReportRow};
pub use sweep::run_sweep;
pub use verify::{run_analytic, run_verify, run_verify_with, ClosedForm};

use crate::Result;

/// Exit status for a configuration or input error.
pub const EXIT_CONFIG: i32 = 2;

/// Runs `experiment` and, if timing is on, stamps each row with the
/// experiment's wall-clock time.
pub fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let start = Instant::now();
    let mut rows = match experiment {
        Experiment::Analytic => run_analytic(cfg)?,
        Experiment::Verify => run_verify(cfg)?,
        Experiment::Simulate => run_simulate(cfg)?,
        Experiment::Sweep => run_sweep(cfg)?,
        Experiment::Pricing => run_pricing(cfg)?,
        Experiment::Pool => run_pool(cfg)?,
        Experiment::Multiblock => run_multiblock(cfg)?,
    };
    if cfg.output.timing {
        let ms = start.elapsed().as_secs_f64() * 1e3;
        for r in &mut rows {
            r.runtime_ms = Some(ms);
        }
    }
    Ok(rows)
}

/// Where the resolved configuration is written next to a report.
pub fn config_echo_path(report: &Path) -> PathBuf {
    let mut name = report.file_name().unwrap_or_default().to_os_string();
    name.push(".config.toml");
    report.with_file_name(name)
}
