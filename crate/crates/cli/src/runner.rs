//! Runs one scenario end to end and writes its outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};
use crate::report::RunReport;
use crate::scenarios::{prepare, ScenarioOutput};

/// Environment fallback for the worker count.
pub const THREADS_ENV: &str = "DUALITY_LAB_THREADS";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Replaces the seed from the config file.
    pub seed_override: Option<u64>,
    /// Worker threads for Monte-Carlo fan-out; `None` uses rayon's default.
    pub threads: Option<usize>,
}

/// Loads `config_path`, runs it and writes `report.json`, `summary.txt` and
/// the scenario's CSV files into `out_dir`.
///
/// Nothing is written unless the config parses and validates.
pub fn run(config_path: &Path, out_dir: &Path, opts: RunOptions) -> CliResult<RunReport> {
    let mut cfg = ScenarioConfig::load(config_path)?;
    if let Some(seed) = opts.seed_override {
        cfg.seed = seed;
    }
    run_config(&cfg, out_dir, opts.threads)
}

/// [`run`] for an already-loaded config.
pub fn run_config(cfg: &ScenarioConfig, out_dir: &Path, threads: Option<usize>) -> CliResult<RunReport> {
    let scenario = prepare(cfg)?;
    let start = Instant::now();
    let output = match threads {
        Some(0) => return Err(crate::error::invalid("thread count must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| scenario.run())?,
        None => scenario.run()?,
    };
    let wall_clock_s = start.elapsed().as_secs_f64();
    write_outputs(cfg, out_dir, output, wall_clock_s)
}

fn write_outputs(cfg: &ScenarioConfig, out_dir: &Path, output: ScenarioOutput, wall_clock_s: f64) -> CliResult<RunReport> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let mut files = Vec::with_capacity(output.tables.len() + 1);
    for table in &output.tables {
        table.write(out_dir)?;
        files.push(table.file_name.clone());
    }
    files.push("summary.txt".to_string());
    let pass = output.rows.iter().all(|r| r.pass);
    let report = RunReport {
        scenario: cfg.scenario.to_string(),
        digest: cfg.digest(),
        seed: cfg.seed,
        rows: output.rows,
        verdict: if pass { "pass" } else { "fail" }.to_string(),
        wall_clock_s,
        files,
    };
    let summary_path = out_dir.join("summary.txt");
    std::fs::write(&summary_path, report.summary()).map_err(|e| io_error(&summary_path, e))?;
    let report_path = out_dir.join("report.json");
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&report_path, json + "\n").map_err(|e| io_error(&report_path, e))?;
    Ok(report)
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: PathBuf::from(path), source }
}

/// Worker count from `--threads`, else from [`THREADS_ENV`].
pub fn resolve_threads(flag: Option<usize>) -> CliResult<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| crate::error::invalid(format!("{THREADS_ENV}={v} is not a thread count"))),
        _ => Ok(None),
    }
}
