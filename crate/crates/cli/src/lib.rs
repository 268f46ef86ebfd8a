//! Scenario runner: JSON configs in, figure datasets and check reports out.

pub mod config;
pub mod error;
pub mod figures;
pub mod manifest;
pub mod pipeline;
pub mod verify;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{ConfigError, Method, Scenario, ScenarioConfig};
pub use error::{CliError, Result};
pub use manifest::{OutputDir, RunManifest};
pub use verify::VerifyReport;

/// Environment variable overriding the configured output directory.
pub const OUT_ENV: &str = "GGWPD_OUT";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub method: Option<Method>,
}

/// `--out`, then `$GGWPD_OUT`, then the config's `output_dir`, then
/// `out/<name>`.
pub fn output_dir(config: &ScenarioConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config.output_dir.clone().unwrap_or_else(|| Path::new("out").join(&config.name))
}

/// Applies command-line overrides and validates.
pub fn prepare(mut config: ScenarioConfig, opts: &RunOptions) -> Result<(Scenario, PathBuf)> {
    if let Some(m) = opts.method {
        config.method = m;
    }
    let dir = output_dir(&config, opts.out.as_deref());
    Ok((config.resolve()?, dir))
}

fn execute(config: ScenarioConfig, opts: &RunOptions, checks: bool) -> Result<(RunManifest, Option<VerifyReport>)> {
    let (sc, dir) = prepare(config, opts)?;
    let mut out = OutputDir::create(&dir)?;
    let method = sc.config.method;
    let run = out.timed("pipeline", |_| pipeline::run(&sc, method));
    let mut report = None;
    match run {
        Ok(run) => {
            out.warnings.extend(run.warnings.iter().cloned());
            if let Err(e) = out.timed("datasets", |o| figures::emit_all(&sc, &run, o)) {
                out.errors.push(format!("datasets: {e}"));
            }
            if checks {
                let r = out.timed("verify", |_| verify::verify(&sc, &run));
                out.write_json("verify.json", &r)?;
                report = Some(r);
            }
        }
        Err(e) => out.errors.push(format!("pipeline: {e}")),
    }
    let manifest = out.finish(&sc.config.name, sc.config.hash(), method.to_string())?;
    Ok((manifest, report))
}

/// Runs the pipeline and writes every dataset plus `manifest.json`.
pub fn run_scenario(config: ScenarioConfig, opts: &RunOptions) -> Result<RunManifest> {
    execute(config, opts, false).map(|(m, _)| m)
}

/// Runs the pipeline and the scenario checks; the report is also written
/// as `verify.json`. A run that failed before the checks has no report.
pub fn verify_scenario(config: ScenarioConfig, opts: &RunOptions) -> Result<(RunManifest, Option<VerifyReport>)> {
    execute(config, opts, true)
}

#[derive(Debug, Serialize)]
pub struct FoliationSummary {
    pub label: usize,
    pub turning_points: usize,
    pub seeds: usize,
    pub p_range: [f64; 2],
    pub boundaries: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize)]
pub struct FoliateReport {
    pub time: f64,
    pub tau: Option<f64>,
    pub samples: usize,
    pub foliations: Vec<FoliationSummary>,
}

pub fn foliate(config: ScenarioConfig) -> Result<FoliateReport> {
    let sc = config.resolve()?;
    let (foliations, _) = pipeline::foliate(&sc)?;
    Ok(FoliateReport {
        time: sc.time,
        tau: sc.tau,
        samples: sc.config.contour_samples,
        foliations: foliations
            .into_iter()
            .map(|f| {
                let ps = f.seeds.iter().map(|s| s.p[0]);
                let p_range = [ps.clone().fold(f64::INFINITY, f64::min), ps.fold(f64::NEG_INFINITY, f64::max)];
                FoliationSummary { label: f.label, turning_points: f.turning_points, seeds: f.seeds.len(), p_range, boundaries: f.boundaries }
            })
            .collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct ZerosReport {
    pub family: usize,
    pub x: f64,
    pub time: f64,
    pub tau: Option<f64>,
    #[serde(with = "complex_pair")]
    pub q0: ggwpd::Complex64,
    pub naive_index: i64,
    pub crossed: usize,
    pub zeros: Vec<ggwpd::DetZero>,
}

mod complex_pair {
    pub use ggwpd::io::complex_pair::serialize;
}

/// Determinant zeros of family `label`'s member at `x`.
pub fn zeros(config: ScenarioConfig, label: usize, x: f64) -> Result<ZerosReport> {
    let sc = config.resolve()?;
    if sc.axis != config::Axis::X {
        return Err(CliError::Usage("zeros needs a position grid".into()));
    }
    let (foliations, line) = pipeline::foliate(&sc)?;
    let count = if foliations.is_empty() {
        if label != 1 {
            return Err(CliError::Usage(format!("a quadratic hamiltonian has only family 1, not {label}")));
        }
        None
    } else {
        let f = foliations
            .iter()
            .find(|f| f.label == label)
            .ok_or_else(|| CliError::Usage(format!("no family {label}; {} foliations", foliations.len())))?;
        Some(f.turning_points)
    };
    let start = pipeline::anchor_saddle(&sc, line.as_ref(), label, count)?;
    let saddle = pipeline::member_at(&sc, &start, x)?;
    let zeros = pipeline::zeros_of(&saddle)?;
    Ok(ZerosReport {
        family: label,
        x,
        time: sc.time,
        tau: sc.tau,
        q0: saddle.q0()[0],
        naive_index: saddle.naive_index.nu,
        crossed: zeros.iter().filter(|z| z.crossed).count(),
        zeros,
    })
}
