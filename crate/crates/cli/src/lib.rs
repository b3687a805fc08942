//! Batch driver behind the `fracbs` binary: JSON run configs, the three run
//! modes and atomic artifact export.
//!
//! Exit codes: 0 success, 1 failed verification checks, 2 configuration or
//! I/O error, 3 numerical error (instability, non-finite values, symbols that
//! do not meet a kernel precondition).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fracbs::analysis::CheckReport;
use fracbs::direct::DensityOnR;
use fracbs::grid::{sample, LogGrid};
use fracbs::multiplier::{hille_kernel, symbol_of_generator, GeneratorSpec};
use fracbs::semigroup::{solve_acp, SemigroupSolution};
use fracbs::suites::{run_suite, SUITE_NAMES};
use fracbs::{ComplexScalar, Error};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve,
    Verify,
    Kernel,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Verify => "verify",
            Mode::Kernel => "kernel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn standard_grid() -> LogGrid {
    LogGrid::standard()
}

fn all_suites() -> Vec<String> {
    SUITE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// A run configuration. `generator`, `datum` and `times` are required by the
/// modes that use them and ignored otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default = "standard_grid")]
    pub grid: LogGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum: Option<fracbs::grid::InitialDatum>,
    #[serde(default)]
    pub times: Vec<f64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: Format,
    #[serde(default = "all_suites")]
    pub verify_suites: Vec<String>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numeric(Error),
    #[error("io error: {0}")]
    Io(String),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed { .. } => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Stability(_)
            | Error::NonFinite(_)
            | Error::Pole { .. }
            | Error::NearSpectrum { .. }
            | Error::InsufficientDecay(_) => CliError::Numeric(e),
            Error::Io(m) => CliError::Io(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn generator(&self) -> Result<GeneratorSpec, CliError> {
        let spec = self
            .generator
            .ok_or_else(|| CliError::Config("missing field `generator`".into()))?;
        spec.validate()?;
        Ok(spec)
    }

    fn checked_times(&self) -> Result<(), CliError> {
        if self.times.is_empty() {
            return Err(CliError::Config("times must be non-empty".into()));
        }
        if self.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(CliError::Config("times must be positive and finite".into()));
        }
        if self.times.windows(2).any(|p| p[1] < p[0]) {
            return Err(CliError::Config("times must be sorted ascending".into()));
        }
        Ok(())
    }

    /// Checks every invariant the given mode depends on.
    pub fn validate(&self, mode: Mode) -> Result<(), CliError> {
        LogGrid::new(self.grid.x_min(), self.grid.x_max(), self.grid.len())?;
        match mode {
            Mode::Solve => {
                self.generator()?;
                let datum = self
                    .datum
                    .as_ref()
                    .ok_or_else(|| CliError::Config("missing field `datum`".into()))?;
                datum.validate()?;
                self.checked_times()
            }
            Mode::Kernel => {
                self.generator()?;
                self.checked_times()
            }
            Mode::Verify => {
                if self.verify_suites.is_empty() {
                    return Err(CliError::Config("verify_suites must be non-empty".into()));
                }
                for s in &self.verify_suites {
                    if !SUITE_NAMES.contains(&s.as_str()) {
                        return Err(CliError::Config(format!(
                            "unknown suite '{s}', expected a subset of {SUITE_NAMES:?}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Writes `bytes` to `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(path)
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create output_dir {}: {e}", dir.display())))
}

fn grid_json(grid: &LogGrid) -> serde_json::Value {
    json!({
        "x_min": grid.x_min(),
        "x_max": grid.x_max(),
        "n": grid.len(),
        "dy": grid.dy(),
        "du": grid.du(),
    })
}

/// Summary of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mode: Mode,
    pub artifacts: Vec<PathBuf>,
    pub reports: Vec<(String, Vec<CheckReport>)>,
}

fn solution_json(sol: &SemigroupSolution) -> serde_json::Value {
    let xs = sol.datum.grid.xs();
    let states: Vec<_> = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(t, s)| {
            json!({
                "t": t.re,
                "re_u": s.values.iter().map(|v| v.re).collect::<Vec<_>>(),
                "im_u": s.values.iter().map(|v| v.im).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "x": xs, "states": states })
}

fn run_solve(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let spec = cfg.generator()?;
    let datum = cfg.datum.as_ref().expect("validated");
    let f = sample(datum, cfg.grid)?;
    let sol = solve_acp(&spec, &f, &cfg.times)?;
    let dir = &cfg.output_dir;
    let mut artifacts = Vec::new();
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            sol.write_csv(&mut buf)?;
            artifacts.push(write_atomic(dir, "solution.csv", &buf)?);
        }
        Format::Json => {
            let text = serde_json::to_string(&solution_json(&sol)).expect("serializes");
            artifacts.push(write_atomic(dir, "solution.json", text.as_bytes())?);
        }
    }
    let diagnostics: Vec<_> = sol
        .times
        .iter()
        .zip(&sol.diagnostics)
        .zip(&sol.states)
        .map(|((t, w), s)| json!({ "t": t.re, "warnings": w, "max_abs": s.max_abs(), "l2_norm": s.norm_l2() }))
        .collect();
    let manifest = json!({
        "mode": "solve",
        "spec": spec,
        "delta": spec.delta(),
        "grid": grid_json(&cfg.grid),
        "datum": datum,
        "datum_warnings": f.warnings,
        "times": cfg.times,
        "diagnostics": diagnostics,
        "outputs": artifact_names(&artifacts),
        "config": cfg,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    artifacts.push(write_manifest(dir, &manifest)?);
    Ok(RunOutcome {
        mode: Mode::Solve,
        artifacts,
        reports: Vec::new(),
    })
}

/// Lattice samples `(t, psi(t))` of the density of the semigroup symbol
/// `exp(w h(z))` along the spec's line `Re z = delta`.
pub fn semigroup_kernel(spec: &GeneratorSpec, grid: &LogGrid, w: f64) -> Result<Vec<(f64, ComplexScalar)>, Error> {
    let h = symbol_of_generator(spec)?.exp_scaled(ComplexScalar::new(w, 0.0));
    match hille_kernel(&h, grid, spec.delta())? {
        DensityOnR::Sampled { t0, dt, values } => Ok(values
            .into_iter()
            .enumerate()
            .map(|(m, v)| (t0 + m as f64 * dt, v))
            .collect()),
        _ => unreachable!("hille_kernel returns lattice samples"),
    }
}

fn kernel_csv(rows: &[(f64, ComplexScalar)]) -> Vec<u8> {
    let mut buf = Vec::new();
    writeln!(buf, "t,re_psi,im_psi").expect("write to Vec");
    for (t, v) in rows {
        writeln!(buf, "{t:?},{:?},{:?}", v.re, v.im).expect("write to Vec");
    }
    buf
}

fn run_kernel(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let spec = cfg.generator()?;
    let dir = &cfg.output_dir;
    let mut artifacts = Vec::new();
    let mut masses = Vec::new();
    let mut tables = Vec::new();
    for (i, &w) in cfg.times.iter().enumerate() {
        let rows = semigroup_kernel(&spec, &cfg.grid, w)?;
        let mass: ComplexScalar = rows.iter().map(|(_, v)| *v).sum::<ComplexScalar>() * cfg.grid.dy();
        masses.push(json!({ "time": w, "re_mass": mass.re, "im_mass": mass.im }));
        match cfg.format {
            Format::Csv => artifacts.push(write_atomic(dir, &format!("kernel_{i:03}.csv"), &kernel_csv(&rows))?),
            Format::Json => tables.push(json!({
                "time": w,
                "t": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
                "re_psi": rows.iter().map(|r| r.1.re).collect::<Vec<_>>(),
                "im_psi": rows.iter().map(|r| r.1.im).collect::<Vec<_>>(),
            })),
        }
    }
    if cfg.format == Format::Json {
        let text = serde_json::to_string(&json!({ "kernels": tables })).expect("serializes");
        artifacts.push(write_atomic(dir, "kernel.json", text.as_bytes())?);
    }
    let manifest = json!({
        "mode": "kernel",
        "spec": spec,
        "delta": spec.delta(),
        "grid": grid_json(&cfg.grid),
        "times": cfg.times,
        "diagnostics": { "kernel_mass": masses },
        "outputs": artifact_names(&artifacts),
        "config": cfg,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    artifacts.push(write_manifest(dir, &manifest)?);
    Ok(RunOutcome {
        mode: Mode::Kernel,
        artifacts,
        reports: Vec::new(),
    })
}

fn run_verify(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let dir = &cfg.output_dir;
    let mut artifacts = Vec::new();
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for suite in &cfg.verify_suites {
        let t = Instant::now();
        let r = run_suite(suite, cfg.seed)?;
        let pass = r.iter().all(|c| c.pass);
        let bundle = json!({
            "suite": suite,
            "pass": pass,
            "seed": cfg.seed,
            "wall_time_s": t.elapsed().as_secs_f64(),
            "reports": r,
        });
        let text = serde_json::to_string_pretty(&bundle).expect("serializes");
        artifacts.push(write_atomic(dir, &format!("verify_{suite}.json"), text.as_bytes())?);
        summary.push(json!({ "suite": suite, "pass": pass, "checks": r.len() }));
        reports.push((suite.clone(), r));
    }
    let manifest = json!({
        "mode": "verify",
        "grid": grid_json(&cfg.grid),
        "suites": summary,
        "outputs": artifact_names(&artifacts),
        "config": cfg,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    artifacts.push(write_manifest(dir, &manifest)?);
    Ok(RunOutcome {
        mode: Mode::Verify,
        artifacts,
        reports,
    })
}

fn artifact_names(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect()
}

fn write_manifest(dir: &Path, manifest: &serde_json::Value) -> Result<PathBuf, CliError> {
    let text = serde_json::to_string_pretty(manifest).expect("serializes");
    write_atomic(dir, "manifest.json", text.as_bytes())
}

/// Runs `cfg` in `mode`. Failed verification checks are reported through
/// [`RunOutcome::check_failure`], after all reports have been written.
pub fn run(mode: Mode, cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    cfg.validate(mode)?;
    prepare_dir(&cfg.output_dir)?;
    match mode {
        Mode::Solve => run_solve(cfg),
        Mode::Kernel => run_kernel(cfg),
        Mode::Verify => run_verify(cfg),
    }
}

impl RunOutcome {
    pub fn check_failure(&self) -> Option<CliError> {
        let all = self.reports.iter().flat_map(|(_, r)| r.iter());
        let total = all.clone().count();
        let failed = all.filter(|c| !c.pass).count();
        (failed > 0).then_some(CliError::ChecksFailed { failed, total })
    }
}
