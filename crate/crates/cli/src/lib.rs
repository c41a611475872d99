//! Experiment runner behind the `ota-sim` binary.
//!
//! A TOML file describes a model, a channel and an `(d, n)` grid; `run`
//! writes achievability, simulation and lower-bound series as CSV (or JSON)
//! with a JSON metadata sidecar, `compare` prints them as a table and
//! `validate` only checks the file.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ota_core::bounds::ComparisonPoint;
use thiserror::Error;

pub mod config;
pub mod output;

pub use config::{ExperimentConfig, Format, Overrides};
pub use output::{OutputRow, Series};

/// `compare` flags rows where achievability exceeds the analog bound by more
/// than this multiple of `log₂(1 + nP/σ_n²)`.
pub const LOG_GAP_FACTOR: f64 = 2.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(#[from] ota_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = config::load(path)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<OutputRow>,
    pub output: std::path::PathBuf,
    pub sidecar: std::path::PathBuf,
}

/// Evaluates the grid and writes the rows and the metadata sidecar.
pub fn run(cfg: &ExperimentConfig, config_path: &Path) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let rows = output::build_rows(cfg)?;
    let body = match cfg.format {
        Format::Csv => output::to_csv(&rows),
        Format::Json => output::to_json(&rows),
    };
    let out = cfg.output_path.clone();
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            context: format!("cannot create {}", dir.display()),
            source,
        })?;
    }
    write(&out, &body)?;
    let sidecar = output::sidecar_path(&out);
    let meta = output::Sidecar {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_path: config_path.display().to_string(),
        seed: cfg.seed,
        rows: rows.len(),
        output: out.display().to_string(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        config: cfg,
    };
    let mut meta_text = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
    meta_text.push('\n');
    write(&sidecar, &meta_text)?;
    Ok(RunReport {
        rows,
        output: out,
        sidecar,
    })
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|source| CliError::Io {
        context: format!("cannot write {}", path.display()),
        source,
    })
}

/// Marker printed in place of a digital bound whose bit-budget precondition fails.
pub const INVALID_MARKER: &str = "invalid*";

/// Achievability against both bounds, one line per `(d, n)`.
pub fn compare(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let family = &cfg.family;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4} {:>9} {:>6} {:>13} {:>13} {:>13} {:>11} {:>11} {:>11}  flags",
        "d", "n", "s", "analog", "analog_lb", "digital_lb", "analog/lb", "digital/an", "log2(1+snr)"
    );
    let mut invalid = 0;
    for &d in &cfg.d_values {
        let model = family.model_at(d)?;
        for &n in &cfg.n_values {
            let chan = family.channel_at(d, n)?;
            let s = chan.s();
            let log = chan.log2_one_plus_snr()?;
            let (formula, lb, digital) = if s >= d {
                let p = ComparisonPoint::evaluate(&model, &chan, family.regime, cfg.epsilon_mode)?;
                (Some(p.analog_formula), p.analog_lb, p.digital_lb)
            } else {
                (
                    None,
                    ota_core::bounds::analog_lb(&model, &chan, cfg.epsilon_mode)?,
                    ota_core::bounds::digital_lb(&model, &chan, cfg.epsilon_mode)?,
                )
            };
            let num = |x: Option<f64>| x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "n/a".into());
            let ratio = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
            let gap = formula.map(|f| f / lb.value);
            let digital_text = if digital.valid {
                num(Some(digital.value))
            } else {
                invalid += 1;
                INVALID_MARKER.to_string()
            };
            let digital_ratio = if digital.valid {
                ratio(formula.map(|f| digital.value / f))
            } else {
                INVALID_MARKER.to_string()
            };
            let mut flags = Vec::new();
            if gap.is_some_and(|g| g > LOG_GAP_FACTOR * log) {
                flags.push("log-gap");
            }
            if digital.valid && formula.is_some_and(|f| f < digital.value) {
                flags.push("analog<digital");
            }
            let _ = writeln!(
                out,
                "{d:>4} {n:>9} {s:>6} {:>13} {:>13} {:>13} {:>11} {:>11} {:>11.4}  {}",
                num(formula),
                num(Some(lb.value)),
                digital_text,
                ratio(gap),
                digital_ratio,
                log,
                flags.join(",")
            );
        }
    }
    if invalid > 0 {
        let _ = writeln!(
            out,
            "{INVALID_MARKER} digital bound not applicable: bit budget (s/n)*log2(1+nP/noise_var) >= d"
        );
    }
    let _ = writeln!(
        out,
        "log-gap: analog/lb > {LOG_GAP_FACTOR}*log2(1+nP/noise_var)"
    );
    Ok(out)
}

/// One-paragraph summary of a valid config.
pub fn describe(cfg: &ExperimentConfig) -> String {
    let points = cfg.d_values.len() * cfg.n_values.len();
    format!(
        "ok: {} model, d in {:?}, n in {:?}, {points} grid points, {} trials per point, seed {}, output {}\n",
        cfg.model_kind,
        cfg.d_values,
        cfg.n_values,
        if cfg.bounds_only { 0 } else { cfg.trials },
        cfg.seed,
        cfg.output_path.display()
    )
}
