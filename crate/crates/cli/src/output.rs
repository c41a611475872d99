//! Result rows and their CSV / JSON encodings.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use ota_core::bounds;
use ota_core::model::ModelKind;
use ota_core::montecarlo;
use ota_core::schemes;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

pub const CSV_HEADER: &str = "model_kind,d,n,s,power_p,noise_var,series,value,std_error,valid";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    AnalogSim,
    AnalogFormula,
    AnalogLb,
    DigitalLb,
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Series::AnalogSim => "analog_sim",
            Series::AnalogFormula => "analog_formula",
            Series::AnalogLb => "analog_lb",
            Series::DigitalLb => "digital_lb",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRow {
    pub model_kind: ModelKind,
    pub d: usize,
    pub n: usize,
    pub s: usize,
    pub power_p: f64,
    pub noise_var: f64,
    pub series: Series,
    pub value: f64,
    /// Monte Carlo rows only.
    pub std_error: Option<f64>,
    pub valid: bool,
}

/// All rows of an experiment, `d` outermost, then `n`, then series.
pub fn build_rows(cfg: &ExperimentConfig) -> Result<Vec<OutputRow>, CliError> {
    let family = &cfg.family;
    let sims = if cfg.bounds_only {
        Vec::new()
    } else {
        montecarlo::sweep(family, &cfg.n_values, &cfg.d_values, &cfg.plan())?
    };
    let mut sims = sims.into_iter();
    let mut rows = Vec::new();
    for &d in &cfg.d_values {
        let model = family.model_at(d)?;
        for &n in &cfg.n_values {
            let chan = family.channel_at(d, n)?;
            let s = chan.s();
            let row = |series, value, std_error, valid| OutputRow {
                model_kind: cfg.model_kind,
                d,
                n,
                s,
                power_p: family.power_p,
                noise_var: family.noise_var,
                series,
                value,
                std_error,
                valid,
            };
            if !cfg.bounds_only {
                let point = sims.next().expect("one sweep point per grid point");
                debug_assert_eq!((point.d, point.n), (d, n));
                rows.push(row(
                    Series::AnalogSim,
                    point.result.mean_sq_error,
                    Some(point.result.std_error),
                    true,
                ));
            }
            if s >= d {
                let formula = schemes::minimax_risk(&model, &chan, family.regime)?;
                rows.push(row(Series::AnalogFormula, formula, None, true));
            }
            let analog = bounds::analog_lb(&model, &chan, cfg.epsilon_mode)?;
            rows.push(row(Series::AnalogLb, analog.value, None, analog.valid));
            let digital = bounds::digital_lb(&model, &chan, cfg.epsilon_mode)?;
            rows.push(row(Series::DigitalLb, digital.value, None, digital.valid));
        }
    }
    if let Some(bad) = rows
        .iter()
        .find(|r| !r.value.is_finite() || !r.std_error.is_none_or(f64::is_finite))
    {
        return Err(CliError::Numeric(ota_core::Error::Degenerate(format!(
            "non-finite {} value at d = {}, n = {}",
            bad.series, bad.d, bad.n
        ))));
    }
    Ok(rows)
}

/// Full-precision float: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv(rows: &[OutputRow]) -> String {
    let mut out = String::with_capacity(96 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.model_kind,
            r.d,
            r.n,
            r.s,
            r.power_p,
            r.noise_var,
            r.series,
            fmt_float(r.value),
            r.std_error.map(fmt_float).unwrap_or_default(),
            r.valid
        );
    }
    out
}

pub fn to_json(rows: &[OutputRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_path: String,
    pub seed: u64,
    pub rows: usize,
    pub output: String,
    pub wall_time_seconds: f64,
    pub config: &'a ExperimentConfig,
}

/// `results.csv` → `results.meta.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("meta.json")
}
