//! Experiment configuration: TOML parsing and validation.
//!
//! Every diagnostic carries the line of the offending key.

use std::ops::Range;
use std::path::{Path, PathBuf};

use ota_core::bounds::EpsilonMode;
use ota_core::model::{ModelKind, DEFAULT_EPSILON};
use ota_core::montecarlo::{ModelFamily, SRule, SchemeFamily, ThetaMode, TrialPlan, DEFAULT_TRIALS};
use ota_core::schemes::RegimeMode;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
enum RawSRule {
    #[default]
    #[serde(rename = "s=d")]
    EqualsD,
    #[serde(rename = "explicit")]
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawThetaMode {
    #[default]
    Uniform,
    Fixed,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    channel: RawChannel,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    outputs: RawOutputs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: ModelKind,
    d: Spanned<Vec<Spanned<usize>>>,
    sample_var: Option<Spanned<f64>>,
    radius_b: Option<Spanned<f64>>,
    epsilon: Option<Spanned<f64>>,
    #[serde(default)]
    epsilon_mode: EpsilonMode,
    #[serde(default)]
    regime_mode: RegimeMode,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    power_p: Spanned<f64>,
    noise_var: Spanned<f64>,
    s_rule: Option<Spanned<RawSRule>>,
    s: Option<Spanned<usize>>,
    n: Spanned<Vec<Spanned<usize>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    trials: Option<Spanned<usize>>,
    #[serde(default)]
    seed: u64,
    theta_mode: Option<Spanned<RawThetaMode>>,
    theta_fill: Option<Spanned<f64>>,
    parallel_width: Option<Spanned<usize>>,
    #[serde(default)]
    bounds_only: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    path: Option<PathBuf>,
    #[serde(default)]
    format: Format,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub family: SchemeFamily,
    pub model_kind: ModelKind,
    pub d_values: Vec<usize>,
    pub n_values: Vec<usize>,
    pub epsilon_mode: EpsilonMode,
    pub trials: usize,
    pub seed: u64,
    pub theta_mode: ThetaMode,
    pub parallel_width: usize,
    pub bounds_only: bool,
    pub output_path: PathBuf,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn plan(&self) -> TrialPlan {
        TrialPlan::new(self.trials, self.theta_mode.clone(), self.seed).with_parallel_width(self.parallel_width)
    }

    /// Channel uses at dimension `d`.
    pub fn s_at(&self, d: usize) -> usize {
        self.family.s_rule.resolve(d)
    }
}

/// Command-line overrides applied on top of a parsed file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub parallel_width: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            if trials == 0 {
                return Err(CliError::Config("--trials must be at least 1".into()));
            }
            cfg.trials = trials;
        }
        if let Some(width) = self.parallel_width {
            if width == 0 {
                return Err(CliError::Config("--parallel-width must be at least 1".into()));
            }
            cfg.parallel_width = width;
        }
        if let Some(format) = self.format {
            cfg.format = format;
            cfg.output_path.set_extension(extension(format));
        }
        if let Some(dir) = &self.out_dir {
            let name = cfg.output_path.file_name().map(PathBuf::from).unwrap_or_default();
            cfg.output_path = dir.join(name);
        }
        Ok(())
    }
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

struct Diagnostics<'a> {
    origin: &'a str,
    src: &'a str,
}

impl Diagnostics<'_> {
    fn line(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.src.len());
        self.src[..end].matches('\n').count() + 1
    }

    fn at<T>(&self, spanned: &Spanned<T>, msg: impl AsRef<str>) -> CliError {
        CliError::Config(format!(
            "{}:{}: {}",
            self.origin,
            self.line(&spanned.span()),
            msg.as_ref()
        ))
    }

    fn general(&self, msg: impl AsRef<str>) -> CliError {
        CliError::Config(format!("{}: {}", self.origin, msg.as_ref()))
    }
}

/// Reads and validates a config file.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: cannot read config: {e}", path.display())))?;
    let stem = path.file_stem().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"));
    parse(&src, &path.display().to_string(), &stem)
}

/// Parses config text. `origin` names the source in diagnostics; `stem` is the
/// default output file stem.
pub fn parse(src: &str, origin: &str, stem: &Path) -> Result<ExperimentConfig, CliError> {
    let diag = Diagnostics { origin, src };
    let raw: RawConfig = toml::from_str(src).map_err(|e| {
        let msg = e.message().trim().to_string();
        match e.span() {
            Some(span) => CliError::Config(format!("{origin}:{}: {msg}", diag.line(&span))),
            None => diag.general(msg),
        }
    })?;
    validate(raw, &diag, stem)
}

fn positive(diag: &Diagnostics, v: &Spanned<f64>, name: &str) -> Result<f64, CliError> {
    let x = *v.get_ref();
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(diag.at(v, format!("{name} must be positive and finite, got {x}")))
    }
}

fn grid(diag: &Diagnostics, list: Spanned<Vec<Spanned<usize>>>, name: &str) -> Result<Vec<usize>, CliError> {
    if list.get_ref().is_empty() {
        return Err(diag.at(&list, format!("{name} list is empty")));
    }
    list.into_inner()
        .into_iter()
        .map(|v| {
            if *v.get_ref() == 0 {
                Err(diag.at(&v, format!("{name} values must be at least 1")))
            } else {
                Ok(v.into_inner())
            }
        })
        .collect()
}

fn validate(raw: RawConfig, diag: &Diagnostics, stem: &Path) -> Result<ExperimentConfig, CliError> {
    let RawConfig {
        model,
        channel,
        run,
        outputs,
    } = raw;

    let family_model = match model.kind {
        ModelKind::Gaussian => {
            if let Some(e) = &model.epsilon {
                return Err(diag.at(e, "epsilon applies to bernoulli models only"));
            }
            let var = model
                .sample_var
                .as_ref()
                .ok_or_else(|| diag.general("gaussian model needs sample_var"))?;
            let b = model
                .radius_b
                .as_ref()
                .ok_or_else(|| diag.general("gaussian model needs radius_b"))?;
            ModelFamily::Gaussian {
                sample_var: positive(diag, var, "sample_var")?,
                radius_b: positive(diag, b, "radius_b")?,
            }
        }
        ModelKind::Bernoulli => {
            for (field, name) in [(&model.sample_var, "sample_var"), (&model.radius_b, "radius_b")] {
                if let Some(v) = field {
                    return Err(diag.at(v, format!("{name} applies to gaussian models only")));
                }
            }
            let epsilon = match &model.epsilon {
                Some(e) if *e.get_ref() > 0.0 && *e.get_ref() < 0.5 => *e.get_ref(),
                Some(e) => return Err(diag.at(e, format!("epsilon must lie in (0, 1/2), got {}", e.get_ref()))),
                None => DEFAULT_EPSILON,
            };
            ModelFamily::Bernoulli { epsilon }
        }
    };
    let d_values = grid(diag, model.d, "d")?;

    let power_p = positive(diag, &channel.power_p, "power_p")?;
    let noise_var = *channel.noise_var.get_ref();
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(diag.at(
            &channel.noise_var,
            format!("noise_var must be non-negative and finite, got {noise_var}"),
        ));
    }
    let rule = channel.s_rule.as_ref().map(|r| *r.get_ref()).unwrap_or_default();
    let s_rule = match (rule, &channel.s) {
        (RawSRule::EqualsD, None) => SRule::EqualsD,
        (RawSRule::EqualsD, Some(s)) => {
            return Err(diag.at(s, "s is only read when s_rule = \"explicit\""));
        }
        (RawSRule::Explicit, None) => {
            let r = channel.s_rule.as_ref().expect("explicit rule was written");
            return Err(diag.at(r, "s_rule = \"explicit\" needs an s value"));
        }
        (RawSRule::Explicit, Some(s)) if *s.get_ref() == 0 => {
            return Err(diag.at(s, "s must be at least 1"));
        }
        (RawSRule::Explicit, Some(s)) => {
            if !run.bounds_only {
                if let Some(&d) = d_values.iter().find(|&&d| d > *s.get_ref()) {
                    return Err(diag.at(
                        s,
                        format!(
                            "s = {} is smaller than d = {d}; scheme runs need s >= d (set bounds_only = true for bounds alone)",
                            s.get_ref()
                        ),
                    ));
                }
            }
            SRule::Explicit(*s.get_ref())
        }
    };
    let n_values = grid(diag, channel.n, "n")?;

    let trials = match &run.trials {
        Some(t) if *t.get_ref() == 0 => return Err(diag.at(t, "trials must be at least 1")),
        Some(t) => *t.get_ref(),
        None => DEFAULT_TRIALS,
    };
    let parallel_width = match &run.parallel_width {
        Some(w) if *w.get_ref() == 0 => return Err(diag.at(w, "parallel_width must be at least 1")),
        Some(w) => *w.get_ref(),
        None => 1,
    };
    let mode = run.theta_mode.as_ref().map(|m| *m.get_ref()).unwrap_or_default();
    let theta_mode = match (mode, &run.theta_fill) {
        (RawThetaMode::Uniform, None) => ThetaMode::Uniform,
        (RawThetaMode::Uniform, Some(f)) => {
            return Err(diag.at(f, "theta_fill is only read when theta_mode = \"fixed\""));
        }
        (RawThetaMode::Fixed, None) => {
            let m = run.theta_mode.as_ref().expect("fixed mode was written");
            return Err(diag.at(m, "theta_mode = \"fixed\" needs theta_fill"));
        }
        (RawThetaMode::Fixed, Some(f)) => {
            let c = *f.get_ref();
            let inside = match family_model {
                // c·1 has norm |c|√d, inside the ball of radius B√d iff |c| <= B
                ModelFamily::Gaussian { radius_b, .. } => c.abs() <= radius_b,
                ModelFamily::Bernoulli { .. } => (0.0..=1.0).contains(&c),
            };
            if !inside {
                return Err(diag.at(f, format!("theta_fill = {c} puts theta outside the parameter space")));
            }
            ThetaMode::Constant(c)
        }
    };

    let format = outputs.format;
    let output_path = outputs
        .path
        .unwrap_or_else(|| stem.with_extension(extension(format)));

    Ok(ExperimentConfig {
        family: SchemeFamily {
            model: family_model,
            power_p,
            noise_var,
            s_rule,
            regime: model.regime_mode,
        },
        model_kind: model.kind,
        d_values,
        n_values,
        epsilon_mode: model.epsilon_mode,
        trials,
        seed: run.seed,
        theta_mode,
        parallel_width,
        bounds_only: run.bounds_only,
        output_path,
        format,
    })
}
