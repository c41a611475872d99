//! Seeded Monte Carlo estimation of scheme risk over the simulated channel.
//!
//! Trial `i` draws all of its randomness from a ChaCha8 stream seeded with the
//! plan's master seed and switched to stream `i`, so results depend only on
//! `(plan, scheme)` and never on how trials are scheduled across threads.
//! Per-trial errors are reduced in trial-index order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::model::{GaussianLocationModel, ModelSpec, ProductBernoulliModel, Theta};
use crate::schemes::{self, RegimeMode, Scheme};

/// Trial count of the reference simulation protocol.
pub const DEFAULT_TRIALS: usize = 100;

/// Where the true parameter comes from in each trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMode {
    /// The same θ in every trial.
    Fixed(Theta),
    /// θ = c·1 in whatever dimension the scheme has.
    Constant(f64),
    /// A fresh uniform draw from Θ in every trial. The mean is then the
    /// average risk, which sits at or below the worst case.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialPlan {
    pub trials: usize,
    pub theta_mode: ThetaMode,
    pub master_seed: u64,
    /// Worker threads; has no effect on the result.
    pub parallel_width: usize,
}

impl TrialPlan {
    pub fn new(trials: usize, theta_mode: ThetaMode, master_seed: u64) -> Self {
        TrialPlan {
            trials,
            theta_mode,
            master_seed,
            parallel_width: 1,
        }
    }

    pub fn with_parallel_width(mut self, width: usize) -> Self {
        self.parallel_width = width;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskResult {
    pub mean_sq_error: f64,
    /// Sample standard deviation of the per-trial squared error over `√T`;
    /// zero when `T = 1`.
    pub std_error: f64,
    pub trials: usize,
    pub theta_mode: ThetaMode,
    /// Set when `T = 1` and no spread can be estimated.
    pub degenerate: bool,
}

impl RiskResult {
    /// `|mean − value| ≤ k·std_error`.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean_sq_error - value).abs() <= k * self.std_error
    }
}

/// Random stream of trial `index` under `master_seed`.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Seed of one `(d, n)` grid point in a [`sweep`].
pub fn point_seed(master_seed: u64, d: usize, n: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(((d as u64) << 40) ^ n as u64))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One realization: `n` samples at `theta`, encoded, superposed over `s`
/// channel uses with fresh noise, then estimated. Returns `‖θ̂ − θ‖²`.
pub fn run_trial<R: rand::Rng + ?Sized>(scheme: &Scheme, theta: &Theta, rng: &mut R) -> Result<f64> {
    scheme.model().check_theta(theta)?;
    let mut u = vec![0.0; scheme.d()];
    let mut y = vec![0.0; scheme.channel().s()];
    simulate(scheme, theta.as_slice(), rng, &mut u, &mut y)
}

fn simulate<R: rand::Rng + ?Sized>(
    scheme: &Scheme,
    theta: &[f64],
    rng: &mut R,
    u: &mut [f64],
    y: &mut [f64],
) -> Result<f64> {
    let model = scheme.model();
    let chan = scheme.channel();
    y.fill(0.0);
    for _ in 0..chan.n() {
        model.sample_into(theta, rng, u);
        scheme.accumulate(u, y);
    }
    chan.add_noise(y, rng);
    let est = scheme.estimate(y)?;
    Ok(est
        .as_slice()
        .iter()
        .zip(theta)
        .map(|(e, t)| (e - t) * (e - t))
        .sum())
}

fn resolve_fixed(scheme: &Scheme, mode: &ThetaMode) -> Result<Option<Theta>> {
    let theta = match mode {
        ThetaMode::Fixed(t) => t.clone(),
        ThetaMode::Constant(c) => Theta::filled(scheme.d(), *c),
        ThetaMode::Uniform => return Ok(None),
    };
    scheme.model().check_theta(&theta)?;
    Ok(Some(theta))
}

/// Mean squared error and its standard error over `plan.trials` trials.
pub fn estimate_risk(scheme: &Scheme, plan: &TrialPlan) -> Result<RiskResult> {
    if plan.trials == 0 {
        return Err(Error::Argument("trial count must be positive".into()));
    }
    if plan.parallel_width == 0 {
        return Err(Error::Argument("parallel width must be positive".into()));
    }
    let fixed = resolve_fixed(scheme, &plan.theta_mode)?;
    let one = |index: usize| -> Result<f64> {
        let mut rng = trial_rng(plan.master_seed, index as u64);
        let drawn;
        let theta = match &fixed {
            Some(t) => t.as_slice(),
            None => {
                drawn = scheme.model().sample_theta_uniform(&mut rng);
                drawn.as_slice()
            }
        };
        let mut u = vec![0.0; scheme.d()];
        let mut y = vec![0.0; scheme.channel().s()];
        simulate(scheme, theta, &mut rng, &mut u, &mut y)
    };

    let errors: Vec<f64> = if plan.parallel_width == 1 {
        (0..plan.trials).map(one).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.parallel_width)
            .build()
            .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..plan.trials).into_par_iter().map(one).collect::<Result<_>>())?
    };
    Ok(summarize(&errors, plan.theta_mode.clone()))
}

fn summarize(errors: &[f64], theta_mode: ThetaMode) -> RiskResult {
    let t = errors.len();
    let mean = errors.iter().sum::<f64>() / t as f64;
    let std_error = if t > 1 {
        let ss: f64 = errors.iter().map(|e| (e - mean) * (e - mean)).sum();
        (ss / (t - 1) as f64).sqrt() / (t as f64).sqrt()
    } else {
        0.0
    };
    RiskResult {
        mean_sq_error: mean,
        std_error,
        trials: t,
        theta_mode,
        degenerate: t == 1,
    }
}

/// How the channel-use count follows the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SRule {
    /// `s = d`.
    EqualsD,
    Explicit(usize),
}

impl SRule {
    pub fn resolve(&self, d: usize) -> usize {
        match self {
            SRule::EqualsD => d,
            SRule::Explicit(s) => *s,
        }
    }
}

/// Model parameters shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Gaussian { sample_var: f64, radius_b: f64 },
    /// Achievability runs on the full box; ε feeds the bounds.
    Bernoulli { epsilon: f64 },
}

/// The minimax scheme family over a `(d, n)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeFamily {
    pub model: ModelFamily,
    pub power_p: f64,
    pub noise_var: f64,
    pub s_rule: SRule,
    pub regime: RegimeMode,
}

impl SchemeFamily {
    pub fn model_at(&self, d: usize) -> Result<ModelSpec> {
        Ok(match self.model {
            ModelFamily::Gaussian { sample_var, radius_b } => {
                GaussianLocationModel::new(d, sample_var, radius_b)?.into()
            }
            ModelFamily::Bernoulli { epsilon } => ProductBernoulliModel::new(d, epsilon, true)?.into(),
        })
    }

    pub fn channel_at(&self, d: usize, n: usize) -> Result<ChannelSpec> {
        ChannelSpec::new(n, self.s_rule.resolve(d), self.power_p, self.noise_var)
    }

    pub fn build(&self, d: usize, n: usize) -> Result<Scheme> {
        schemes::minimax_scheme(&self.model_at(d)?, &self.channel_at(d, n)?, self.regime)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub d: usize,
    pub n: usize,
    pub s: usize,
    pub result: RiskResult,
}

/// [`estimate_risk`] at every `(d, n)` pair, `d` outermost. Each point runs
/// under its own seed from [`point_seed`].
pub fn sweep(family: &SchemeFamily, n_values: &[usize], d_values: &[usize], plan: &TrialPlan) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::with_capacity(n_values.len() * d_values.len());
    for &d in d_values {
        for &n in n_values {
            let scheme = family.build(d, n)?;
            let point_plan = plan.clone().with_seed(point_seed(plan.master_seed, d, n));
            points.push(SweepPoint {
                d,
                n,
                s: scheme.channel().s(),
                result: estimate_risk(&scheme, &point_plan)?,
            });
        }
    }
    Ok(points)
}
