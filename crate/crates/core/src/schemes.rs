//! Analog estimation schemes over the Gaussian MAC.
//!
//! Every sender applies the same affine map `f(u) = α·u + β` to its sample and
//! transmits the `d` resulting symbols, optionally repeated `m` times in
//! contiguous blocks. The receiver applies an affine estimator per block and
//! averages the block estimates. Leftover channel uses carry zeros.
//!
//! Bernoulli encoders are affine in the bit: `f(0) = β`, `f(1) = α + β`, so the
//! symmetric `±C` encoder is `α = 2C, β = −C`.

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelSpec, PowerAudit};
use crate::error::{Error, Result};
use crate::model::{GaussianLocationModel, ModelSpec, ProductBernoulliModel, Theta};

/// Sender map `u ↦ α·u + β`, coordinatewise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineEncoder {
    alpha: f64,
    beta: Vec<f64>,
}

impl AffineEncoder {
    pub fn new(alpha: f64, beta: Vec<f64>) -> Self {
        AffineEncoder { alpha, beta }
    }

    /// Binary encoder with symbols `f(0) = zero`, `f(1) = one` on every coordinate.
    pub fn binary(d: usize, zero: f64, one: f64) -> Self {
        AffineEncoder {
            alpha: one - zero,
            beta: vec![zero; d],
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn d(&self) -> usize {
        self.beta.len()
    }

    /// Symbols `(f(0), f(1))` of coordinate `j` for a binary alphabet.
    pub fn binary_symbols(&self, j: usize) -> (f64, f64) {
        (self.beta[j], self.alpha + self.beta[j])
    }
}

/// Receiver map `y ↦ gain·y + offset` applied to each repetition block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineEstimator {
    gain: f64,
    offset: Vec<f64>,
}

impl AffineEstimator {
    pub fn new(gain: f64, offset: Vec<f64>) -> Self {
        AffineEstimator { gain, offset }
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }
}

/// Regime selection for the repeated Bernoulli scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeMode {
    /// Regime keyed on the raw noise variance `σ_n² ≤ n^{3/2}P`, noise term
    /// in the formulas divided by `m`.
    #[default]
    Printed,
    /// Regime keyed on the effective noise `σ_n²/m`.
    Strict,
}

/// A common-encoder analog scheme bound to a model and a channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scheme {
    model: ModelSpec,
    channel: ChannelSpec,
    encoder: AffineEncoder,
    estimator: AffineEstimator,
    repetitions: usize,
    clamp: bool,
}

impl Scheme {
    pub fn new(
        model: ModelSpec,
        channel: ChannelSpec,
        encoder: AffineEncoder,
        estimator: AffineEstimator,
        repetitions: usize,
    ) -> Result<Self> {
        let d = model.d();
        if encoder.d() != d || estimator.offset.len() != d {
            return Err(Error::Argument(format!(
                "encoder/estimator offsets have lengths {}/{}, model dimension is {d}",
                encoder.d(),
                estimator.offset.len()
            )));
        }
        check_layout(d, channel.s(), repetitions)?;
        Ok(Scheme {
            model,
            channel,
            encoder,
            estimator,
            repetitions,
            clamp: false,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn channel(&self) -> &ChannelSpec {
        &self.channel
    }

    pub fn encoder(&self) -> &AffineEncoder {
        &self.encoder
    }

    pub fn estimator(&self) -> &AffineEstimator {
        &self.estimator
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn d(&self) -> usize {
        self.model.d()
    }

    pub fn clamped(&self) -> bool {
        self.clamp
    }

    /// Projects estimates onto Θ. Exploratory only: the closed-form risks hold
    /// for the unclamped estimator.
    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp = clamp;
        self
    }

    /// Block layout applied to one sample: `m` copies of `f(u)` followed by
    /// zeros on the unused channel uses.
    pub fn encode(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.d() {
            return Err(Error::Argument(format!(
                "sample has length {}, scheme expects {}",
                u.len(),
                self.d()
            )));
        }
        let mut x = vec![0.0; self.channel.s()];
        self.accumulate(u, &mut x);
        Ok(x)
    }

    /// Adds the encoding of `u` into the channel-use buffer `y`.
    #[inline]
    pub(crate) fn accumulate(&self, u: &[f64], y: &mut [f64]) {
        let d = self.d();
        let alpha = self.encoder.alpha;
        for block in y.chunks_exact_mut(d).take(self.repetitions) {
            for ((yj, &uj), &bj) in block.iter_mut().zip(u).zip(&self.encoder.beta) {
                *yj += alpha * uj + bj;
            }
        }
    }

    /// Averages the per-block affine estimates.
    pub fn estimate(&self, y: &[f64]) -> Result<Theta> {
        if y.len() != self.channel.s() {
            return Err(Error::Argument(format!(
                "received {} channel uses, scheme expects {}",
                y.len(),
                self.channel.s()
            )));
        }
        let d = self.d();
        let m = self.repetitions as f64;
        let mut est: Vec<f64> = (0..d)
            .map(|j| {
                let mean_y = (0..self.repetitions).map(|b| y[b * d + j]).sum::<f64>() / m;
                self.estimator.gain * mean_y + self.estimator.offset[j]
            })
            .collect();
        if self.clamp {
            clamp_to_space(&self.model, &mut est);
        }
        Ok(Theta::new(est))
    }

    /// Exact risk `E_θ‖θ̂(Y) − θ‖²` of this (unclamped) affine scheme.
    pub fn risk_at(&self, theta: &Theta) -> Result<f64> {
        self.model.check_theta(theta)?;
        let n = self.channel.n() as f64;
        let a = self.encoder.alpha;
        let g = self.estimator.gain;
        let noise = g * g * self.channel.noise_var() / self.repetitions as f64;
        let risk = theta
            .as_slice()
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let bias = g * (a * n * t + n * self.encoder.beta[j]) + self.estimator.offset[j] - t;
                let sample_var = match &self.model {
                    ModelSpec::Gaussian(m) => m.sample_var(),
                    ModelSpec::Bernoulli(_) => t * (1.0 - t),
                };
                bias * bias + g * g * a * a * n * sample_var + noise
            })
            .sum();
        Ok(risk)
    }

    pub fn check_power(&self) -> Result<PowerAudit> {
        channel::check_power(&self.channel, &self.model, &self.encoder, self.repetitions)
    }
}

fn check_layout(d: usize, s: usize, repetitions: usize) -> Result<()> {
    if s < d {
        return Err(Error::UnsupportedRegime { s, d });
    }
    if repetitions == 0 || repetitions * d > s {
        return Err(Error::Argument(format!(
            "{repetitions} repetitions of {d} coordinates do not fit in {s} channel uses"
        )));
    }
    Ok(())
}

fn clamp_to_space(model: &ModelSpec, est: &mut [f64]) {
    match model {
        ModelSpec::Gaussian(m) => {
            let norm = est.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = m.ball_radius();
            if norm > r {
                est.iter_mut().for_each(|v| *v *= r / norm);
            }
        }
        ModelSpec::Bernoulli(m) => {
            let (lo, hi) = m.coordinate_range();
            est.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        }
    }
}

fn repetitions_for(d: usize, s: usize) -> Result<usize> {
    if s < d {
        return Err(Error::UnsupportedRegime { s, d });
    }
    Ok(s / d)
}

/// Same scheme with an `m`-fold block repetition and estimate averaging.
pub fn apply_repetition(scheme: &Scheme, m: usize) -> Result<Scheme> {
    check_layout(scheme.d(), scheme.channel.s(), m)?;
    Ok(Scheme {
        repetitions: m,
        ..scheme.clone()
    })
}

// ---------------------------------------------------------------------------
// Gaussian location model
// ---------------------------------------------------------------------------

/// Encoder gain `√(P/(B² + σ²))`, the largest that meets the power budget
/// everywhere on the ball.
pub fn gaussian_minimax_alpha(model: &GaussianLocationModel, chan: &ChannelSpec) -> f64 {
    (chan.power_p() / (model.radius_b().powi(2) + model.sample_var())).sqrt()
}

/// Scaled-sample scheme with the sample-mean estimator `Y/(αn)`, repeated
/// `⌊s/d⌋` times.
pub fn gaussian_minimax_scheme(model: &GaussianLocationModel, chan: &ChannelSpec) -> Result<Scheme> {
    let d = model.d();
    let m = repetitions_for(d, chan.s())?;
    let alpha = gaussian_minimax_alpha(model, chan);
    Scheme::new(
        (*model).into(),
        *chan,
        AffineEncoder::new(alpha, vec![0.0; d]),
        AffineEstimator::new(1.0 / (alpha * chan.n() as f64), vec![0.0; d]),
        m,
    )
}

/// Minimax estimator for a fixed affine Gaussian encoder: `Y/(αn) − β/α`.
pub fn gaussian_affine_estimator(encoder: &AffineEncoder, n: usize) -> Result<AffineEstimator> {
    let a = encoder.alpha();
    if a == 0.0 {
        return Err(Error::Degenerate("encoder gain alpha is zero".into()));
    }
    Ok(AffineEstimator::new(
        1.0 / (a * n as f64),
        encoder.beta().iter().map(|b| -b / a).collect(),
    ))
}

/// Risk `(d/n)(σ² + σ_n²/(nα²))` of the minimax estimator for encoder gain `α`.
pub fn gaussian_affine_risk(d: usize, sample_var: f64, n: usize, noise_var: f64, alpha: f64) -> f64 {
    let n = n as f64;
    d as f64 / n * (sample_var + noise_var / (n * alpha * alpha))
}

/// Worst-case risk of [`gaussian_minimax_scheme`]:
/// `(dσ²/n)[1 + σ_n²/(⌊s/d⌋nP)·(1 + B²/σ²)]`.
pub fn gaussian_minimax_risk(model: &GaussianLocationModel, chan: &ChannelSpec) -> Result<f64> {
    let m = repetitions_for(model.d(), chan.s())? as f64;
    let n = chan.n() as f64;
    let var = model.sample_var();
    let b2 = model.radius_b().powi(2);
    Ok(model.d() as f64 * var / n
        * (1.0 + chan.noise_var() / (m * n * chan.power_p()) * (1.0 + b2 / var)))
}

/// Posterior-mean estimator under a `N(μ, b² I)` prior on θ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesEstimator {
    pub prior_mean: Theta,
    pub gain: f64,
    /// `αn` — the channel-output mean is `αnθ + nβ`.
    pub signal_scale: f64,
    /// `nβ`.
    pub shift: Vec<f64>,
    pub bayes_risk: f64,
}

impl BayesEstimator {
    /// `μ + gain·(Y − αnμ − nβ)`.
    pub fn estimate(&self, y: &[f64]) -> Result<Theta> {
        if y.len() != self.prior_mean.len() {
            return Err(Error::Argument(format!(
                "received {} channel uses, estimator expects {}",
                y.len(),
                self.prior_mean.len()
            )));
        }
        Ok(Theta::new(
            self.prior_mean
                .as_slice()
                .iter()
                .zip(y)
                .zip(&self.shift)
                .map(|((mu, yv), sh)| mu + self.gain * (yv - self.signal_scale * mu - sh))
                .collect(),
        ))
    }
}

/// Bayes estimator and Bayes risk for the Gaussian model with `s = d` under a
/// Gaussian prior.
pub fn gaussian_bayes_estimator(
    model: &GaussianLocationModel,
    chan: &ChannelSpec,
    prior_mean: &Theta,
    prior_var: f64,
    encoder: &AffineEncoder,
) -> Result<BayesEstimator> {
    let d = model.d();
    if chan.s() != d {
        return Err(Error::Argument(format!(
            "Bayes estimator needs s = d, got s = {} and d = {d}",
            chan.s()
        )));
    }
    if prior_mean.len() != d || encoder.d() != d {
        return Err(Error::Argument("prior mean and encoder must have length d".into()));
    }
    if !(prior_var > 0.0) {
        return Err(Error::Argument(format!("prior variance must be positive, got {prior_var}")));
    }
    let a = encoder.alpha();
    if a == 0.0 {
        return Err(Error::Degenerate("encoder gain alpha is zero".into()));
    }
    let n = chan.n() as f64;
    let b2 = prior_var;
    let noise = a * a * n * model.sample_var() + chan.noise_var();
    let gain = a * n * b2 / (a * a * n * n * b2 + noise);
    let bayes_risk = d as f64 * noise / (a * a * n * n + noise / b2);
    Ok(BayesEstimator {
        prior_mean: prior_mean.clone(),
        gain,
        signal_scale: a * n,
        shift: encoder.beta().iter().map(|b| n * b).collect(),
        bayes_risk,
    })
}

// ---------------------------------------------------------------------------
// Product Bernoulli model
// ---------------------------------------------------------------------------

/// `1/(2√n·C·(√n + 1))`: the estimator gain that makes the risk flat in θ.
pub fn bernoulli_alpha_lo(n: usize, c: f64) -> f64 {
    let rn = (n as f64).sqrt();
    1.0 / (2.0 * rn * c * (rn + 1.0))
}

/// `nC/(2(σ_n² + n²C²))`: the gain minimizing the risk at θ ∈ {0, 1}.
pub fn bernoulli_alpha_hi(n: usize, c: f64, noise_var: f64) -> f64 {
    let n = n as f64;
    n * c / (2.0 * (noise_var + n * n * c * c))
}

fn bernoulli_low_noise(n: usize, power_p: f64, noise_var: f64, m: usize, mode: RegimeMode) -> bool {
    let threshold = (n as f64).powf(1.5) * power_p;
    let keyed = match mode {
        RegimeMode::Printed => noise_var,
        RegimeMode::Strict => noise_var / m as f64,
    };
    keyed <= threshold
}

/// Estimator gain of the repeated Bernoulli minimax scheme.
pub fn bernoulli_minimax_alpha(n: usize, power_p: f64, noise_var: f64, m: usize, mode: RegimeMode) -> f64 {
    let c = power_p.sqrt();
    if bernoulli_low_noise(n, power_p, noise_var, m, mode) {
        bernoulli_alpha_lo(n, c)
    } else {
        bernoulli_alpha_hi(n, c, noise_var / m as f64)
    }
}

/// `±√P` encoder with estimator `α_M·Y + ½`, repeated `⌊s/d⌋` times.
pub fn bernoulli_minimax_scheme(
    model: &ProductBernoulliModel,
    chan: &ChannelSpec,
    mode: RegimeMode,
) -> Result<Scheme> {
    let d = model.d();
    let m = repetitions_for(d, chan.s())?;
    let c = chan.power_p().sqrt();
    let alpha = bernoulli_minimax_alpha(chan.n(), chan.power_p(), chan.noise_var(), m, mode);
    Scheme::new(
        (*model).into(),
        *chan,
        AffineEncoder::binary(d, -c, c),
        AffineEstimator::new(alpha, vec![0.5; d]),
        m,
    )
}

/// Closed-form worst-case risk of [`bernoulli_minimax_scheme`] (piecewise in
/// the noise regime).
pub fn bernoulli_minimax_risk(
    model: &ProductBernoulliModel,
    chan: &ChannelSpec,
    mode: RegimeMode,
) -> Result<f64> {
    let m = repetitions_for(model.d(), chan.s())?;
    let d = model.d() as f64;
    let n = chan.n() as f64;
    let p = chan.power_p();
    let noise = chan.noise_var() / m as f64;
    if bernoulli_low_noise(chan.n(), p, chan.noise_var(), m, mode) {
        Ok(d / (4.0 * (n.sqrt() + 1.0).powi(2)) * (1.0 + noise / (n * p)))
    } else {
        Ok(d / 4.0 / (1.0 + n * (n * p / noise)))
    }
}

/// Scalar risk of the `±C` encoder with estimator `αY + β` at θ:
/// `α²[4nC²θ(1−θ) + σ_n²] + [αnC(2θ−1) + β − θ]²`.
pub fn bernoulli_affine_risk(theta: f64, c: f64, n: usize, noise_var: f64, alpha: f64, beta: f64) -> f64 {
    let n = n as f64;
    let var = alpha * alpha * (4.0 * n * c * c * theta * (1.0 - theta) + noise_var);
    let bias = alpha * n * c * (2.0 * theta - 1.0) + beta - theta;
    var + bias * bias
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstCase {
    pub risk: f64,
    pub theta: f64,
}

/// Supremum over θ ∈ [0, 1] of [`bernoulli_affine_risk`]. The risk is a
/// quadratic in θ, so the maximum is at an endpoint or, when the quadratic
/// opens downward, at its vertex.
pub fn bernoulli_worstcase_risk_of(alpha: f64, beta: f64, c: f64, n: usize, noise_var: f64) -> WorstCase {
    let nf = n as f64;
    let k = 2.0 * alpha * nf * c - 1.0;
    let h = beta - alpha * nf * c;
    let spread = 4.0 * alpha * alpha * nf * c * c;
    let quad = k * k - spread;
    let lin = spread + 2.0 * k * h;
    let mut candidates = vec![0.0, 1.0];
    if quad < 0.0 {
        let vertex = -lin / (2.0 * quad);
        if (0.0..=1.0).contains(&vertex) {
            candidates.push(vertex);
        }
    }
    candidates
        .into_iter()
        .map(|theta| WorstCase {
            risk: bernoulli_affine_risk(theta, c, n, noise_var, alpha, beta),
            theta,
        })
        .fold(
            WorstCase {
                risk: f64::NEG_INFINITY,
                theta: 0.0,
            },
            |best, w| if w.risk > best.risk { w } else { best },
        )
}

/// Symmetric form of a binary encoder `f(0) = a`, `f(1) = b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalEncoder {
    /// Half-gap `C = (b − a)/2`; the symmetric encoder sends `±C`.
    pub c: f64,
    /// Amount `n(a + b)/2` the receiver adds back before estimating.
    pub receiver_shift: f64,
}

pub fn canonicalize_bernoulli_encoder(a: f64, b: f64, n: usize) -> CanonicalEncoder {
    CanonicalEncoder {
        c: (b - a) / 2.0,
        receiver_shift: n as f64 * (a + b) / 2.0,
    }
}

/// Rewrites a Bernoulli scheme to use the symmetric encoder, folding the
/// receiver shift into the estimator offset. The risk function is unchanged.
pub fn canonicalize_scheme(scheme: &Scheme) -> Result<Scheme> {
    if !matches!(scheme.model, ModelSpec::Bernoulli(_)) {
        return Err(Error::Argument(
            "canonicalization applies to binary (Bernoulli) encoders".into(),
        ));
    }
    let n = scheme.channel.n();
    let gain = scheme.estimator.gain;
    let mut beta = Vec::with_capacity(scheme.d());
    let mut offset = Vec::with_capacity(scheme.d());
    for j in 0..scheme.d() {
        let (a, b) = scheme.encoder.binary_symbols(j);
        let canon = canonicalize_bernoulli_encoder(a, b, n);
        beta.push(-canon.c);
        offset.push(scheme.estimator.offset[j] + gain * canon.receiver_shift);
    }
    Ok(Scheme {
        encoder: AffineEncoder::new(scheme.encoder.alpha, beta),
        estimator: AffineEstimator::new(gain, offset),
        ..scheme.clone()
    })
}

/// Minimax scheme for either model.
pub fn minimax_scheme(model: &ModelSpec, chan: &ChannelSpec, regime: RegimeMode) -> Result<Scheme> {
    match model {
        ModelSpec::Gaussian(m) => gaussian_minimax_scheme(m, chan),
        ModelSpec::Bernoulli(m) => bernoulli_minimax_scheme(m, chan, regime),
    }
}

/// Closed-form worst-case risk of [`minimax_scheme`].
pub fn minimax_risk(model: &ModelSpec, chan: &ChannelSpec, regime: RegimeMode) -> Result<f64> {
    match model {
        ModelSpec::Gaussian(m) => gaussian_minimax_risk(m, chan),
        ModelSpec::Bernoulli(m) => bernoulli_minimax_risk(m, chan, regime),
    }
}
