//! Closed-form lower bounds on worst-case risk.
//!
//! * Digital bounds assume each sender delivers `k` bits at the MAC sum
//!   capacity; they hold only while the bit budget is below `d`, which is
//!   reported through [`BoundResult::valid`] rather than as an error.
//! * Analog bounds hold for any scheme over the Gaussian MAC and depend on
//!   the model through the sub-Gaussian parameter ρ of its score.
//!
//! All capacities use `log₂`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::model::{bernoulli_rho, GaussianLocationModel, ModelSpec, ProductBernoulliModel};
use crate::schemes::{self, RegimeMode};

/// Number of ε values tried by the maximizing Bernoulli bounds: `k/200`, `k = 1..=99`.
pub const EPSILON_GRID_POINTS: usize = 99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Digital,
    Analog,
    GeneralMac,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundKind::Digital => f.write_str("digital"),
            BoundKind::Analog => f.write_str("analog"),
            BoundKind::GeneralMac => f.write_str("general-mac"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub value: f64,
    pub kind: BoundKind,
    pub valid: bool,
    pub validity_note: String,
}

impl BoundResult {
    fn unconditional(value: f64, kind: BoundKind) -> Self {
        BoundResult {
            value,
            kind,
            valid: true,
            validity_note: String::new(),
        }
    }
}

/// How the Bernoulli bounds pick the dense-box half-width ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    /// Use the model's ε.
    #[default]
    Model,
    /// Largest bound over the ε grid; any ε < ½ bounds the full box too.
    Maximize,
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(Error::Argument(format!("epsilon must lie in (0, 1/2), got {eps}")))
    }
}

fn epsilon_grid() -> impl Iterator<Item = f64> {
    (1..=EPSILON_GRID_POINTS).map(|k| k as f64 / 200.0)
}

fn digital_validity(d: usize, chan: &ChannelSpec) -> Result<(bool, String)> {
    let budget = chan.s() as f64 / chan.n() as f64 * chan.log2_one_plus_snr()?;
    let valid = budget < d as f64;
    let note = format!(
        "bit budget (s/n)*log2(1+nP/noise_var) = {budget:.6} {} d = {d}",
        if valid { "<" } else { ">=" }
    );
    Ok((valid, note))
}

/// Digital lower bound for the Gaussian location model:
/// `dσ² / ((s/d) log₂(1 + nP/σ_n²) + π²σ²/B²)`.
pub fn digital_lb_gaussian(model: &GaussianLocationModel, chan: &ChannelSpec) -> Result<BoundResult> {
    let d = model.d() as f64;
    let var = model.sample_var();
    let log_term = chan.log2_one_plus_snr()?;
    let value = d * var / (chan.s() as f64 / d * log_term + PI * PI * var / model.radius_b().powi(2));
    let (valid, validity_note) = digital_validity(model.d(), chan)?;
    Ok(BoundResult {
        value,
        kind: BoundKind::Digital,
        valid,
        validity_note,
    })
}

/// Digital lower bound for the product Bernoulli model at half-width `eps`:
/// `d / ((s/d)(½ − 2ε²)⁻² log₂(1 + nP/σ_n²) + π²/ε²)`.
pub fn digital_lb_bernoulli(
    model: &ProductBernoulliModel,
    chan: &ChannelSpec,
    eps: f64,
) -> Result<BoundResult> {
    check_epsilon(eps)?;
    let d = model.d() as f64;
    let log_term = chan.log2_one_plus_snr()?;
    let rho = bernoulli_rho(eps);
    let value = d / (chan.s() as f64 / d * rho * rho * log_term + PI * PI / (eps * eps));
    let (valid, validity_note) = digital_validity(model.d(), chan)?;
    Ok(BoundResult {
        value,
        kind: BoundKind::Digital,
        valid,
        validity_note,
    })
}

fn best_over_epsilon<F>(mut bound: F) -> Result<BoundResult>
where
    F: FnMut(f64) -> Result<BoundResult>,
{
    let mut best: Option<(f64, BoundResult)> = None;
    for eps in epsilon_grid() {
        let b = bound(eps)?;
        if best.as_ref().is_none_or(|(_, cur)| b.value > cur.value) {
            best = Some((eps, b));
        }
    }
    let (eps, mut b) = best.expect("epsilon grid is non-empty");
    if !b.validity_note.is_empty() {
        b.validity_note.push_str("; ");
    }
    b.validity_note.push_str(&format!("epsilon = {eps} maximizes the bound"));
    Ok(b)
}

/// [`digital_lb_bernoulli`] maximized over the ε grid.
pub fn digital_lb_bernoulli_max_eps(model: &ProductBernoulliModel, chan: &ChannelSpec) -> Result<BoundResult> {
    best_over_epsilon(|eps| digital_lb_bernoulli(model, chan, eps))
}

/// Lower bound for any scheme when the score is sub-Gaussian with parameter
/// `rho` and `[−B, B]^d ⊂ Θ`:
/// `(d/n) / ((s/d) ρ² log₂(1 + nP/σ_n²) + π²/(nB²))`.
pub fn analog_lb_general(d: usize, chan: &ChannelSpec, rho: f64, radius_b: f64) -> Result<BoundResult> {
    if d == 0 {
        return Err(Error::Argument("dimension d must be positive".into()));
    }
    if !(rho > 0.0) || !(radius_b > 0.0) {
        return Err(Error::Argument(format!(
            "rho and B must be positive, got rho = {rho}, B = {radius_b}"
        )));
    }
    let df = d as f64;
    let n = chan.n() as f64;
    let log_term = chan.log2_one_plus_snr()?;
    let value = df / n / (chan.s() as f64 / df * rho * rho * log_term + PI * PI / (n * radius_b * radius_b));
    Ok(BoundResult::unconditional(value, BoundKind::Analog))
}

/// Analog lower bound for the Gaussian location model:
/// `(dσ²/n) / ((s/d) log₂(1 + nP/σ_n²) + (σ²/B²)(π²/n))`.
pub fn analog_lb_gaussian(model: &GaussianLocationModel, chan: &ChannelSpec) -> Result<BoundResult> {
    let d = model.d() as f64;
    let n = chan.n() as f64;
    let var = model.sample_var();
    let log_term = chan.log2_one_plus_snr()?;
    let value = d * var / n / (chan.s() as f64 / d * log_term + var / model.radius_b().powi(2) * (PI * PI / n));
    Ok(BoundResult::unconditional(value, BoundKind::Analog))
}

/// Analog lower bound for the dense product Bernoulli model at half-width `eps`:
/// `(d/n) / ((s/d)(½ − 2ε²)⁻² log₂(1 + nP/σ_n²) + π²/(nε²))`.
pub fn analog_lb_bernoulli_at(model: &ProductBernoulliModel, chan: &ChannelSpec, eps: f64) -> Result<BoundResult> {
    check_epsilon(eps)?;
    let d = model.d() as f64;
    let n = chan.n() as f64;
    let log_term = chan.log2_one_plus_snr()?;
    let coeff = 1.0 / (0.5 - 2.0 * eps * eps).powi(2);
    let value = d / n / (chan.s() as f64 / d * coeff * log_term + PI * PI / (n * eps * eps));
    Ok(BoundResult::unconditional(value, BoundKind::Analog))
}

/// [`analog_lb_bernoulli_at`] with the model's ε.
pub fn analog_lb_bernoulli(model: &ProductBernoulliModel, chan: &ChannelSpec) -> Result<BoundResult> {
    analog_lb_bernoulli_at(model, chan, model.epsilon())
}

/// [`analog_lb_bernoulli_at`] maximized over the ε grid.
pub fn analog_lb_bernoulli_max_eps(model: &ProductBernoulliModel, chan: &ChannelSpec) -> Result<BoundResult> {
    best_over_epsilon(|eps| analog_lb_bernoulli_at(model, chan, eps))
}

/// Lower bound for a memoryless MAC limited by sum capacity `c_total` bits
/// per use: `(d/n) / (2(s/d) ρ² C_total + π²/(nB²))`.
pub fn general_mac_lb(d: usize, n: usize, s: usize, rho: f64, radius_b: f64, c_total: f64) -> Result<BoundResult> {
    if d == 0 || n == 0 || s == 0 {
        return Err(Error::Argument("d, n and s must be positive".into()));
    }
    if !(c_total >= 0.0) {
        return Err(Error::Argument(format!("sum capacity must be non-negative, got {c_total}")));
    }
    if !(rho > 0.0) || !(radius_b > 0.0) {
        return Err(Error::Argument(format!(
            "rho and B must be positive, got rho = {rho}, B = {radius_b}"
        )));
    }
    let df = d as f64;
    let nf = n as f64;
    let value = df / nf / (2.0 * s as f64 / df * rho * rho * c_total + PI * PI / (nf * radius_b * radius_b));
    Ok(BoundResult::unconditional(value, BoundKind::GeneralMac))
}

/// Model-dispatched analog bound.
pub fn analog_lb(model: &ModelSpec, chan: &ChannelSpec, eps_mode: EpsilonMode) -> Result<BoundResult> {
    match (model, eps_mode) {
        (ModelSpec::Gaussian(m), _) => analog_lb_gaussian(m, chan),
        (ModelSpec::Bernoulli(m), EpsilonMode::Model) => analog_lb_bernoulli(m, chan),
        (ModelSpec::Bernoulli(m), EpsilonMode::Maximize) => analog_lb_bernoulli_max_eps(m, chan),
    }
}

/// Model-dispatched digital bound.
pub fn digital_lb(model: &ModelSpec, chan: &ChannelSpec, eps_mode: EpsilonMode) -> Result<BoundResult> {
    match (model, eps_mode) {
        (ModelSpec::Gaussian(m), _) => digital_lb_gaussian(m, chan),
        (ModelSpec::Bernoulli(m), EpsilonMode::Model) => digital_lb_bernoulli(m, chan, m.epsilon()),
        (ModelSpec::Bernoulli(m), EpsilonMode::Maximize) => digital_lb_bernoulli_max_eps(m, chan),
    }
}

/// Achievability, analog bound and digital bound at one `(model, channel)` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonPoint {
    pub n: usize,
    pub analog_formula: f64,
    pub analog_lb: BoundResult,
    pub digital_lb: BoundResult,
}

impl ComparisonPoint {
    pub fn evaluate(
        model: &ModelSpec,
        chan: &ChannelSpec,
        regime: RegimeMode,
        eps_mode: EpsilonMode,
    ) -> Result<Self> {
        Ok(ComparisonPoint {
            n: chan.n(),
            analog_formula: schemes::minimax_risk(model, chan, regime)?,
            analog_lb: analog_lb(model, chan, eps_mode)?,
            digital_lb: digital_lb(model, chan, eps_mode)?,
        })
    }

    /// Analog achievability strictly below a valid digital lower bound.
    pub fn analog_beats_digital(&self) -> bool {
        self.digital_lb.valid && self.analog_formula < self.digital_lb.value
    }
}

/// Evaluates [`ComparisonPoint`] for every `n` in `n_values`, keeping the
/// rest of `chan_template`.
pub fn comparison_sweep(
    model: &ModelSpec,
    chan_template: &ChannelSpec,
    n_values: &[usize],
    regime: RegimeMode,
    eps_mode: EpsilonMode,
) -> Result<Vec<ComparisonPoint>> {
    n_values
        .iter()
        .map(|&n| ComparisonPoint::evaluate(model, &chan_template.with_n(n)?, regime, eps_mode))
        .collect()
}

/// First `n` in the sweep at which the analog scheme's worst-case risk falls
/// below a valid digital lower bound.
pub fn crossover_n(model: &ModelSpec, chan_template: &ChannelSpec, n_values: &[usize]) -> Result<Option<usize>> {
    for &n in n_values {
        let point = ComparisonPoint::evaluate(
            model,
            &chan_template.with_n(n)?,
            RegimeMode::Printed,
            EpsilonMode::Model,
        )?;
        if point.analog_beats_digital() {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chan(n: usize, s: usize, p: f64, nv: f64) -> ChannelSpec {
        ChannelSpec::new(n, s, p, nv).unwrap()
    }

    #[test]
    fn digital_gaussian_examples() {
        let m = GaussianLocationModel::new(1, 1.0, 1e8).unwrap();
        let b = digital_lb_gaussian(&m, &chan(1, 1, 1.0, 1.0)).unwrap();
        assert_relative_eq!(b.value, 1.0, max_relative = 1e-12);
        assert!(!b.valid);
        assert_eq!(b.kind, BoundKind::Digital);

        // oracle: 4/(log2(17) + 1), budget (4/16)·log2(17)
        let m = GaussianLocationModel::new(4, 1.0, PI).unwrap();
        let b = digital_lb_gaussian(&m, &chan(16, 4, 1.0, 1.0)).unwrap();
        assert_relative_eq!(b.value, 0.786_246_528_931_290_4, max_relative = 1e-12);
        assert!(b.valid, "{}", b.validity_note);
    }

    #[test]
    fn digital_gaussian_decays_like_inverse_log() {
        let m = GaussianLocationModel::new(2, 1.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=12u32 {
            let n = 10usize.pow(k);
            let v = digital_lb_gaussian(&m, &chan(n, 2, 1.0, 1.0)).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 0.2);
    }

    #[test]
    fn digital_bernoulli_examples() {
        assert_relative_eq!(bernoulli_rho(0.25).powi(2), 64.0 / 9.0, max_relative = 1e-15);
        let m = ProductBernoulliModel::full(1).unwrap();
        let b = digital_lb_bernoulli(&m, &chan(1, 1, 1.0, 1.0), 0.25).unwrap();
        assert_relative_eq!(b.value, 0.006_059_695_948_314_594, max_relative = 1e-12);
        let small = digital_lb_bernoulli(&m, &chan(1, 1, 1.0, 1.0), 1e-6).unwrap();
        assert!(small.value < 1e-12);
        assert!(digital_lb_bernoulli(&m, &chan(1, 1, 1.0, 1.0), 0.5).is_err());
        assert!(digital_lb_bernoulli(&m, &chan(1, 1, 1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn maximized_epsilon_dominates_fixed() {
        let m = ProductBernoulliModel::full(3).unwrap();
        let c = chan(50, 3, 1.0, 1.0);
        let fixed = digital_lb_bernoulli(&m, &c, 0.25).unwrap();
        let best = digital_lb_bernoulli_max_eps(&m, &c).unwrap();
        assert!(best.value >= fixed.value);
        assert!(best.validity_note.contains("maximizes"));
        let fixed = analog_lb_bernoulli(&m, &c).unwrap();
        let best = analog_lb_bernoulli_max_eps(&m, &c).unwrap();
        assert!(best.value >= fixed.value);
    }

    #[test]
    fn analog_general_examples() {
        let b = analog_lb_general(1, &chan(1, 1, 1.0, 1.0), 1.0, 1e8).unwrap();
        assert_relative_eq!(b.value, 1.0, max_relative = 1e-12);
        let b = analog_lb_general(2, &chan(100, 2, 0.1, 1.0), 10f64.powf(-0.5), 4.0).unwrap();
        assert_relative_eq!(b.value, 0.056_800_163_158_188_866, max_relative = 1e-12);
        assert!(analog_lb_general(1, &chan(1, 1, 1.0, 0.0), 1.0, 1.0).is_err());
    }

    #[test]
    fn analog_gaussian_examples() {
        let m = GaussianLocationModel::new(1, 10.0, 4.0).unwrap();
        let b = analog_lb_gaussian(&m, &chan(100, 1, 0.1, 1.0)).unwrap();
        assert_relative_eq!(b.value, 0.028_400_081_579_094_436, max_relative = 1e-12);

        // vanishing capacity: only the prior term remains
        let m = GaussianLocationModel::new(1, 1.0, 1.0).unwrap();
        let b = analog_lb_gaussian(&m, &chan(1, 1, 1.0, 1e300)).unwrap();
        assert_relative_eq!(b.value, 1.0 / (PI * PI), max_relative = 1e-12);
    }

    #[test]
    fn analog_bernoulli_examples() {
        let m = ProductBernoulliModel::new(1, 0.25, false).unwrap();
        let b = analog_lb_bernoulli(&m, &chan(1, 1, 1.0, 1.0)).unwrap();
        assert_relative_eq!(b.value, 0.006_059_695_948_314_594, max_relative = 1e-12);
        let b = analog_lb_bernoulli(&m, &chan(100, 1, 0.1, 1.0)).unwrap();
        assert_relative_eq!(b.value, 3.819_776_916_480_441e-4, max_relative = 1e-12);
    }

    #[test]
    fn general_mac_examples() {
        let b = general_mac_lb(1, 1, 1, 1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(b.value, 1.0 / (PI * PI), max_relative = 1e-15);
        let b = general_mac_lb(2, 4, 2, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(b.value, 0.111_921_895_701_176_07, max_relative = 1e-12);
        assert_eq!(b.kind, BoundKind::GeneralMac);
        assert!(general_mac_lb(2, 4, 2, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn doubling_n_halves_leading_factor() {
        // with the SNR term held fixed, only d/n and π²/(nB²) move
        let c1 = chan(10, 2, 0.2, 1.0);
        let c2 = chan(20, 2, 0.1, 1.0);
        let b1 = analog_lb_general(2, &c1, 1.0, 1e9).unwrap().value;
        let b2 = analog_lb_general(2, &c2, 1.0, 1e9).unwrap().value;
        assert_relative_eq!(b2, b1 / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn crossover_is_vacuous_without_valid_digital_rows() {
        // budget (s/n)·log2(1 + nP/σ²) ≥ d for every n below: no valid rows
        let m: ModelSpec = GaussianLocationModel::new(1, 10.0, 4.0).unwrap().into();
        let c = chan(1, 1, 1e6, 1.0);
        assert_eq!(crossover_n(&m, &c, &[1, 2, 3]).unwrap(), None);
    }
}
