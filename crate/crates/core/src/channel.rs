//! Gaussian multiple-access channel: superposition of `n` senders plus
//! i.i.d. Gaussian noise over `s` channel uses, the per-sender average power
//! audit, and the Shannon-capacity quantities used by the digital bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Theta};
use crate::schemes::AffineEncoder;

/// Relative slack allowed by the power audit.
pub const POWER_TOLERANCE: f64 = 1e-9;

/// Size of the random θ grid used as a safety net by [`check_power`].
const POWER_GRID_POINTS: usize = 1000;
const POWER_GRID_SEED: u64 = 0x0070_6f77_6572;

/// Parameters of a Gaussian MAC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelSpec {
    n: usize,
    s: usize,
    power_p: f64,
    noise_var: f64,
}

impl ChannelSpec {
    /// `noise_var = 0` is accepted as a noiseless simulation limit; the
    /// capacity formulas reject it.
    pub fn new(n: usize, s: usize, power_p: f64, noise_var: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("sender count n must be positive".into()));
        }
        if s == 0 {
            return Err(Error::Argument("channel uses s must be positive".into()));
        }
        if !(power_p > 0.0 && power_p.is_finite()) {
            return Err(Error::Argument(format!(
                "power P must be positive and finite, got {power_p}"
            )));
        }
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(Error::Argument(format!(
                "noise variance must be non-negative and finite, got {noise_var}"
            )));
        }
        Ok(ChannelSpec {
            n,
            s,
            power_p,
            noise_var,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn power_p(&self) -> f64 {
        self.power_p
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.s, self.power_p, self.noise_var)
    }

    pub fn with_s(&self, s: usize) -> Result<Self> {
        Self::new(self.n, s, self.power_p, self.noise_var)
    }

    pub fn with_noise_var(&self, noise_var: f64) -> Result<Self> {
        Self::new(self.n, self.s, self.power_p, noise_var)
    }

    /// Receiver SNR of the sum, `nP/σ_n²`.
    pub fn sum_snr(&self) -> Result<f64> {
        if self.noise_var == 0.0 {
            return Err(Error::InfiniteCapacity);
        }
        Ok(self.n as f64 * self.power_p / self.noise_var)
    }

    /// `log₂(1 + nP/σ_n²)`.
    pub fn log2_one_plus_snr(&self) -> Result<f64> {
        Ok(self.sum_snr()?.ln_1p() / std::f64::consts::LN_2)
    }

    /// Sum capacity per channel use, `½ log₂(1 + nP/σ_n²)` bits.
    pub fn sum_capacity_per_use(&self) -> Result<f64> {
        Ok(0.5 * self.log2_one_plus_snr()?)
    }

    /// Bits each sender can deliver over `s` uses at the equal-rate point of
    /// the sum-rate constraint: `k = (s/2n) log₂(1 + nP/σ_n²)`.
    pub fn mac_bits_per_sender(&self) -> Result<f64> {
        Ok(self.s as f64 / (2.0 * self.n as f64) * self.log2_one_plus_snr()?)
    }

    /// Upper bound `(s/2) log₂(1 + nP/σ_n²)` on `I(X_1..X_n; Y)` for
    /// independent power-constrained inputs.
    pub fn mac_sum_rate_bound(&self) -> Result<f64> {
        Ok(self.s as f64 * self.sum_capacity_per_use()?)
    }

    /// Adds `N(0, σ_n²)` noise to every channel use in place.
    pub fn add_noise<R: Rng + ?Sized>(&self, y: &mut [f64], rng: &mut R) {
        if self.noise_var == 0.0 {
            return;
        }
        let std = self.noise_var.sqrt();
        for v in y.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += std * z;
        }
    }

    /// `Y_t = Σ_i X_it + Z_t` for the `n` transmitted vectors.
    pub fn transmit<R: Rng + ?Sized>(&self, inputs: &[Vec<f64>], rng: &mut R) -> Result<Vec<f64>> {
        if inputs.len() != self.n {
            return Err(Error::Argument(format!(
                "expected {} sender inputs, got {}",
                self.n,
                inputs.len()
            )));
        }
        let mut y = vec![0.0; self.s];
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != self.s {
                return Err(Error::Argument(format!(
                    "sender {i} sent {} symbols, channel has {} uses",
                    x.len(),
                    self.s
                )));
            }
            y.iter_mut().zip(x).for_each(|(acc, v)| *acc += v);
        }
        self.add_noise(&mut y, rng);
        Ok(y)
    }
}

/// Outcome of a power audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAudit {
    pub worst_power: f64,
    pub worst_theta: Theta,
    pub limit: f64,
    pub pass: bool,
}

/// `(1/s) E_θ‖f(U)‖²` for an affine encoder repeated `repetitions` times.
pub fn expected_power(
    chan: &ChannelSpec,
    model: &ModelSpec,
    encoder: &AffineEncoder,
    repetitions: usize,
    theta: &[f64],
) -> f64 {
    let alpha = encoder.alpha();
    let per_block: f64 = match model {
        ModelSpec::Gaussian(m) => theta
            .iter()
            .zip(encoder.beta())
            .map(|(t, b)| (alpha * t + b).powi(2) + alpha * alpha * m.sample_var())
            .sum(),
        ModelSpec::Bernoulli(_) => theta
            .iter()
            .zip(encoder.beta())
            .map(|(t, b)| t * (alpha + b).powi(2) + (1.0 - t) * b * b)
            .sum(),
    };
    repetitions as f64 * per_block / chan.s as f64
}

/// Analytic maximizers of the encoder power over Θ.
fn extreme_points(model: &ModelSpec, encoder: &AffineEncoder) -> Vec<Vec<f64>> {
    let d = model.d();
    let alpha = encoder.alpha();
    let beta = encoder.beta();
    match model {
        ModelSpec::Gaussian(m) => {
            // ‖αθ + β‖² over the ball peaks at θ ∥ sign(α)·β on the sphere
            let r = m.ball_radius();
            let beta_norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
            let dir: Vec<f64> = if beta_norm > 0.0 {
                let sign = if alpha < 0.0 { -1.0 } else { 1.0 };
                beta.iter().map(|b| sign * b / beta_norm).collect()
            } else {
                let mut e = vec![0.0; d];
                e[0] = 1.0;
                e
            };
            vec![
                dir.iter().map(|v| v * r).collect(),
                dir.iter().map(|v| -v * r).collect(),
                vec![0.0; d],
            ]
        }
        ModelSpec::Bernoulli(m) => {
            // power is linear in each θ_j, so the max sits on a vertex
            let (lo, hi) = m.coordinate_range();
            let best: Vec<f64> = beta
                .iter()
                .map(|b| {
                    let at_hi = hi * (alpha + b).powi(2) + (1.0 - hi) * b * b;
                    let at_lo = lo * (alpha + b).powi(2) + (1.0 - lo) * b * b;
                    if at_hi >= at_lo {
                        hi
                    } else {
                        lo
                    }
                })
                .collect();
            vec![best, vec![lo; d], vec![hi; d]]
        }
    }
}

/// Worst-case average power over Θ, checked at the analytic extremes and on a
/// fixed random grid of parameters. Passes iff the worst case is at most
/// `P·(1 + 1e-9)`.
pub fn check_power(
    chan: &ChannelSpec,
    model: &ModelSpec,
    encoder: &AffineEncoder,
    repetitions: usize,
) -> Result<PowerAudit> {
    if encoder.beta().len() != model.d() {
        return Err(Error::Argument(format!(
            "encoder offset has length {}, model dimension is {}",
            encoder.beta().len(),
            model.d()
        )));
    }
    if repetitions == 0 || repetitions * model.d() > chan.s {
        return Err(Error::Argument(format!(
            "{repetitions} repetitions of {} coordinates do not fit in {} channel uses",
            model.d(),
            chan.s
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_GRID_SEED);
    let grid = (0..POWER_GRID_POINTS).map(|_| model.sample_theta_uniform(&mut rng).into_vec());
    let mut worst_power = f64::NEG_INFINITY;
    let mut worst_theta = Vec::new();
    for theta in extreme_points(model, encoder).into_iter().chain(grid) {
        let p = expected_power(chan, model, encoder, repetitions, &theta);
        if p > worst_power {
            worst_power = p;
            worst_theta = theta;
        }
    }
    Ok(PowerAudit {
        worst_power,
        worst_theta: Theta::new(worst_theta),
        limit: chan.power_p,
        pass: worst_power <= chan.power_p * (1.0 + POWER_TOLERANCE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GaussianLocationModel, ProductBernoulliModel};
    use approx::assert_relative_eq;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn noiseless_superposition() {
        let c = ChannelSpec::new(2, 1, 1.0, 0.0).unwrap();
        assert_eq!(
            c.transmit(&[vec![3.0], vec![4.0]], &mut rng(0)).unwrap(),
            vec![7.0]
        );
        let c = ChannelSpec::new(3, 4, 1.0, 0.0).unwrap();
        assert_eq!(
            c.transmit(&vec![vec![0.0; 4]; 3], &mut rng(0)).unwrap(),
            vec![0.0; 4]
        );
    }

    #[test]
    fn transmit_shape_errors() {
        let c = ChannelSpec::new(2, 2, 1.0, 1.0).unwrap();
        assert!(matches!(
            c.transmit(&[vec![0.0; 2]], &mut rng(0)),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            c.transmit(&[vec![0.0; 2], vec![0.0; 3]], &mut rng(0)),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn noise_variance_matches() {
        let c = ChannelSpec::new(1, 1, 1.0, 1.0).unwrap();
        let mut r = rng(5);
        let trials = 100_000;
        let ys: Vec<f64> = (0..trials)
            .map(|_| c.transmit(&[vec![0.0]], &mut r).unwrap()[0])
            .collect();
        let mean = ys.iter().sum::<f64>() / trials as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!((0.97..=1.03).contains(&var), "{var}");
    }

    #[test]
    fn noise_uncorrelated_across_uses() {
        let c = ChannelSpec::new(1, 2, 1.0, 1.0).unwrap();
        let mut r = rng(6);
        let trials = 50_000;
        let cov = (0..trials)
            .map(|_| {
                let y = c.transmit(&[vec![0.0, 0.0]], &mut r).unwrap();
                y[0] * y[1]
            })
            .sum::<f64>()
            / trials as f64;
        assert!(cov.abs() <= 5.0 / (trials as f64).sqrt(), "{cov}");
    }

    #[test]
    fn noiseless_linearity() {
        let c = ChannelSpec::new(2, 3, 1.0, 0.0).unwrap();
        let a = vec![vec![1.0, -2.0, 0.5], vec![0.25, 0.0, 3.0]];
        let b = vec![vec![-1.5, 4.0, 2.0], vec![1.0, 1.0, -1.0]];
        let sum: Vec<Vec<f64>> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
            .collect();
        let ya = c.transmit(&a, &mut rng(0)).unwrap();
        let yb = c.transmit(&b, &mut rng(0)).unwrap();
        let ys = c.transmit(&sum, &mut rng(0)).unwrap();
        for t in 0..3 {
            assert_eq!(ya[t] + yb[t], ys[t]);
        }
    }

    #[test]
    fn capacity_examples() {
        let c = ChannelSpec::new(1, 2, 3.0, 1.0).unwrap();
        assert_relative_eq!(c.mac_bits_per_sender().unwrap(), 2.0, max_relative = 1e-15);
        let c = ChannelSpec::new(4, 4, 1.0, 4.0).unwrap();
        assert_relative_eq!(c.mac_bits_per_sender().unwrap(), 0.5, max_relative = 1e-15);
        let c = ChannelSpec::new(1, 1, 1.0, 1.0).unwrap();
        assert_relative_eq!(c.mac_sum_rate_bound().unwrap(), 0.5, max_relative = 1e-15);
        let c = ChannelSpec::new(3, 2, 1.0, 3.0).unwrap();
        assert_relative_eq!(c.mac_sum_rate_bound().unwrap(), 1.0, max_relative = 1e-15);
        let tiny = ChannelSpec::new(5, 3, 1e-300, 1.0).unwrap();
        assert!(tiny.mac_bits_per_sender().unwrap() < 1e-290);
    }

    #[test]
    fn capacity_rejects_noiseless() {
        let c = ChannelSpec::new(1, 1, 1.0, 0.0).unwrap();
        assert_eq!(c.mac_bits_per_sender(), Err(Error::InfiniteCapacity));
        assert_eq!(c.mac_sum_rate_bound(), Err(Error::InfiniteCapacity));
    }

    #[test]
    fn power_audit_of_zero_encoder() {
        let m: ModelSpec = GaussianLocationModel::new(3, 1.0, 1.0).unwrap().into();
        let c = ChannelSpec::new(4, 3, 2.0, 1.0).unwrap();
        let enc = AffineEncoder::new(0.0, vec![0.0; 3]);
        let audit = check_power(&c, &m, &enc, 1).unwrap();
        assert_eq!(audit.worst_power, 0.0);
        assert!(audit.pass);
    }

    #[test]
    fn power_audit_flags_offset_encoders() {
        // ‖αθ + β‖² peaks where θ points along β
        let m: ModelSpec = GaussianLocationModel::new(2, 1.0, 1.0).unwrap().into();
        let c = ChannelSpec::new(1, 2, 0.5, 1.0).unwrap();
        let enc = AffineEncoder::new(0.5, vec![0.3, 0.4]);
        let audit = check_power(&c, &m, &enc, 1).unwrap();
        let r = 2f64.sqrt();
        let expected = ((0.5 * r + 0.5).powi(2) + 2.0 * 0.25) / 2.0;
        assert_relative_eq!(audit.worst_power, expected, max_relative = 1e-12);
        assert!(!audit.pass);

        let b: ModelSpec = ProductBernoulliModel::full(2).unwrap().into();
        let enc = AffineEncoder::new(1.0, vec![0.0, -2.0]);
        let audit = check_power(&c, &b, &enc, 1).unwrap();
        assert_eq!(audit.worst_theta.as_slice(), &[1.0, 0.0]);
        assert_relative_eq!(audit.worst_power, 2.5);
        assert!(!audit.pass);
    }
}
