//! Statistical models: parameter spaces, sampling, score functions and the
//! sub-Gaussian parameter of the score that drives the analog lower bounds.
//!
//! Two models are supported:
//!
//! * Gaussian location: `U ~ N(θ, σ² I_d)` with `Θ = {θ : ‖θ‖₂ ≤ B√d}`.
//! * Product Bernoulli: `U ~ ∏ Bernoulli(θ_j)` with either the full box
//!   `[0, 1]^d` or the dense box `[½ − ε, ½ + ε]^d` used by the lower bounds.
//!
//! Samples are represented as `f64` vectors in both cases; Bernoulli bits are
//! stored as `0.0` / `1.0` so that affine encoders apply uniformly.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the dense Bernoulli box used wherever a bound needs one.
pub const DEFAULT_EPSILON: f64 = 0.25;

/// Relative slack on parameter-space membership tests.
const MEMBERSHIP_TOL: f64 = 1e-12;

/// A parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theta(Vec<f64>);

impl Theta {
    pub fn new(values: Vec<f64>) -> Self {
        Theta(values)
    }

    /// `d` copies of `value`.
    pub fn filled(d: usize, value: f64) -> Self {
        Theta(vec![value; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Squared Euclidean distance to another vector of the same length.
    pub fn squared_error(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl From<Vec<f64>> for Theta {
    fn from(values: Vec<f64>) -> Self {
        Theta(values)
    }
}

/// Gaussian location model `N(θ, σ² I_d)` on the ball `‖θ‖₂ ≤ B√d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianLocationModel {
    d: usize,
    sample_var: f64,
    radius_b: f64,
}

impl GaussianLocationModel {
    pub fn new(d: usize, sample_var: f64, radius_b: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Argument("dimension d must be positive".into()));
        }
        if !(sample_var > 0.0 && sample_var.is_finite()) {
            return Err(Error::Argument(format!(
                "sample variance must be positive and finite, got {sample_var}"
            )));
        }
        if !(radius_b > 0.0 && radius_b.is_finite()) {
            return Err(Error::Argument(format!(
                "radius B must be positive and finite, got {radius_b}"
            )));
        }
        Ok(GaussianLocationModel {
            d,
            sample_var,
            radius_b,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sample_var(&self) -> f64 {
        self.sample_var
    }

    pub fn sigma(&self) -> f64 {
        self.sample_var.sqrt()
    }

    pub fn radius_b(&self) -> f64 {
        self.radius_b
    }

    /// Radius `B√d` of the parameter ball.
    pub fn ball_radius(&self) -> f64 {
        self.radius_b * (self.d as f64).sqrt()
    }
}

/// Product Bernoulli model with `d` independent coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductBernoulliModel {
    d: usize,
    epsilon: f64,
    full_space: bool,
}

impl ProductBernoulliModel {
    pub fn new(d: usize, epsilon: f64, full_space: bool) -> Result<Self> {
        if d == 0 {
            return Err(Error::Argument("dimension d must be positive".into()));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::Argument(format!(
                "epsilon must lie in (0, 1/2), got {epsilon}"
            )));
        }
        Ok(ProductBernoulliModel {
            d,
            epsilon,
            full_space,
        })
    }

    /// Model on the full box `[0, 1]^d`, with the default ε kept for bounds.
    pub fn full(d: usize) -> Result<Self> {
        Self::new(d, DEFAULT_EPSILON, true)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn full_space(&self) -> bool {
        self.full_space
    }

    /// Inclusive coordinate interval of the parameter box.
    pub fn coordinate_range(&self) -> (f64, f64) {
        if self.full_space {
            (0.0, 1.0)
        } else {
            (0.5 - self.epsilon, 0.5 + self.epsilon)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gaussian,
    Bernoulli,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Gaussian => f.write_str("gaussian"),
            ModelKind::Bernoulli => f.write_str("bernoulli"),
        }
    }
}

/// One of the supported statistical models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ModelSpec {
    Gaussian(GaussianLocationModel),
    Bernoulli(ProductBernoulliModel),
}

impl From<GaussianLocationModel> for ModelSpec {
    fn from(m: GaussianLocationModel) -> Self {
        ModelSpec::Gaussian(m)
    }
}

impl From<ProductBernoulliModel> for ModelSpec {
    fn from(m: ProductBernoulliModel) -> Self {
        ModelSpec::Bernoulli(m)
    }
}

impl ModelSpec {
    pub fn d(&self) -> usize {
        match self {
            ModelSpec::Gaussian(m) => m.d,
            ModelSpec::Bernoulli(m) => m.d,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Gaussian(_) => ModelKind::Gaussian,
            ModelSpec::Bernoulli(_) => ModelKind::Bernoulli,
        }
    }

    /// Membership test for the parameter space, with a relative slack of
    /// `1e-12` so that analytic boundary points are accepted.
    pub fn contains(&self, theta: &Theta) -> bool {
        if theta.len() != self.d() || theta.as_slice().iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            ModelSpec::Gaussian(m) => theta.norm() <= m.ball_radius() * (1.0 + MEMBERSHIP_TOL),
            ModelSpec::Bernoulli(m) => {
                let (lo, hi) = m.coordinate_range();
                theta
                    .as_slice()
                    .iter()
                    .all(|&v| v >= lo - MEMBERSHIP_TOL && v <= hi + MEMBERSHIP_TOL)
            }
        }
    }

    pub fn check_theta(&self, theta: &Theta) -> Result<()> {
        if theta.len() != self.d() {
            return Err(Error::Argument(format!(
                "theta has length {}, model dimension is {}",
                theta.len(),
                self.d()
            )));
        }
        if !self.contains(theta) {
            return Err(Error::Domain(format!(
                "theta {:?} lies outside the {} parameter space",
                theta.as_slice(),
                self.kind()
            )));
        }
        Ok(())
    }

    /// Draws one sample at `theta` into `out` (length `d`). No membership
    /// check; callers validate `theta` once up front.
    pub fn sample_into<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R, out: &mut [f64]) {
        match self {
            ModelSpec::Gaussian(m) => {
                let sigma = m.sigma();
                for (o, &t) in out.iter_mut().zip(theta) {
                    let z: f64 = rng.sample(StandardNormal);
                    *o = t + sigma * z;
                }
            }
            ModelSpec::Bernoulli(_) => {
                for (o, &p) in out.iter_mut().zip(theta) {
                    *o = bernoulli_bit(p, rng);
                }
            }
        }
    }

    /// `n` independent draws from `p_θ`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        theta: &Theta,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        if n == 0 {
            return Err(Error::Argument("sample count n must be positive".into()));
        }
        self.check_theta(theta)?;
        let d = self.d();
        Ok((0..n)
            .map(|_| {
                let mut u = vec![0.0; d];
                self.sample_into(theta.as_slice(), rng, &mut u);
                u
            })
            .collect())
    }

    /// Gradient of the log-likelihood at `theta` for a single sample `u`.
    pub fn score(&self, theta: &Theta, u: &[f64]) -> Result<Vec<f64>> {
        let d = self.d();
        if theta.len() != d || u.len() != d {
            return Err(Error::Argument(format!(
                "score needs theta and u of length {d}, got {} and {}",
                theta.len(),
                u.len()
            )));
        }
        match self {
            ModelSpec::Gaussian(m) => Ok(u
                .iter()
                .zip(theta.as_slice())
                .map(|(x, t)| (x - t) / m.sample_var)
                .collect()),
            ModelSpec::Bernoulli(_) => theta
                .as_slice()
                .iter()
                .zip(u)
                .enumerate()
                .map(|(index, (&t, &bit))| {
                    if t <= 0.0 || t >= 1.0 {
                        Err(Error::SingularScore { index, value: t })
                    } else if bit >= 0.5 {
                        Ok(1.0 / t)
                    } else {
                        Ok(-1.0 / (1.0 - t))
                    }
                })
                .collect(),
        }
    }

    /// Sub-Gaussian parameter ρ of `⟨v, S_θ(U)⟩` over unit vectors `v`.
    ///
    /// Gaussian: `1/σ`. Bernoulli: `1/(½ − 2ε²)`, valid over the dense box.
    pub fn subgaussian_rho(&self) -> f64 {
        match self {
            ModelSpec::Gaussian(m) => 1.0 / m.sigma(),
            ModelSpec::Bernoulli(m) => bernoulli_rho(m.epsilon),
        }
    }

    /// Uniform draw from the parameter space.
    pub fn sample_theta_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Theta {
        match self {
            ModelSpec::Gaussian(m) => {
                // direction from a standard normal vector, radius ~ R·U^(1/d)
                let d = m.d;
                let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let mut norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                while norm == 0.0 {
                    v.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                    norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                }
                let u: f64 = rng.random();
                let r = m.ball_radius() * u.powf(1.0 / d as f64);
                Theta(v.into_iter().map(|x| x / norm * r).collect())
            }
            ModelSpec::Bernoulli(m) => {
                let (lo, hi) = m.coordinate_range();
                Theta(
                    (0..m.d)
                        .map(|_| lo + (hi - lo) * rng.random::<f64>())
                        .collect(),
                )
            }
        }
    }
}

pub(crate) fn bernoulli_rho(epsilon: f64) -> f64 {
    1.0 / (0.5 - 2.0 * epsilon * epsilon)
}

#[inline]
fn bernoulli_bit<R: Rng + ?Sized>(p: f64, rng: &mut R) -> f64 {
    // degenerate coordinates consume no randomness
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 || rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}
