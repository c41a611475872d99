//! Minimax estimation over a Gaussian multiple-access channel.
//!
//! `n` senders each hold one sample from `p_θ`, map it to `s` real symbols
//! under an average power budget `P`, and transmit simultaneously; the
//! receiver sees the sum plus Gaussian noise and estimates θ.
//!
//! * [`model`] — Gaussian location and product Bernoulli models, scores, ρ.
//! * [`channel`] — the MAC itself, power audits and sum-capacity formulas.
//! * [`schemes`] — analog (scale-and-transmit) schemes and their exact risks.
//! * [`bounds`] — digital and analog lower bounds on worst-case risk.
//! * [`montecarlo`] — seeded, parallel risk estimation.

// `!(x > 0.0)` is used on purpose: NaN must fail positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod schemes;

pub use channel::ChannelSpec;
pub use error::{Error, Result};
pub use model::{GaussianLocationModel, ModelKind, ModelSpec, ProductBernoulliModel, Theta};
pub use montecarlo::{RiskResult, ThetaMode, TrialPlan};
pub use schemes::{RegimeMode, Scheme};
