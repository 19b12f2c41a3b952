//! Residual ratio thresholding: threshold schedule, selection and
//! closed-form bounds.

mod bounds;
mod schedule;
mod select;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bounds::{
    eps_extra_bound, eps_omp, eps_rrt, eps_sigma, gamma_limit, gamma_log_domain, PLimit,
    TheoryBounds,
};
pub use schedule::{rrt_threshold, ThresholdSchedule};
pub use select::{
    alpha_grid, rrt_recover, rrt_select, select_k, AlphaInfo, RecoveryResult, FALLBACK_GRID_SIZE,
};

/// `min(p, ⌊(n + 1) / 2⌋)`.
pub fn kmax_default(n: usize, p: usize) -> usize {
    p.min(n.div_ceil(2))
}

/// How α is chosen; the named rules are resolved from `n` at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    Value(f64),
    /// `α = 1 / ln n`
    InvLogN,
    /// `α = 1 / √n`
    InvSqrtN,
}

impl AlphaRule {
    pub fn resolve(&self, n: usize) -> Result<f64> {
        let alpha = match *self {
            AlphaRule::Value(a) => a,
            AlphaRule::InvLogN => {
                if n < 2 {
                    return Err(Error::Config("1/ln(n) needs n ≥ 2".into()));
                }
                1.0 / (n as f64).ln()
            }
            AlphaRule::InvSqrtN => 1.0 / (n as f64).sqrt(),
        };
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(alpha)
    }
}

impl fmt::Display for AlphaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaRule::Value(a) => write!(f, "{a}"),
            AlphaRule::InvLogN => f.write_str("inv_log_n"),
            AlphaRule::InvSqrtN => f.write_str("inv_sqrt_n"),
        }
    }
}

impl FromStr for AlphaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inv_log_n" => Ok(AlphaRule::InvLogN),
            "inv_sqrt_n" => Ok(AlphaRule::InvSqrtN),
            other => other.parse::<f64>().map(AlphaRule::Value).map_err(|_| {
                Error::Config(format!(
                    "alpha rule must be inv_log_n, inv_sqrt_n or a number, got {other:?}"
                ))
            }),
        }
    }
}
