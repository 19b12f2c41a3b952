use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::special::{reg_inc_beta_inv_ln, BetaParams};

/// The thresholds `Γ(1), …, Γ(k_max)` for one `(n, p, k_max, α)`.
///
/// `Γ(k) = √(F⁻¹_{(n-k)/2, 1/2}(α / (k_max (p - k + 1))))`, with the
/// argument capped at 1 (so `Γ(k) = 1`) once α exceeds `k_max (p - k + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSchedule {
    n: usize,
    p: usize,
    k_max: usize,
    alpha: f64,
    gamma: Vec<f64>,
}

type CacheKey = (usize, usize, usize, u64);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<ThresholdSchedule>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<ThresholdSchedule>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn check_dims(n: usize, p: usize, k_max: usize) -> Result<()> {
    if n < 2 || p == 0 {
        return Err(Error::Domain(format!(
            "need n ≥ 2 and p ≥ 1, got n={n}, p={p}"
        )));
    }
    if k_max == 0 || k_max > p.min(n - 1) {
        return Err(Error::Domain(format!(
            "k_max must lie in 1..={}, got {k_max}",
            p.min(n - 1)
        )));
    }
    Ok(())
}

/// `Γ(k)` with `ln q = ln α - ln k_max - ln(p - k + 1)`, clamped to 1 for `q ≥ 1`.
fn gamma_clamped(n: usize, p: usize, k_max: usize, k: usize, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let ln_q = alpha.ln() - (k_max as f64).ln() - ((p - k + 1) as f64).ln();
    if ln_q >= 0.0 {
        return Ok(1.0);
    }
    let params = BetaParams::new((n - k) as f64 / 2.0, 0.5)?;
    Ok(reg_inc_beta_inv_ln(params, ln_q)?.sqrt())
}

/// A single threshold `Γ(k)`, restricted to `0 ≤ α ≤ k_max (p - k + 1)`.
pub fn rrt_threshold(n: usize, p: usize, k_max: usize, k: usize, alpha: f64) -> Result<f64> {
    check_dims(n, p, k_max)?;
    if k == 0 || k > k_max {
        return Err(Error::Domain(format!("k must lie in 1..={k_max}, got {k}")));
    }
    let upper = (k_max * (p - k + 1)) as f64;
    if !(0.0..=upper).contains(&alpha) {
        return Err(Error::Domain(format!(
            "alpha must lie in [0, {upper}] at k={k}, got {alpha}"
        )));
    }
    gamma_clamped(n, p, k_max, k, alpha)
}

impl ThresholdSchedule {
    /// Builds the schedule for `0 ≤ α ≤ p·k_max`.
    pub fn new(n: usize, p: usize, k_max: usize, alpha: f64) -> Result<Self> {
        check_dims(n, p, k_max)?;
        let upper = (p * k_max) as f64;
        if !(0.0..=upper).contains(&alpha) {
            return Err(Error::Domain(format!(
                "alpha must lie in [0, {upper}], got {alpha}"
            )));
        }
        let gamma = (1..=k_max)
            .map(|k| gamma_clamped(n, p, k_max, k, alpha))
            .collect::<Result<_>>()?;
        Ok(Self {
            n,
            p,
            k_max,
            alpha,
            gamma,
        })
    }

    /// Like [`ThresholdSchedule::new`], but memoized process-wide.
    pub fn cached(n: usize, p: usize, k_max: usize, alpha: f64) -> Result<Arc<Self>> {
        let key = (n, p, k_max, alpha.to_bits());
        if let Some(s) = cache().read().unwrap().get(&key) {
            return Ok(Arc::clone(s));
        }
        let fresh = Arc::new(Self::new(n, p, k_max, alpha)?);
        let mut map = cache().write().unwrap();
        Ok(Arc::clone(map.entry(key).or_insert(fresh)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `Γ(1..=k_max)`; entry `k - 1` holds `Γ(k)`.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `Γ(k)` for `1 ≤ k ≤ k_max`.
    pub fn at(&self, k: usize) -> f64 {
        self.gamma[k - 1]
    }
}
