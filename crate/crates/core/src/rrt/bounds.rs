use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{reg_inc_beta_inv_ln, BetaParams};

/// `σ √(n + 2 √(n ln n))`: with high probability `‖w‖ ≤ ε_σ` for
/// `w ~ N(0, σ² I_n)`.
pub fn eps_sigma(sigma: f64, n: usize) -> Result<f64> {
    if !(sigma >= 0.0) || n < 2 {
        return Err(Error::Domain(format!(
            "need σ ≥ 0 and n ≥ 2, got σ={sigma}, n={n}"
        )));
    }
    let n = n as f64;
    Ok(sigma * (n + 2.0 * (n * n.ln()).sqrt()).sqrt())
}

/// Noise level below which OMP with `k0` iterations recovers the support,
/// given `δ = δ_{k0+1}`.
pub fn eps_omp(beta_min: f64, delta: f64, k0: usize) -> Result<f64> {
    let root = ((k0 + 1) as f64).sqrt();
    if !(0.0..1.0 / root).contains(&delta) {
        return Err(Error::Domain(format!(
            "δ must lie in [0, 1/√(k0+1)) = [0, {}), got {delta}",
            1.0 / root
        )));
    }
    let num = 1.0 - root * delta;
    let den = 1.0 + (1.0 - delta * delta).sqrt() - root * delta;
    Ok(beta_min * (1.0 - delta).sqrt() * num / den)
}

/// Noise level below which RRT recovers the support, given `δ = δ_{k0}` and
/// `Γ = Γ(k0)`.
pub fn eps_rrt(beta_min: f64, delta: f64, gamma_k0: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) || !(0.0..=1.0).contains(&gamma_k0) {
        return Err(Error::Domain(format!(
            "need δ in [0, 1) and Γ in [0, 1], got δ={delta}, Γ={gamma_k0}"
        )));
    }
    Ok(gamma_k0 * (1.0 - delta).sqrt() * beta_min / (1.0 + gamma_k0))
}

/// Upper bound `(1 + 1/Γ) / 2` on the extra SNR RRT needs over OMP with known `k0`.
pub fn eps_extra_bound(gamma_k0: f64) -> Result<f64> {
    if !(gamma_k0 > 0.0 && gamma_k0 <= 1.0) {
        return Err(Error::Domain(format!(
            "Γ must lie in (0, 1], got {gamma_k0}"
        )));
    }
    Ok(0.5 * (1.0 + 1.0 / gamma_k0))
}

/// Limit of `ln p / n` as `n → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PLimit {
    Finite(f64),
    Infinite,
}

/// Large-sample limit of `Γ(k0)`: `exp(-p_lim / (1 - k_lim))`.
pub fn gamma_limit(p_lim: PLimit, k_lim: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&k_lim) {
        return Err(Error::Domain(format!(
            "k_lim must lie in [0, 0.5), got {k_lim}"
        )));
    }
    match p_lim {
        PLimit::Infinite => Ok(0.0),
        PLimit::Finite(v) if v >= 0.0 => Ok((-v / (1.0 - k_lim)).exp()),
        PLimit::Finite(v) => Err(Error::Domain(format!("p_lim must be ≥ 0, got {v}"))),
    }
}

/// `Γ(k)` with `p` given through `ln p`, for `p` beyond `usize`/`f64` range.
pub fn gamma_log_domain(n: usize, ln_p: f64, k: usize, k_max: usize, alpha: f64) -> Result<f64> {
    if k == 0 || k > k_max || k_max >= n {
        return Err(Error::Domain(format!(
            "need 1 ≤ k ≤ k_max < n, got k={k}, k_max={k_max}, n={n}"
        )));
    }
    if !(alpha > 0.0) || !(ln_p >= 0.0) {
        return Err(Error::Domain(format!(
            "need α > 0 and ln p ≥ 0, got α={alpha}, ln p={ln_p}"
        )));
    }
    // ln(p - k + 1) = ln p + ln(1 - (k - 1)/p)
    let ln_count = ln_p + (-((k - 1) as f64) * (-ln_p).exp()).ln_1p();
    if !ln_count.is_finite() {
        return Err(Error::Domain(format!(
            "p = e^{ln_p} is smaller than k = {k}"
        )));
    }
    let ln_q = alpha.ln() - (k_max as f64).ln() - ln_count;
    if ln_q >= 0.0 {
        return Ok(1.0);
    }
    let params = BetaParams::new((n - k) as f64 / 2.0, 0.5)?;
    Ok(reg_inc_beta_inv_ln(params, ln_q)?.sqrt())
}

/// The constants entering the recovery guarantees for one problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryBounds {
    pub beta_min: f64,
    pub k0: usize,
    pub delta_k0: f64,
    pub delta_k0_plus_1: f64,
    pub sigma: f64,
    pub gamma_k0: f64,
}

impl TheoryBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_min > 0.0) {
            return Err(Error::Domain("β_min must be positive".into()));
        }
        for d in [self.delta_k0, self.delta_k0_plus_1] {
            if !(0.0..1.0).contains(&d) {
                return Err(Error::Domain(format!(
                    "RIC values must lie in [0, 1), got {d}"
                )));
            }
        }
        if self.delta_k0 > self.delta_k0_plus_1 {
            return Err(Error::Domain("δ_k0 cannot exceed δ_(k0+1)".into()));
        }
        Ok(())
    }

    pub fn eps_omp(&self) -> Result<f64> {
        eps_omp(self.beta_min, self.delta_k0_plus_1, self.k0)
    }

    pub fn eps_rrt(&self) -> Result<f64> {
        eps_rrt(self.beta_min, self.delta_k0, self.gamma_k0)
    }

    pub fn eps_extra(&self) -> Result<f64> {
        eps_extra_bound(self.gamma_k0)
    }

    pub fn eps_sigma(&self, n: usize) -> Result<f64> {
        eps_sigma(self.sigma, n)
    }
}
