//! Monte-Carlo and deterministic checks of the RRT guarantees.
//!
//! The Monte-Carlo checks share one setup: the `[I_n, H_n]` design with
//! `p = 2n`, a random `k0`-sparse ±1 signal scaled to the requested SNR and
//! unit-variance noise. Trial `t` draws the same support, signs and noise at
//! every SNR, so SNR trends are not blurred by resampling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::quantile_sorted;
use crate::error::{Error, Result};
use crate::linalg::{
    gaussian_noise_from, model_matrix, snr_scale, DesignMatrix, MatrixModel, SparseSignal,
    SupportRule,
};
use crate::lsq::LsState;
use crate::omp::{minimal_superset_index, omp_run, OmpTrace, StopRule};
use crate::rrt::{
    gamma_limit, gamma_log_domain, kmax_default, rrt_select, AlphaRule, PLimit, ThresholdSchedule,
};
use crate::seed::{self, stream};
use crate::special::{reg_inc_beta, BetaParams};

/// Shared parameters of the Hadamard-model checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HadamardSetup {
    pub n: usize,
    pub k0: usize,
    pub trials: usize,
    pub seed: u64,
}

impl HadamardSetup {
    pub fn p(&self) -> usize {
        2 * self.n
    }

    pub fn k_max(&self) -> usize {
        kmax_default(self.n, self.p())
    }

    fn design(&self) -> Result<DesignMatrix> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.k0 == 0 || self.k0 > self.k_max() {
            return Err(Error::Config(format!(
                "k0 must lie in 1..={}, got {}",
                self.k_max(),
                self.k0
            )));
        }
        model_matrix(MatrixModel::IdentityHadamard, self.n, self.p(), 0)
    }
}

/// A traced trial together with its planted support.
pub struct SimulatedTrace {
    pub trace: OmpTrace,
    pub support: Vec<usize>,
    /// `k_min`, or `None` when the trace never covers the support.
    pub k_min: Option<usize>,
}

/// Full-length OMP traces for every trial at one SNR.
pub fn simulate_traces(setup: &HadamardSetup, snr: f64) -> Result<Vec<SimulatedTrace>> {
    let x = setup.design()?;
    let (n, p, k_max) = (setup.n, setup.p(), setup.k_max());
    (0..setup.trials)
        .into_par_iter()
        .map(|t| {
            let t = t as u64;
            let mut rng = seed::rng_for(setup.seed, &[t, stream::SUPPORT]);
            let raw = SparseSignal::random_signs(p, setup.k0, SupportRule::Random, &mut rng)?;
            let signal = snr_scale(&x, &raw, snr, 1.0)?;
            let mut y = x.combine(signal.support(), signal.values());
            let mut noise_rng = seed::rng_for(setup.seed, &[t, stream::NOISE]);
            y.iter_mut()
                .zip(gaussian_noise_from(&mut noise_rng, n, 1.0))
                .for_each(|(yi, wi)| *yi += wi);
            let trace = omp_run(&x, &y, k_max, StopRule::None)?;
            let k_min = minimal_superset_index(&trace, signal.support());
            Ok(SimulatedTrace {
                trace,
                support: signal.support().to_vec(),
                k_min,
            })
        })
        .collect()
}

/// `P(k_min = k0)` and the median of `RR(k_min)` at one SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KminRow {
    pub snr: f64,
    pub trials: usize,
    pub p_kmin_eq_k0: f64,
    /// Over trials where `k_min` is finite; `NaN` if there are none.
    pub median_rr_kmin: f64,
}

pub fn validate_thm1(setup: &HadamardSetup, snrs: &[f64]) -> Result<Vec<KminRow>> {
    snrs.iter()
        .map(|&snr| {
            let sims = simulate_traces(setup, snr)?;
            let hits = sims.iter().filter(|s| s.k_min == Some(setup.k0)).count();
            let mut rr: Vec<f64> = sims
                .iter()
                .filter_map(|s| s.k_min.map(|k| s.trace.residual_ratios()[k - 1]))
                .collect();
            rr.sort_by(f64::total_cmp);
            Ok(KminRow {
                snr,
                trials: sims.len(),
                p_kmin_eq_k0: hits as f64 / sims.len() as f64,
                median_rr_kmin: if rr.is_empty() {
                    f64::NAN
                } else {
                    quantile_sorted(&rr, 0.5)
                },
            })
        })
        .collect()
}

/// Frequency of `RR(k) ≤ Γ(k)` for some `k > k_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub snr: f64,
    pub alpha: f64,
    pub trials: usize,
    pub violations: usize,
    pub violation_rate: f64,
}

/// Whether some iteration past `k_min` falls below its threshold. A trace
/// that never covers the support has no such iterations.
fn violates(sim: &SimulatedTrace, gamma: &[f64]) -> bool {
    let Some(k_min) = sim.k_min else {
        return false;
    };
    let rr = sim.trace.residual_ratios();
    (k_min + 1..=rr.len()).any(|k| rr[k - 1] <= gamma[k - 1])
}

pub fn validate_thm2(
    setup: &HadamardSetup,
    snrs: &[f64],
    alphas: &[f64],
) -> Result<Vec<CoverageRow>> {
    let mut rows = Vec::new();
    for &snr in snrs {
        let sims = simulate_traces(setup, snr)?;
        for &alpha in alphas {
            let schedule = ThresholdSchedule::cached(setup.n, setup.p(), setup.k_max(), alpha)?;
            let violations = sims
                .iter()
                .filter(|s| violates(s, schedule.gamma()))
                .count();
            rows.push(CoverageRow {
                snr,
                alpha,
                trials: sims.len(),
                violations,
                violation_rate: violations as f64 / sims.len() as f64,
            });
        }
    }
    Ok(rows)
}

/// Error frequencies of RRT at one `(SNR, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrtErrorRow {
    pub snr: f64,
    pub alpha: f64,
    pub trials: usize,
    /// Trials with a true index missing from the estimate.
    pub false_negative_rate: f64,
    /// Trials with a spurious index in the estimate.
    pub false_positive_rate: f64,
    /// Trials with `Ŝ ≠ S`.
    pub support_error_rate: f64,
    pub fallback_rate: f64,
}

pub fn validate_thm6(setup: &HadamardSetup, snr: f64, alpha: f64) -> Result<RrtErrorRow> {
    let sims = simulate_traces(setup, snr)?;
    let (mut fneg, mut fpos, mut err, mut fb) = (0, 0, 0, 0);
    for s in &sims {
        let est = rrt_select(&s.trace, setup.n, setup.p(), alpha)?;
        let missing = s.support.iter().any(|j| !est.support.contains(j));
        let extra = est.support.iter().any(|j| !s.support.contains(j));
        fneg += missing as usize;
        fpos += extra as usize;
        err += (missing || extra) as usize;
        fb += est.alpha.is_some_and(|a| a.fallback) as usize;
    }
    let total = sims.len() as f64;
    Ok(RrtErrorRow {
        snr,
        alpha,
        trials: sims.len(),
        false_negative_rate: fneg as f64 / total,
        false_positive_rate: fpos as f64 / total,
        support_error_rate: err as f64 / total,
        fallback_rate: fb as f64 / total,
    })
}

/// Growth regimes for `(p, k0)` as `n → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p = 100`, `k0 = 10`.
    FixedP,
    /// `p = n^10`, `k0 = ⌊n/5⌋`.
    PolynomialP,
    /// `ln p = √n / 2`, `k0 = ⌊√n⌋`.
    SubexpP,
    /// `k0 = 10` and `n = 2 k0 ln p`, i.e. `ln p = n / 20`.
    ExpP,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::FixedP,
        Regime::PolynomialP,
        Regime::SubexpP,
        Regime::ExpP,
    ];

    /// `(ln p, k0)` at sample size `n`.
    pub fn dimensions(&self, n: usize) -> (f64, usize) {
        let nf = n as f64;
        match self {
            Regime::FixedP => (100f64.ln(), 10),
            Regime::PolynomialP => (10.0 * nf.ln(), n / 5),
            Regime::SubexpP => (nf.sqrt() / 2.0, nf.sqrt().floor() as usize),
            Regime::ExpP => (nf / 20.0, 10),
        }
    }

    /// Large-sample limit of `Γ(k0)`.
    pub fn limit(&self) -> f64 {
        let (p_lim, k_lim) = match self {
            Regime::FixedP | Regime::SubexpP => (PLimit::Finite(0.0), 0.0),
            Regime::PolynomialP => (PLimit::Finite(0.0), 0.2),
            Regime::ExpP => (PLimit::Finite(1.0 / 20.0), 0.0),
        };
        gamma_limit(p_lim, k_lim).expect("regime limits are in range")
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_p" => Ok(Regime::FixedP),
            "polynomial_p" => Ok(Regime::PolynomialP),
            "subexp_p" => Ok(Regime::SubexpP),
            "exp_p" => Ok(Regime::ExpP),
            _ => Err(Error::Config(format!(
                "unknown regime {s:?}; expected fixed_p, polynomial_p, subexp_p or exp_p"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    pub n: usize,
    pub ln_p: f64,
    pub k0: usize,
    pub k_max: usize,
    pub alpha: f64,
    pub gamma: f64,
}

/// `Γ(k0)` along `n_grid` with `k_max = min(p, ⌊(n+1)/2⌋)`.
pub fn validate_thm4(
    regime: Regime,
    alpha_rule: AlphaRule,
    n_grid: &[usize],
) -> Result<Vec<GammaPoint>> {
    n_grid
        .iter()
        .map(|&n| {
            let (ln_p, k0) = regime.dimensions(n);
            let half = n.div_ceil(2);
            // p may exceed every integer type; compare on the log scale.
            let k_max = if ln_p < (half as f64).ln() {
                ln_p.exp().round() as usize
            } else {
                half
            };
            let alpha = alpha_rule.resolve(n)?;
            let gamma = gamma_log_domain(n, ln_p, k0, k_max, alpha)?;
            Ok(GammaPoint {
                n,
                ln_p,
                k0,
                k_max,
                alpha,
                gamma,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixBResult {
    pub samples: usize,
    pub ks_statistic: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Kolmogorov-Smirnov distance between `‖(I-P₂)w‖² / ‖(I-P₁)w‖²` and
/// `Beta((n-k2)/2, (k2-k1)/2)`, where `P₁ ⊂ P₂` project onto the first `k1`
/// and `k2` columns of a fixed Gaussian matrix.
pub fn validate_appendix_b(
    n: usize,
    k1: usize,
    k2: usize,
    samples: usize,
    seed: u64,
) -> Result<AppendixBResult> {
    if k1 >= k2 || k2 >= n {
        return Err(Error::Config(format!(
            "need 0 ≤ k1 < k2 < n, got k1={k1}, k2={k2}, n={n}"
        )));
    }
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let x = model_matrix(
        MatrixModel::Gaussian,
        n,
        k2,
        seed::derive(seed, &[stream::MATRIX]),
    )?;
    let mut ratios: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let w =
                gaussian_noise_from(&mut seed::rng_for(seed, &[s as u64, stream::NOISE]), n, 1.0);
            let mut state = LsState::new(&w);
            for j in 0..k1 {
                state.extend(&x, j)?;
            }
            let outer = state.residual_norm();
            for j in k1..k2 {
                state.extend(&x, j)?;
            }
            Ok((state.residual_norm() / outer).powi(2))
        })
        .collect::<Result<_>>()?;
    ratios.sort_by(f64::total_cmp);

    let params = BetaParams::new((n - k2) as f64 / 2.0, (k2 - k1) as f64 / 2.0)?;
    let total = samples as f64;
    let mut ks = 0.0_f64;
    for (i, &r) in ratios.iter().enumerate() {
        let f = reg_inc_beta(params, r.clamp(0.0, 1.0))?;
        ks = ks.max((i + 1) as f64 / total - f).max(f - i as f64 / total);
    }
    Ok(AppendixBResult {
        samples,
        ks_statistic: ks,
        min_ratio: ratios[0],
        max_ratio: ratios[samples - 1],
    })
}
