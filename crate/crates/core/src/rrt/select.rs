use serde::{Deserialize, Serialize};

use super::schedule::ThresholdSchedule;
use crate::error::{Error, Result};
use crate::linalg::DesignMatrix;
use crate::omp::{omp_run, OmpTrace, StopRule};

/// Number of candidate α values tried when nothing falls below the thresholds.
pub const FALLBACK_GRID_SIZE: usize = 100;

/// How α was resolved during selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaInfo {
    pub requested: f64,
    pub used: f64,
    pub fallback: bool,
}

/// A selected OMP prefix: support and its least-squares coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub k_selected: usize,
    /// Sorted column indices.
    pub support: Vec<usize>,
    /// Aligned with `support`.
    pub coefficients: Vec<f64>,
    /// Present for RRT selections only.
    pub alpha: Option<AlphaInfo>,
}

impl RecoveryResult {
    /// The estimate after `k` iterations of `trace`.
    pub fn from_trace(trace: &OmpTrace, k: usize, alpha: Option<AlphaInfo>) -> Self {
        let mut pairs: Vec<(usize, f64)> = trace
            .support(k)
            .iter()
            .copied()
            .zip(trace.coefficients(k).iter().copied())
            .collect();
        pairs.sort_by_key(|&(j, _)| j);
        let (support, coefficients) = pairs.into_iter().unzip();
        Self {
            k_selected: k,
            support,
            coefficients,
            alpha,
        }
    }

    pub fn to_dense(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; p];
        for (&j, &v) in self.support.iter().zip(&self.coefficients) {
            out[j] = v;
        }
        out
    }
}

/// `max{k : RR(k) ≤ Γ(k)}` over the common prefix of both sequences.
pub fn select_k(ratios: &[f64], gamma: &[f64]) -> Option<usize> {
    ratios
        .iter()
        .zip(gamma)
        .rposition(|(rr, g)| rr <= g)
        .map(|i| i + 1)
}

/// `FALLBACK_GRID_SIZE` geometrically spaced values in `(alpha, upper]`,
/// ending exactly at `upper`.
pub fn alpha_grid(alpha: f64, upper: f64) -> Vec<f64> {
    let ratio = upper / alpha;
    (1..=FALLBACK_GRID_SIZE)
        .map(|i| {
            if i == FALLBACK_GRID_SIZE {
                upper
            } else {
                alpha * ratio.powf(i as f64 / FALLBACK_GRID_SIZE as f64)
            }
        })
        .collect()
}

/// RRT selection on an OMP trace for an `n × p` design.
///
/// Only iterations that exist in the trace are eligible. If no ratio falls
/// below its threshold, α is raised along [`alpha_grid`] until one does;
/// at `α = p·k_max` the first threshold is 1, so this always terminates.
pub fn rrt_select(trace: &OmpTrace, n: usize, p: usize, alpha: f64) -> Result<RecoveryResult> {
    if trace.is_empty() {
        return Err(Error::Domain("RRT needs at least one OMP iteration".into()));
    }
    let k_max = trace.k_max();
    let upper = (p * k_max) as f64;
    if !(alpha > 0.0 && alpha <= upper) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, {upper}], got {alpha}"
        )));
    }
    let ratios = trace.residual_ratios();

    let schedule = ThresholdSchedule::cached(n, p, k_max, alpha)?;
    if let Some(k) = select_k(&ratios, schedule.gamma()) {
        let info = AlphaInfo {
            requested: alpha,
            used: alpha,
            fallback: false,
        };
        return Ok(RecoveryResult::from_trace(trace, k, Some(info)));
    }

    for candidate in alpha_grid(alpha, upper) {
        let schedule = ThresholdSchedule::cached(n, p, k_max, candidate)?;
        if let Some(k) = select_k(&ratios, schedule.gamma()) {
            let info = AlphaInfo {
                requested: alpha,
                used: candidate,
                fallback: true,
            };
            return Ok(RecoveryResult::from_trace(trace, k, Some(info)));
        }
    }
    unreachable!("Γ(1) = 1 at α = p·k_max admits k = 1")
}

/// OMP to `k_max` (default `min(p, ⌊(n+1)/2⌋)`) followed by [`rrt_select`].
pub fn rrt_recover(
    x: &DesignMatrix,
    y: &[f64],
    alpha: f64,
    k_max: Option<usize>,
) -> Result<RecoveryResult> {
    let k_max = k_max.unwrap_or_else(|| super::kmax_default(x.n(), x.p()));
    let trace = omp_run(x, y, k_max, StopRule::None)?;
    rrt_select(&trace, x.n(), x.p(), alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_noise, model_matrix, MatrixModel};
    use crate::omp::{omp_run, StopRule};

    #[test]
    fn select_k_takes_the_last_crossing() {
        let rr = [0.9, 0.05, 0.95, 0.96];
        let g = [0.3, 0.4, 0.5, 0.55];
        assert_eq!(select_k(&rr, &g), Some(2));
        assert_eq!(select_k(&[0.9, 0.9], &[0.5, 0.5]), None);
        assert_eq!(select_k(&[0.1, 0.1, 0.1], &[0.5, 0.5]), Some(2));
    }

    #[test]
    fn grid_is_increasing_and_ends_at_upper() {
        let g = alpha_grid(0.1, 1024.0);
        assert_eq!(g.len(), 100);
        assert!(g[0] > 0.1);
        assert_eq!(*g.last().unwrap(), 1024.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pure_noise_triggers_fallback() {
        let x = model_matrix(MatrixModel::Gaussian, 40, 60, 5).unwrap();
        let mut hits = 0;
        for s in 0..40 {
            let y = gaussian_noise(40, 1.0, 100 + s);
            let t = omp_run(&x, &y, 20, StopRule::None).unwrap();
            let r = rrt_select(&t, 40, 60, 1e-3).unwrap();
            let info = r.alpha.unwrap();
            assert_eq!(info.fallback, info.used > info.requested);
            assert!(info.used >= info.requested);
            if info.fallback {
                hits += 1;
                let s = ThresholdSchedule::new(40, 60, 20, 1e-3).unwrap();
                assert!(t
                    .residual_ratios()
                    .iter()
                    .zip(s.gamma())
                    .all(|(r, g)| r > g));
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn largest_alpha_never_falls_back() {
        let x = model_matrix(MatrixModel::Gaussian, 30, 40, 6).unwrap();
        for s in 0..20 {
            let y = gaussian_noise(30, 1.0, 300 + s);
            let t = omp_run(&x, &y, 15, StopRule::None).unwrap();
            let r = rrt_select(&t, 30, 40, 40.0 * 15.0).unwrap();
            assert!(!r.alpha.unwrap().fallback);
        }
    }

    #[test]
    fn selection_is_scale_invariant() {
        let x = model_matrix(MatrixModel::Gaussian, 50, 80, 7).unwrap();
        for s in 0..20 {
            let mut y = x.combine(&[1, 7, 30], &[2.0, -1.5, 1.0]);
            for (yi, wi) in y.iter_mut().zip(gaussian_noise(50, 0.3, 500 + s)) {
                *yi += wi;
            }
            let scaled: Vec<f64> = y.iter().map(|v| 37.5 * v).collect();
            let a = rrt_select(&omp_run(&x, &y, 25, StopRule::None).unwrap(), 50, 80, 0.1).unwrap();
            let b = rrt_select(
                &omp_run(&x, &scaled, 25, StopRule::None).unwrap(),
                50,
                80,
                0.1,
            )
            .unwrap();
            assert_eq!(a.k_selected, b.k_selected);
            assert_eq!(a.support, b.support);
            assert_eq!(a.alpha.unwrap().fallback, b.alpha.unwrap().fallback);
        }
    }

    #[test]
    fn result_support_is_the_trace_prefix() {
        let x = model_matrix(MatrixModel::Gaussian, 50, 80, 8).unwrap();
        let y = x.combine(&[40, 3], &[3.0, -2.0]);
        let t = omp_run(&x, &y, 25, StopRule::None).unwrap();
        let r = rrt_select(&t, 50, 80, 0.1).unwrap();
        assert_eq!(r.support, vec![3, 40]);
        assert!((r.coefficients[0] + 2.0).abs() < 1e-10);
        assert!((r.coefficients[1] - 3.0).abs() < 1e-10);
        assert!(rrt_select(&t, 50, 80, 0.0).is_err());
    }
}
