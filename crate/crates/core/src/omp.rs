//! Orthogonal matching pursuit with a full per-iteration trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, DesignMatrix};
use crate::lsq::LsState;

/// Residual norms at or below this fraction of `‖y‖` are recorded as exactly zero.
pub const ZERO_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop after this many iterations.
    FixedIterations(usize),
    /// Stop as soon as `‖r^k‖ ≤ ε` (checked before every iteration, so
    /// `k = 0` is possible).
    ResidualThreshold(f64),
    /// Run until `k_max`, a zero residual or a degenerate column.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedKmax,
    ResidualZero,
    StopRule,
    DegenerateColumn,
}

/// Everything OMP produced, iteration by iteration.
#[derive(Debug, Clone)]
pub struct OmpTrace {
    k_max: usize,
    selected: Vec<usize>,
    /// `‖r^0‖, …, ‖r^K‖`
    residual_norms: Vec<f64>,
    /// Least-squares estimate after each iteration, ordered like `selected[..k]`.
    coefficients: Vec<Vec<f64>>,
    final_residual: Vec<f64>,
    termination: Termination,
}

impl OmpTrace {
    /// Number of completed iterations `K`.
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// The iteration budget the run was started with.
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Column picked at each iteration, `t_1, …, t_K`.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Support after `k` iterations, in selection order.
    pub fn support(&self, k: usize) -> &[usize] {
        &self.selected[..k]
    }

    pub fn residual_norms(&self) -> &[f64] {
        &self.residual_norms
    }

    /// Estimate after `k ≥ 1` iterations, aligned with [`OmpTrace::support`].
    pub fn coefficients(&self, k: usize) -> &[f64] {
        if k == 0 {
            &[]
        } else {
            &self.coefficients[k - 1]
        }
    }

    pub fn final_residual(&self) -> &[f64] {
        &self.final_residual
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// `RR(k) = ‖r^k‖ / ‖r^{k-1}‖` for `k = 1..=K`; zero when the previous
    /// residual was already zero.
    pub fn residual_ratios(&self) -> Vec<f64> {
        residual_ratios(&self.residual_norms)
    }
}

/// Residual ratios from a sequence of residual norms.
pub fn residual_ratios(norms: &[f64]) -> Vec<f64> {
    norms
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 {
                (w[1] / w[0]).min(1.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Runs OMP for at most `k_max` iterations.
///
/// Each step picks `argmax_j |X_jᵀ r|` over unselected columns (smallest
/// index on ties) and refits least squares on the enlarged support.
pub fn omp_run(x: &DesignMatrix, y: &[f64], k_max: usize, rule: StopRule) -> Result<OmpTrace> {
    let (n, p) = (x.n(), x.p());
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "observation has length {}, design has {n} rows",
            y.len()
        )));
    }
    let y_norm = norm(y);
    if y_norm == 0.0 || !y_norm.is_finite() {
        return Err(Error::Domain(
            "observation vector must be nonzero and finite".into(),
        ));
    }
    if k_max == 0 || k_max > n.min(p) {
        return Err(Error::Domain(format!(
            "k_max must lie in 1..={}, got {k_max}",
            n.min(p)
        )));
    }
    let (limit, limit_reason) = match rule {
        StopRule::FixedIterations(0) => {
            return Err(Error::Config(
                "fixed iteration count must be at least 1".into(),
            ))
        }
        StopRule::FixedIterations(k0) if k0 <= k_max => (k0, Termination::StopRule),
        StopRule::ResidualThreshold(eps) if !(eps >= 0.0) => {
            return Err(Error::Config(format!(
                "residual threshold must be ≥ 0, got {eps}"
            )))
        }
        _ => (k_max, Termination::ReachedKmax),
    };

    let mut state = LsState::new(y);
    let mut in_support = vec![false; p];
    let mut selected = Vec::with_capacity(limit);
    let mut residual_norms = Vec::with_capacity(limit + 1);
    let mut coefficients = Vec::with_capacity(limit);
    residual_norms.push(y_norm);

    let termination = loop {
        let current = *residual_norms.last().unwrap();
        if let StopRule::ResidualThreshold(eps) = rule {
            if current <= eps {
                break Termination::StopRule;
            }
        }
        if selected.len() == limit {
            break limit_reason;
        }

        let residual = state.residual();
        let mut best = 0;
        let mut best_corr = -1.0;
        for j in (0..p).filter(|&j| !in_support[j]) {
            let c = dot(x.column(j), residual).abs();
            if c > best_corr {
                best_corr = c;
                best = j;
            }
        }

        match state.extend(x, best) {
            Ok(()) => {}
            Err(Error::DegenerateColumn { .. }) => break Termination::DegenerateColumn,
            Err(e) => return Err(e),
        }
        in_support[best] = true;
        selected.push(best);
        coefficients.push(state.coefficients());

        let r = state.residual_norm();
        if r <= ZERO_RESIDUAL_TOL * y_norm {
            residual_norms.push(0.0);
            break Termination::ResidualZero;
        }
        residual_norms.push(r.min(current));
    };

    Ok(OmpTrace {
        k_max,
        selected,
        residual_norms,
        coefficients,
        final_residual: state.residual().to_vec(),
        termination,
    })
}

/// Smallest `k` with `true_support ⊆ S^k`, or `None` when no prefix of the
/// trace covers it.
pub fn minimal_superset_index(trace: &OmpTrace, true_support: &[usize]) -> Option<usize> {
    if true_support.is_empty() {
        return Some(0);
    }
    let mut covered = 0;
    for (k, t) in trace.selected().iter().enumerate() {
        if true_support.contains(t) {
            covered += 1;
            if covered == true_support.len() {
                return Some(k + 1);
            }
        }
    }
    None
}
