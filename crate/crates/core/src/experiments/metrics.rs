use serde::{Deserialize, Serialize};

use crate::rrt::RecoveryResult;

/// Outcome of one selector on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub trial_id: usize,
    pub selector: String,
    pub l2_error: f64,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub exact: bool,
    pub k_selected: usize,
}

impl TrialMetrics {
    /// Compares an estimate with the planted `(support, values)`; both
    /// supports must be sorted.
    pub fn score(
        trial_id: usize,
        selector: String,
        est: &RecoveryResult,
        support: &[usize],
        values: &[f64],
    ) -> Self {
        let mut sq = 0.0;
        let (mut i, mut j) = (0, 0);
        let (mut fp, mut fn_) = (0, 0);
        while i < est.support.len() || j < support.len() {
            let a = est.support.get(i).copied().unwrap_or(usize::MAX);
            let b = support.get(j).copied().unwrap_or(usize::MAX);
            if a == b {
                sq += (est.coefficients[i] - values[j]).powi(2);
                i += 1;
                j += 1;
            } else if a < b {
                sq += est.coefficients[i].powi(2);
                fp += 1;
                i += 1;
            } else {
                sq += values[j].powi(2);
                fn_ += 1;
                j += 1;
            }
        }
        Self {
            trial_id,
            selector,
            l2_error: sq.sqrt(),
            false_positives: fp,
            false_negatives: fn_,
            exact: fp == 0 && fn_ == 0,
            k_selected: est.k_selected,
        }
    }
}

/// Five-number summary (type-7 quantiles).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl BoxStats {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Aggregates of one selector over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorSummary {
    pub selector: String,
    pub trials: usize,
    /// Mean of `‖β̂ − β‖²`.
    pub mse: f64,
    /// Fraction of trials with `Ŝ ≠ S`.
    pub pe: f64,
    pub l2_error: BoxStats,
    pub false_positives: BoxStats,
    pub false_negatives: BoxStats,
    pub k_selected: BoxStats,
}

impl SelectorSummary {
    pub fn from_trials(selector: &str, rows: &[&TrialMetrics]) -> Option<Self> {
        let n = rows.len();
        if n == 0 {
            return None;
        }
        Some(Self {
            selector: selector.to_string(),
            trials: n,
            mse: rows.iter().map(|r| r.l2_error * r.l2_error).sum::<f64>() / n as f64,
            pe: rows.iter().filter(|r| !r.exact).count() as f64 / n as f64,
            l2_error: BoxStats::from_values(rows.iter().map(|r| r.l2_error))?,
            false_positives: BoxStats::from_values(rows.iter().map(|r| r.false_positives as f64))?,
            false_negatives: BoxStats::from_values(rows.iter().map(|r| r.false_negatives as f64))?,
            k_selected: BoxStats::from_values(rows.iter().map(|r| r.k_selected as f64))?,
        })
    }
}
