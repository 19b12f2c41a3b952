//! Reference selectors RRT is compared against.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{normalize_columns_with_scales, DesignMatrix};
use crate::omp::{omp_run, StopRule};
use crate::rrt::{eps_sigma, kmax_default, RecoveryResult};
use crate::seed;

/// OMP run for exactly `k0` iterations (fewer if the trace ends early).
pub fn omp_known_k0(x: &DesignMatrix, y: &[f64], k0: usize) -> Result<RecoveryResult> {
    let trace = omp_run(x, y, k0, StopRule::FixedIterations(k0))?;
    Ok(RecoveryResult::from_trace(&trace, trace.len(), None))
}

/// OMP stopped at the first `k` with `‖r^k‖ ≤ ε_σ`; may return an empty support.
pub fn omp_sigma_stop(x: &DesignMatrix, y: &[f64], sigma: f64) -> Result<RecoveryResult> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let eps = eps_sigma(sigma, x.n())?;
    let trace = omp_run(x, y, x.n().min(x.p()), StopRule::ResidualThreshold(eps))?;
    Ok(RecoveryResult::from_trace(&trace, trace.len(), None))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    /// Largest iteration count scored; defaults to `min(p, ⌊(n+1)/2⌋)`.
    pub k_max: Option<usize>,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            k_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub result: RecoveryResult,
    /// Summed held-out mean squared error for `k = 1..=curve.len()`.
    pub curve: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Fold label of every row: a seeded permutation dealt round-robin, so fold
/// sizes differ by at most one.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng_for(seed, &[seed::stream::FOLDS]));
    let mut label = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        label[row] = pos % folds;
    }
    label
}

/// Held-out squared errors of the `k`-term fits on one fold, `k = 1..=k_grid`.
fn fold_curve(
    x: &DesignMatrix,
    y: &[f64],
    labels: &[usize],
    fold: usize,
    k_grid: usize,
) -> Result<Vec<f64>> {
    let train: Vec<usize> = (0..x.n()).filter(|&i| labels[i] != fold).collect();
    let test: Vec<usize> = (0..x.n()).filter(|&i| labels[i] == fold).collect();

    // Columns that vanish on the training rows cannot be selected.
    let raw = x.select_rows(&train);
    let usable: Vec<usize> = (0..x.p()).filter(|&j| raw.column(j).norm() > 0.0).collect();
    let sub = raw.select_columns(&usable);
    let (xt, scales) = normalize_columns_with_scales(sub)?;
    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();

    let mut curve = vec![0.0; k_grid];
    if yt.iter().all(|&v| v == 0.0) {
        for &i in &test {
            let e = y[i] * y[i];
            curve.iter_mut().for_each(|c| *c += e);
        }
        curve.iter_mut().for_each(|c| *c /= test.len() as f64);
        return Ok(curve);
    }
    let trace = omp_run(&xt, &yt, k_grid.min(xt.p()), StopRule::None)?;
    for (k, slot) in curve.iter_mut().enumerate().map(|(i, c)| (i + 1, c)) {
        let k = k.min(trace.len());
        let cols = trace.support(k);
        let coef = trace.coefficients(k);
        let mut sse = 0.0;
        for &i in &test {
            let pred: f64 = cols
                .iter()
                .zip(coef)
                .map(|(&c, &b)| x.matrix()[(i, usable[c])] * b / scales[c])
                .sum();
            sse += (y[i] - pred).powi(2);
        }
        *slot = sse / test.len() as f64;
    }
    Ok(curve)
}

/// OMP with the iteration count picked by `folds`-fold cross-validation,
/// then refit on all rows.
pub fn cv_omp(x: &DesignMatrix, y: &[f64], cfg: CvConfig) -> Result<CvResult> {
    let n = x.n();
    if cfg.folds < 2 || cfg.folds > n {
        return Err(Error::Config(format!(
            "folds must lie in 2..={n}, got {}",
            cfg.folds
        )));
    }
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "observation has length {}, design has {n} rows",
            y.len()
        )));
    }
    let k_max = cfg.k_max.unwrap_or_else(|| kmax_default(n, x.p()));
    if k_max == 0 || k_max > n.min(x.p()) {
        return Err(Error::Config(format!(
            "k_max must lie in 1..={}, got {k_max}",
            n.min(x.p())
        )));
    }
    let mut warnings = Vec::new();
    let smallest_train = n - n.div_ceil(cfg.folds);
    let k_grid = k_max.min(smallest_train);
    if k_grid < k_max {
        warnings.push(format!(
            "k grid truncated from {k_max} to {k_grid}: smallest training fold has {smallest_train} rows"
        ));
    }
    if k_grid == 0 {
        return Err(Error::Config("training folds are empty".into()));
    }

    let labels = fold_assignment(n, cfg.folds, cfg.seed);
    let per_fold: Vec<Vec<f64>> = (0..cfg.folds)
        .into_par_iter()
        .map(|f| fold_curve(x, y, &labels, f, k_grid))
        .collect::<Result<_>>()?;
    let curve: Vec<f64> = (0..k_grid)
        .map(|k| per_fold.iter().map(|c| c[k]).sum())
        .collect();

    // Differences at round-off level count as ties, which go to the smaller k.
    let energy = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let best = curve.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * energy * cfg.folds as f64;
    let k = curve.iter().position(|&c| c <= best + tol).unwrap() + 1;

    let result = omp_known_k0(x, y, k)?;
    Ok(CvResult {
        result,
        curve,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_noise, model_matrix, normalize_columns, MatrixModel};
    use nalgebra::DMatrix;

    #[test]
    fn known_k0_on_noiseless_signal() {
        let x = model_matrix(MatrixModel::IdentityHadamard, 32, 64, 0).unwrap();
        let y = x.combine(&[2, 33, 60], &[1.0, -1.0, 2.0]);
        let r = omp_known_k0(&x, &y, 3).unwrap();
        assert_eq!(r.support, vec![2, 33, 60]);
        assert!(r.alpha.is_none());
    }

    #[test]
    fn known_k0_single_atom_with_tiny_noise() {
        let x = model_matrix(MatrixModel::Gaussian, 20, 30, 1).unwrap();
        let mut y = x.column(3).to_vec();
        for (yi, w) in y.iter_mut().zip(gaussian_noise(20, 1e-6, 2)) {
            *yi += w;
        }
        assert_eq!(omp_known_k0(&x, &y, 1).unwrap().support, vec![3]);
    }

    #[test]
    fn sigma_stop_extremes() {
        let x = model_matrix(MatrixModel::Gaussian, 30, 40, 3).unwrap();
        let y = x.combine(&[4, 9], &[1.0, 1.0]);
        let r = omp_sigma_stop(&x, &y, 1e6).unwrap();
        assert_eq!(r.k_selected, 0);
        assert!(r.support.is_empty());
        let r = omp_sigma_stop(&x, &y, 1e-14).unwrap();
        assert_eq!(r.support, vec![4, 9]);
        assert!(omp_sigma_stop(&x, &y, 0.0).is_err());
    }

    #[test]
    fn wrappers_are_prefixes_of_the_full_trace() {
        for s in 0..20 {
            let x = model_matrix(MatrixModel::Gaussian, 40, 60, 10 + s).unwrap();
            let mut y = x.combine(&[0, 5, 17], &[1.0, -1.0, 0.7]);
            for (yi, w) in y.iter_mut().zip(gaussian_noise(40, 0.2, 50 + s)) {
                *yi += w;
            }
            let full = omp_run(&x, &y, 40, StopRule::None).unwrap();
            let k0 = omp_run(&x, &y, 3, StopRule::FixedIterations(3)).unwrap();
            assert_eq!(k0.selected(), full.support(3));
            let eps = eps_sigma(0.2, 40).unwrap();
            let sig = omp_run(&x, &y, 40, StopRule::ResidualThreshold(eps)).unwrap();
            assert_eq!(sig.selected(), full.support(sig.len()));
        }
    }

    #[test]
    fn folds_partition_rows_evenly() {
        for (n, folds) in [(21, 5), (200, 5), (10, 10), (7, 2)] {
            let labels = fold_assignment(n, folds, 9);
            let mut sizes = vec![0; folds];
            labels.iter().for_each(|&l| sizes[l] += 1);
            assert_eq!(sizes.iter().sum::<usize>(), n);
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        assert_eq!(fold_assignment(50, 5, 1), fold_assignment(50, 5, 1));
        assert_ne!(fold_assignment(50, 5, 1), fold_assignment(50, 5, 2));
    }

    #[test]
    fn cv_finds_k0_without_noise() {
        let x = model_matrix(MatrixModel::Gaussian, 60, 90, 4).unwrap();
        let y = x.combine(&[3, 20, 44, 70], &[2.0, -1.5, 1.0, 1.2]);
        let cv = cv_omp(
            &x,
            &y,
            CvConfig {
                seed: 7,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cv.result.k_selected, 4);
        assert_eq!(cv.result.support, vec![3, 20, 44, 70]);
        assert!(cv.warnings.is_empty());
    }

    #[test]
    fn cv_on_pure_noise_selects_something() {
        let x = model_matrix(MatrixModel::Gaussian, 50, 80, 5).unwrap();
        let mut nonzero = 0;
        for s in 0..10 {
            let y = gaussian_noise(50, 1.0, 900 + s);
            let cv = cv_omp(
                &x,
                &y,
                CvConfig {
                    seed: s,
                    ..Default::default()
                },
            )
            .unwrap();
            nonzero += (cv.result.k_selected > 0) as usize;
        }
        assert_eq!(nonzero, 10);
    }

    #[test]
    fn cv_is_deterministic_and_truncates() {
        let x = model_matrix(MatrixModel::Gaussian, 12, 20, 6).unwrap();
        let y = gaussian_noise(12, 1.0, 1);
        let cfg = CvConfig {
            folds: 3,
            seed: 11,
            k_max: Some(12),
        };
        let a = cv_omp(&x, &y, cfg).unwrap();
        let b = cv_omp(&x, &y, cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.curve.len(), 8);
        assert_eq!(a.warnings.len(), 1);
        assert!(cv_omp(&x, &y, CvConfig { folds: 1, ..cfg }).is_err());
    }

    #[test]
    fn cv_handles_columns_that_vanish_on_training_rows() {
        let x = normalize_columns(DMatrix::identity(10, 10)).unwrap();
        let y = [5.0, 0.1, -0.2, 0.0, 0.3, -0.1, 4.0, 0.2, 0.0, 0.1];
        let cv = cv_omp(
            &x,
            &y,
            CvConfig {
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(cv.result.k_selected >= 1);
    }
}
