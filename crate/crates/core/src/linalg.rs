//! Design matrices, sparse signals and matrix diagnostics.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Rng};

/// Tolerance on unit column norms.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// An `n × p` matrix whose columns have unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    entries: DMatrix<f64>,
}

impl DesignMatrix {
    /// Wraps a matrix that is already column-normalized.
    pub fn from_normalized(entries: DMatrix<f64>) -> Result<Self> {
        check_shape(&entries)?;
        for (j, col) in entries.column_iter().enumerate() {
            let norm = col.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Data(format!(
                    "column {j} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn p(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Column `j` as a contiguous slice (storage is column-major).
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.entries.as_slice()[j * n..(j + 1) * n]
    }

    /// `Σ_j X_j · values_j` over the given columns.
    pub fn combine(&self, columns: &[usize], values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (&j, &v) in columns.iter().zip(values) {
            for (o, x) in out.iter_mut().zip(self.column(j)) {
                *o += v * x;
            }
        }
        out
    }

    /// Keeps only the listed rows; the result is *not* re-normalized.
    pub fn select_rows(&self, rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), self.p(), |i, j| self.entries[(rows[i], j)])
    }
}

fn check_shape(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Dimension(format!(
            "design matrix must be non-empty, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("design matrix has non-finite entries".into()));
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales every column to unit norm, returning the scale factors as well.
pub fn normalize_columns_with_scales(raw: DMatrix<f64>) -> Result<(DesignMatrix, Vec<f64>)> {
    check_shape(&raw)?;
    let mut entries = raw;
    let mut scales = Vec::with_capacity(entries.ncols());
    for (j, mut col) in entries.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::ZeroColumn { column: j });
        }
        col /= norm;
        scales.push(norm);
    }
    Ok((DesignMatrix { entries }, scales))
}

pub fn normalize_columns(raw: DMatrix<f64>) -> Result<DesignMatrix> {
    normalize_columns_with_scales(raw).map(|(x, _)| x)
}

/// Sylvester Hadamard matrix of order `m` (a power of two).
pub fn hadamard(m: usize) -> Result<DMatrix<f64>> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::Domain(format!(
            "Hadamard order must be a power of two, got {m}"
        )));
    }
    // H[i, j] = (-1)^{popcount(i & j)}
    Ok(DMatrix::from_fn(m, m, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }))
}

/// Random design-matrix families used in the simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixModel {
    /// i.i.d. `N(0, 1)` entries.
    Gaussian,
    /// `[I_n, H_n]`; deterministic, needs `p = 2n` with `n` a power of two.
    IdentityHadamard,
    /// Rows i.i.d. `N(0, Σ)` with `Σ = (1 - κ) I_p + κ 1 1ᵀ`.
    Correlated { kappa: f64 },
}

impl MatrixModel {
    pub fn is_random(&self) -> bool {
        !matches!(self, MatrixModel::IdentityHadamard)
    }

    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        if n == 0 || p == 0 {
            return Err(Error::Config(format!(
                "n and p must be positive, got n={n}, p={p}"
            )));
        }
        match *self {
            MatrixModel::Gaussian => Ok(()),
            MatrixModel::IdentityHadamard => {
                if !n.is_power_of_two() || p != 2 * n {
                    return Err(Error::Config(format!(
                        "identity_hadamard needs n a power of two and p = 2n, got n={n}, p={p}"
                    )));
                }
                Ok(())
            }
            MatrixModel::Correlated { kappa } => {
                if !(0.0..1.0).contains(&kappa) {
                    return Err(Error::Config(format!(
                        "kappa must lie in [0, 1), got {kappa}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Draws a normalized design matrix from `model`; deterministic given `seed`.
pub fn model_matrix(model: MatrixModel, n: usize, p: usize, seed: u64) -> Result<DesignMatrix> {
    model.validate(n, p)?;
    let mut rng = seed::rng(seed);
    let raw = match model {
        MatrixModel::Gaussian => DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal)),
        MatrixModel::IdentityHadamard => {
            let mut m = DMatrix::zeros(n, p);
            m.view_mut((0, 0), (n, n)).fill_with_identity();
            m.view_mut((0, n), (n, n)).copy_from(&hadamard(n)?);
            m
        }
        MatrixModel::Correlated { kappa } => {
            let own = (1.0 - kappa).sqrt();
            let shared = kappa.sqrt();
            let mut m = DMatrix::zeros(n, p);
            for i in 0..n {
                let common: f64 = rng.sample(StandardNormal);
                for j in 0..p {
                    let z: f64 = rng.sample(StandardNormal);
                    m[(i, j)] = own * z + shared * common;
                }
            }
            m
        }
    };
    normalize_columns(raw)
}

/// `max_{j≠k} |X_jᵀ X_k|`.
pub fn mutual_coherence(x: &DesignMatrix) -> Result<f64> {
    if x.p() < 2 {
        return Err(Error::Domain(
            "mutual coherence needs at least two columns".into(),
        ));
    }
    let mut best = 0.0_f64;
    for j in 0..x.p() {
        for k in (j + 1)..x.p() {
            best = best.max(dot(x.column(j), x.column(k)).abs());
        }
    }
    Ok(best)
}

/// Largest number of supports [`ric_bruteforce`] will enumerate.
pub const RIC_BUDGET: u128 = 1_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > RIC_BUDGET * 1000 {
            return u128::MAX;
        }
    }
    acc
}

/// Restricted isometry constant `δ_j` by exhaustive enumeration of all
/// size-`j` supports: the worst of `λ_max - 1` and `1 - λ_min` over every
/// `j × j` Gram submatrix.
pub fn ric_bruteforce(x: &DesignMatrix, order: usize) -> Result<f64> {
    let p = x.p();
    if order == 0 || order > p {
        return Err(Error::Domain(format!(
            "RIC order must lie in 1..={p}, got {order}"
        )));
    }
    let count = binomial(p, order);
    if count > RIC_BUDGET {
        return Err(Error::Budget(format!(
            "C({p}, {order}) supports exceed {RIC_BUDGET}; use mutual_coherence for a bound instead"
        )));
    }
    let mut support: Vec<usize> = (0..order).collect();
    let mut delta = 0.0_f64;
    loop {
        let gram = DMatrix::from_fn(order, order, |a, b| {
            dot(x.column(support[a]), x.column(support[b]))
        });
        let eig = SymmetricEigen::new(gram).eigenvalues;
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        delta = delta.max(hi - 1.0).max(1.0 - lo);

        // next combination in lexicographic order
        let mut i = order;
        loop {
            if i == 0 {
                return Ok(delta.max(0.0));
            }
            i -= 1;
            if support[i] < p - order + i {
                break;
            }
        }
        support[i] += 1;
        for k in (i + 1)..order {
            support[k] = support[k - 1] + 1;
        }
    }
}

/// How the planted support is chosen in simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportRule {
    /// Uniformly random `k0`-subset of the columns.
    #[default]
    Random,
    /// Always the first `k0` columns.
    FixedPrefix,
}

/// A sparse regression vector: nonzero values on a sorted support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSignal {
    pub fn new(p: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut pairs: Vec<(usize, f64)> = entries.into_iter().collect();
        pairs.sort_by_key(|&(j, _)| j);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Domain(format!("duplicate support index {}", w[0].0)));
            }
        }
        for &(j, v) in &pairs {
            if j >= p {
                return Err(Error::Domain(format!(
                    "support index {j} out of range for p={p}"
                )));
            }
            if v == 0.0 || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "value at index {j} must be finite and nonzero"
                )));
            }
        }
        let (support, values) = pairs.into_iter().unzip();
        Ok(Self { support, values })
    }

    /// `k0` entries of `±1` with independent random signs.
    pub fn random_signs(p: usize, k0: usize, rule: SupportRule, rng: &mut Rng) -> Result<Self> {
        if k0 == 0 || k0 > p {
            return Err(Error::Domain(format!(
                "sparsity must lie in 1..={p}, got {k0}"
            )));
        }
        let support: Vec<usize> = match rule {
            SupportRule::Random => index::sample(rng, p, k0).into_vec(),
            SupportRule::FixedPrefix => (0..k0).collect(),
        };
        let signs: Vec<f64> = (0..k0)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        Self::new(p, support.into_iter().zip(signs))
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn k0(&self) -> usize {
        self.support.len()
    }

    pub fn beta_min(&self) -> f64 {
        self.values
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    pub fn to_dense(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; p];
        for (&j, &v) in self.support.iter().zip(&self.values) {
            out[j] = v;
        }
        out
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            support: self.support.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

pub fn gaussian_noise_from(rng: &mut Rng, n: usize, sigma: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        })
        .collect()
}

/// `n` i.i.d. `N(0, σ²)` draws.
pub fn gaussian_noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    gaussian_noise_from(&mut seed::rng(seed), n, sigma)
}

/// Rescales `signal` by one positive factor so that `‖Xβ‖² / (n σ²) = target_snr`.
pub fn snr_scale(
    x: &DesignMatrix,
    signal: &SparseSignal,
    target_snr: f64,
    sigma: f64,
) -> Result<SparseSignal> {
    if !(target_snr > 0.0 && target_snr.is_finite()) {
        return Err(Error::Domain(format!(
            "target SNR must be positive, got {target_snr}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let energy = dot(
        &x.combine(signal.support(), signal.values()),
        &x.combine(signal.support(), signal.values()),
    );
    if energy == 0.0 {
        return Err(Error::Domain(
            "Xβ is identically zero; SNR cannot be set".into(),
        ));
    }
    let factor = (target_snr * x.n() as f64 * sigma * sigma / energy).sqrt();
    Ok(signal.scaled(factor))
}

/// Realized `‖Xβ‖² / (n σ²)`.
pub fn snr_of(x: &DesignMatrix, signal: &SparseSignal, sigma: f64) -> f64 {
    let xb = x.combine(signal.support(), signal.values());
    dot(&xb, &xb) / (x.n() as f64 * sigma * sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_already_normalized() {
        let id = DMatrix::<f64>::identity(5, 5);
        assert_eq!(normalize_columns(id.clone()).unwrap().matrix(), &id);
    }

    #[test]
    fn normalizes_a_three_four_column() {
        let mut m = DMatrix::zeros(4, 1);
        m[(0, 0)] = 3.0;
        m[(1, 0)] = 4.0;
        let x = normalize_columns(m).unwrap();
        assert_relative_eq!(x.column(0)[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(x.column(0)[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn zero_column_is_reported_by_index() {
        let mut m = DMatrix::from_element(3, 3, 1.0);
        m.column_mut(2).fill(0.0);
        match normalize_columns(m) {
            Err(Error::ZeroColumn { column }) => assert_eq!(column, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hadamard_small_orders() {
        assert_eq!(hadamard(1).unwrap(), DMatrix::from_element(1, 1, 1.0));
        assert_eq!(
            hadamard(2).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0])
        );
        let h = hadamard(4).unwrap();
        assert_eq!(h.transpose() * &h, DMatrix::identity(4, 4) * 4.0);
        assert!(hadamard(6).is_err());
        assert!(hadamard(0).is_err());
    }

    #[test]
    fn hadamard_rows_are_orthogonal() {
        let h = hadamard(64).unwrap();
        assert_eq!(&h * h.transpose(), DMatrix::identity(64, 64) * 64.0);
    }

    #[test]
    fn identity_hadamard_coherence() {
        let x = model_matrix(MatrixModel::IdentityHadamard, 32, 64, 0).unwrap();
        assert_relative_eq!(
            mutual_coherence(&x).unwrap(),
            1.0 / 32f64.sqrt(),
            epsilon = 1e-14
        );
        assert_relative_eq!(1.0 / 32f64.sqrt(), 0.17678, epsilon = 1e-5);
    }

    #[test]
    fn identity_hadamard_shape_is_checked() {
        assert!(model_matrix(MatrixModel::IdentityHadamard, 32, 60, 0).is_err());
        assert!(model_matrix(MatrixModel::IdentityHadamard, 24, 48, 0).is_err());
        assert!(model_matrix(MatrixModel::Correlated { kappa: 1.0 }, 8, 8, 0).is_err());
    }

    #[test]
    fn seeded_models_are_reproducible() {
        let a = model_matrix(MatrixModel::Gaussian, 200, 300, 11).unwrap();
        let b = model_matrix(MatrixModel::Gaussian, 200, 300, 11).unwrap();
        assert_eq!(a, b);
        let c = model_matrix(MatrixModel::Gaussian, 200, 300, 12).unwrap();
        assert_ne!(a, c);
        for j in 0..a.p() {
            assert!((norm(a.column(j)) - 1.0).abs() <= UNIT_NORM_TOL);
        }
    }

    #[test]
    fn correlated_model_has_unit_columns_and_positive_correlation() {
        let x = model_matrix(MatrixModel::Correlated { kappa: 0.7 }, 400, 6, 5).unwrap();
        for j in 0..6 {
            assert!((norm(x.column(j)) - 1.0).abs() <= UNIT_NORM_TOL);
        }
        // Raw columns are not centered, so the inner product of normalized
        // columns estimates κ.
        let r = dot(x.column(0), x.column(1));
        assert!((r - 0.7).abs() < 0.1, "{r}");

        let uncorrelated = model_matrix(MatrixModel::Correlated { kappa: 0.0 }, 400, 6, 5).unwrap();
        assert!(dot(uncorrelated.column(0), uncorrelated.column(1)).abs() < 0.2);
    }

    #[test]
    fn coherence_extremes() {
        let id = normalize_columns(DMatrix::identity(4, 4)).unwrap();
        assert_eq!(mutual_coherence(&id).unwrap(), 0.0);
        let mut m = DMatrix::from_fn(4, 3, |i, j| (i + j) as f64 + 1.0);
        let c = m.column(0).clone_owned();
        m.set_column(2, &c);
        let x = normalize_columns(m).unwrap();
        assert_relative_eq!(mutual_coherence(&x).unwrap(), 1.0, epsilon = 1e-14);
        let single = normalize_columns(DMatrix::from_element(3, 1, 1.0)).unwrap();
        assert!(mutual_coherence(&single).is_err());
    }

    #[test]
    fn ric_of_orthonormal_and_single_columns() {
        let id = normalize_columns(DMatrix::identity(6, 6)).unwrap();
        for j in 1..=4 {
            assert!(ric_bruteforce(&id, j).unwrap() < 1e-14);
        }
        let g = model_matrix(MatrixModel::Gaussian, 10, 12, 3).unwrap();
        assert!(ric_bruteforce(&g, 1).unwrap() < 1e-14);
    }

    #[test]
    fn ric_of_two_columns_is_their_inner_product() {
        let rho: f64 = 0.37;
        let m = DMatrix::from_row_slice(2, 2, &[1.0, rho, 0.0, (1.0 - rho * rho).sqrt()]);
        let x = normalize_columns(m).unwrap();
        assert_relative_eq!(ric_bruteforce(&x, 2).unwrap(), rho, epsilon = 1e-13);
        assert_relative_eq!(
            ric_bruteforce(&x, 2).unwrap(),
            mutual_coherence(&x).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn ric_is_monotone_in_order() {
        let x = model_matrix(MatrixModel::Gaussian, 12, 10, 8).unwrap();
        let deltas: Vec<f64> = (1..=5).map(|j| ric_bruteforce(&x, j).unwrap()).collect();
        for w in deltas.windows(2) {
            assert!(w[0] <= w[1] + 1e-12, "{deltas:?}");
        }
    }

    #[test]
    fn ric_refuses_huge_enumerations() {
        let x = model_matrix(MatrixModel::Gaussian, 10, 200, 1).unwrap();
        assert!(matches!(ric_bruteforce(&x, 5), Err(Error::Budget(_))));
    }

    #[test]
    fn sparse_signal_validation() {
        assert!(SparseSignal::new(5, [(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseSignal::new(5, [(5, 1.0)]).is_err());
        assert!(SparseSignal::new(5, [(2, 0.0)]).is_err());
        let s = SparseSignal::new(5, [(3, -0.5), (0, 2.0)]).unwrap();
        assert_eq!(s.support(), &[0, 3]);
        assert_eq!(s.beta_min(), 0.5);
        assert_eq!(s.to_dense(5), vec![2.0, 0.0, 0.0, -0.5, 0.0]);
    }

    #[test]
    fn snr_scaling() {
        let x = model_matrix(MatrixModel::Gaussian, 50, 80, 2).unwrap();
        let s = SparseSignal::new(80, [(4, 1.0), (9, -1.0), (30, 1.0)]).unwrap();
        let scaled = snr_scale(&x, &s, 3.0, 1.0).unwrap();
        assert_relative_eq!(snr_of(&x, &scaled, 1.0), 3.0, epsilon = 1e-9);
        assert_eq!(scaled.support(), s.support());
        for (a, b) in scaled.values().iter().zip(s.values()) {
            assert_eq!(a.signum(), b.signum());
        }
        let doubled = snr_scale(&x, &s, 6.0, 1.0).unwrap();
        for (a, b) in doubled.values().iter().zip(scaled.values()) {
            assert_relative_eq!(a / b, 2f64.sqrt(), epsilon = 1e-12);
        }
        assert!(snr_scale(&x, &s, 0.0, 1.0).is_err());
    }

    #[test]
    fn snr_scaling_rejects_null_signal() {
        // Two identical columns with opposite signs cancel.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let x = normalize_columns(m).unwrap();
        let s = SparseSignal::new(2, [(0, 1.0), (1, -1.0)]).unwrap();
        assert!(snr_scale(&x, &s, 1.0, 1.0).is_err());
    }

    #[test]
    fn noise_variance_matches_sigma() {
        let sigma = 1.7;
        let w = gaussian_noise(100_000, sigma, 99);
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.02, "{var}");
        assert_eq!(w, gaussian_noise(100_000, sigma, 99));
    }

    #[test]
    fn random_supports() {
        let mut rng = seed::rng(4);
        let s = SparseSignal::random_signs(64, 3, SupportRule::Random, &mut rng).unwrap();
        assert_eq!(s.k0(), 3);
        assert!(s.values().iter().all(|v| v.abs() == 1.0));
        let f = SparseSignal::random_signs(64, 3, SupportRule::FixedPrefix, &mut rng).unwrap();
        assert_eq!(f.support(), &[0, 1, 2]);
    }
}
