//! Least squares on a growing support.
//!
//! [`LsState`] keeps a thin QR factorization `X_S = Q R` of the selected
//! columns. Adding a column costs `O(n·k)`: one classical Gram-Schmidt pass
//! against `Q` followed by a second reorthogonalization pass.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, DesignMatrix};

/// A column whose component orthogonal to the current span has norm at most
/// this fraction of its own norm is treated as lying in the span.
pub const SPAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LsState {
    support: Vec<usize>,
    /// Orthonormal basis of span(X_S), one vector per support entry.
    basis: Vec<Vec<f64>>,
    /// Column `k` of the upper-triangular `R`, of length `k + 1`.
    r_columns: Vec<Vec<f64>>,
    /// `Qᵀ y`.
    qty: Vec<f64>,
    residual: Vec<f64>,
    residual_norm: f64,
}

impl LsState {
    /// Empty support: the residual is `y` itself.
    pub fn new(y: &[f64]) -> Self {
        Self {
            support: Vec::new(),
            basis: Vec::new(),
            r_columns: Vec::new(),
            qty: Vec::new(),
            residual: y.to_vec(),
            residual_norm: norm(y),
        }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Adds column `j` of `x` to the support.
    pub fn extend(&mut self, x: &DesignMatrix, j: usize) -> Result<()> {
        if j >= x.p() {
            return Err(Error::Domain(format!(
                "column {j} out of range for p={}",
                x.p()
            )));
        }
        if self.support.contains(&j) {
            return Err(Error::Domain(format!(
                "column {j} is already in the support"
            )));
        }
        self.extend_with(j, x.column(j))
    }

    /// Adds an arbitrary column (labelled `label`) to the support.
    ///
    /// On a degenerate column the state is left untouched and
    /// [`Error::DegenerateColumn`] is returned.
    pub fn extend_with(&mut self, label: usize, column: &[f64]) -> Result<()> {
        if column.len() != self.residual.len() {
            return Err(Error::Dimension(format!(
                "column has length {}, observations have length {}",
                column.len(),
                self.residual.len()
            )));
        }
        let col_norm = norm(column);
        let mut v = column.to_vec();
        let mut coeffs = vec![0.0; self.basis.len()];
        for _pass in 0..2 {
            for (c, q) in coeffs.iter_mut().zip(&self.basis) {
                let h = dot(q, &v);
                *c += h;
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= h * qi;
                }
            }
        }
        let rho = norm(&v);
        if !(rho > SPAN_TOL * col_norm) {
            return Err(Error::DegenerateColumn {
                column: label,
                residual_norm: rho,
            });
        }
        v.iter_mut().for_each(|vi| *vi /= rho);

        let step = dot(&v, &self.residual);
        for (ri, qi) in self.residual.iter_mut().zip(&v) {
            *ri -= step * qi;
        }
        self.residual_norm = norm(&self.residual);

        coeffs.push(rho);
        self.r_columns.push(coeffs);
        self.qty.push(step);
        self.basis.push(v);
        self.support.push(label);
        Ok(())
    }

    /// `X_S† y`, ordered like [`LsState::support`].
    pub fn coefficients(&self) -> Vec<f64> {
        let k = self.support.len();
        let mut beta = self.qty.clone();
        for i in (0..k).rev() {
            let mut acc = beta[i];
            for (m, b) in beta.iter().enumerate().take(k).skip(i + 1) {
                acc -= self.r_columns[m][i] * b;
            }
            beta[i] = acc / self.r_columns[i][i];
        }
        beta
    }

    /// `(I - P) v` for the projection `P` onto the current span.
    pub fn project_out(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for _pass in 0..2 {
            for q in &self.basis {
                let h = dot(q, &out);
                for (o, qi) in out.iter_mut().zip(q) {
                    *o -= h * qi;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{model_matrix, MatrixModel};
    use crate::seed;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;

    /// Reference: pseudo-inverse of the selected columns from an SVD.
    fn pinv_solution(x: &DesignMatrix, support: &[usize], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let sub = DMatrix::from_fn(x.n(), support.len(), |i, k| x.column(support[k])[i]);
        let pinv = sub.clone().pseudo_inverse(1e-14).unwrap();
        let yv = DVector::from_column_slice(y);
        let beta = &pinv * &yv;
        let resid = &yv - &sub * &beta;
        (beta.as_slice().to_vec(), resid.as_slice().to_vec())
    }

    #[test]
    fn empty_support_residual_is_observation() {
        let y = [1.0, -2.0, 2.0];
        let s = LsState::new(&y);
        assert_eq!(s.residual(), &y);
        assert_eq!(s.residual_norm(), 3.0);
        assert!(s.coefficients().is_empty());
    }

    #[test]
    fn observation_in_span_leaves_zero_residual() {
        let x = model_matrix(MatrixModel::Gaussian, 10, 5, 1).unwrap();
        let y = x.column(3).to_vec();
        let mut s = LsState::new(&y);
        s.extend(&x, 3).unwrap();
        assert!(s.residual_norm() < 1e-14);
        assert!((s.coefficients()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn agrees_with_pseudo_inverse() {
        for inst in 0..50u64 {
            let x = model_matrix(MatrixModel::Gaussian, 20, 40, seed::derive(17, &[inst])).unwrap();
            let mut rng = seed::rng(inst);
            let y: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut s = LsState::new(&y);
            let picks = rand::seq::index::sample(&mut rng, 40, 10).into_vec();
            for &j in &picks {
                let before = s.residual_norm();
                s.extend(&x, j).unwrap();
                assert!(s.residual_norm() <= before + 1e-12);
                let (beta, resid) = pinv_solution(&x, s.support(), &y);
                for (a, b) in s.coefficients().iter().zip(&beta) {
                    assert!((a - b).abs() <= 1e-8, "instance {inst}: {a} vs {b}");
                }
                for (a, b) in s.residual().iter().zip(&resid) {
                    assert!((a - b).abs() <= 1e-8);
                }
                for &k in s.support() {
                    assert!(
                        dot(x.column(k), s.residual()).abs()
                            <= 1e-10 * s.residual_norm().max(1e-300)
                    );
                }
            }
        }
    }

    #[test]
    fn duplicate_or_dependent_columns_are_rejected() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let x = crate::linalg::normalize_columns(m).unwrap();
        let mut s = LsState::new(&[1.0, 2.0, 3.0]);
        s.extend(&x, 0).unwrap();
        assert!(s.extend(&x, 0).is_err());
        s.extend(&x, 1).unwrap();
        let before = s.clone().coefficients();
        match s.extend(&x, 2) {
            Err(Error::DegenerateColumn { column, .. }) => assert_eq!(column, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.len(), 2);
        assert_eq!(s.coefficients(), before);
    }
}
