//! Small dense matrices: LU solves and a cyclic Jacobi eigensolver.
//!
//! Everything here works on row-major `f64` storage. Markets are small
//! (n up to a few hundred), so direct factorizations are the right tool.

use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm below which the Jacobi iteration is converged.
pub const JACOBI_TOL: f64 = 1e-12;
/// Cap on Jacobi sweeps; quadratic convergence makes this generous.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidMarket("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::InvalidMarket(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Multiplies column `j` by -1.
    pub fn flip_column_sign(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = self.get(i, j);
            self.set(i, j, -v);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    /// `self`ᵀ · x without materializing the transpose.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for j in 0..self.cols {
                y[j] += self.get(i, j) * xi;
            }
        }
        y
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Largest absolute asymmetry |a_ij - a_ji| together with its location.
    pub fn max_asymmetry(&self) -> (f64, (usize, usize)) {
        let mut worst = 0.0;
        let mut at = (0, 0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = (self.get(i, j) - self.get(j, i)).abs();
                if d > worst {
                    worst = d;
                    at = (i, j);
                }
            }
        }
        (worst, at)
    }

    /// Replaces the matrix by (M + Mᵀ)/2.
    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm of the off-diagonal part.
    pub fn offdiagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    s += self.get(i, j) * self.get(i, j);
                }
            }
        }
        s.sqrt()
    }

    /// LU factorization with partial pivoting.
    pub fn lu_factor(&self) -> Result<LuFactors> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.max_abs().max(1.0);
        for k in 0..n {
            // pick pivot
            let mut pivot_row = k;
            let mut pivot_val = lu.get(k, k).abs();
            for i in (k + 1)..n {
                let v = lu.get(i, k).abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = i;
                }
            }
            if pivot_val <= 1e-13 * scale {
                return Err(Error::SingularMatrix(format!(
                    "pivot {pivot_val:.3e} at column {k}"
                )));
            }
            if pivot_row != k {
                for j in 0..n {
                    let a = lu.get(k, j);
                    let b = lu.get(pivot_row, j);
                    lu.set(k, j, b);
                    lu.set(pivot_row, j, a);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu.get(k, k);
            for i in (k + 1)..n {
                let factor = lu.get(i, k) / pivot;
                lu.set(i, k, factor);
                for j in (k + 1)..n {
                    let v = lu.get(i, j) - factor * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        Ok(LuFactors { lu, perm })
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.rows;
        let factors = self.lu_factor()?;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = factors.solve(&e);
            e[j] = 0.0;
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
        }
        Ok(inv)
    }
}

/// LU factors of a square matrix, reusable for repeated solves.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Matrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward substitution (unit lower triangle)
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        // back substitution
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        x
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the orthonormal eigenvector
/// matrix with matching columns. Fails with `ConvergenceFailure` if the
/// off-diagonal Frobenius norm does not drop below [`JACOBI_TOL`] within
/// [`JACOBI_MAX_SWEEPS`] sweeps.
pub fn eigen_symmetric(matrix: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch {
            expected: matrix.rows(),
            got: matrix.cols(),
        });
    }
    let n = matrix.rows();
    let mut a = matrix.clone();
    let mut v = Matrix::identity(n);

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if a.offdiagonal_norm() < JACOBI_TOL {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                // tan of the rotation angle, smaller root for stability
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- Jᵀ A J with J = I except J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                // force the annihilated pair to exact zero
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                // accumulate eigenvectors: V <- V J
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged && a.offdiagonal_norm() >= JACOBI_TOL {
        return Err(Error::ConvergenceFailure(format!(
            "off-diagonal norm {:.3e} after {JACOBI_MAX_SWEEPS} sweeps",
            a.offdiagonal_norm()
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .partial_cmp(&a.get(j, j))
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, new_col, v.get(i, old_col));
        }
    }
    Ok((values, vectors))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn lu_solves_known_system() {
        let a = mat(&[&[2.0, 1.0, -1.0], &[-3.0, -1.0, 2.0], &[-2.0, 1.0, 2.0]]);
        let x = a.lu_factor().unwrap().solve(&[8.0, -11.0, -3.0]);
        assert!(max_abs_diff(&x, &[2.0, 3.0, -1.0]) < 1e-12);
    }

    #[test]
    fn lu_rejects_singular() {
        let a = mat(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(a.lu_factor(), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = mat(&[&[1.0, 0.0, 0.5], &[0.0, 1.0, 0.5], &[0.5, 0.5, 1.0]]);
        let inv = a.inverse().unwrap();
        let prod = a.matmul(&inv);
        let id = Matrix::identity(3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((prod.get(i, j) - id.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_diagonal_matrix() {
        let a = mat(&[&[3.0, 0.0], &[0.0, -1.0]]);
        let (vals, vecs) = eigen_symmetric(&a).unwrap();
        assert_eq!(vals, vec![-1.0, 3.0]);
        // columns are +-e2, +-e1
        assert!((vecs.get(1, 0).abs() - 1.0).abs() < 1e-14);
        assert!((vecs.get(0, 1).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_known_2x2() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let a = mat(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let (vals, vecs) = eigen_symmetric(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        let r = 1.0 / 2.0_f64.sqrt();
        assert!((vecs.get(0, 0).abs() - r).abs() < 1e-12);
    }

    #[test]
    fn jacobi_reconstructs_and_is_orthonormal() {
        // deterministic pseudo-random symmetric matrix
        let n = 7;
        let mut a = Matrix::zeros(n, n);
        let mut state: u64 = 0x9e3779b97f4a7c15;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            for j in i..n {
                let v = next();
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        let (vals, u) = eigen_symmetric(&a).unwrap();
        // ascending
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
        // UᵀU = I
        for i in 0..n {
            for j in 0..n {
                let d = dot(&u.column(i), &u.column(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12, "U not orthonormal at ({i},{j})");
            }
        }
        // A u = sigma u
        for l in 0..n {
            let col = u.column(l);
            let au = a.matvec(&col);
            for i in 0..n {
                assert!((au[i] - vals[l] * col[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jacobi_rejects_non_square() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(
            eigen_symmetric(&a),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
