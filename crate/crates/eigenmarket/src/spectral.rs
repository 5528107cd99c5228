//! Eigenbundle decomposition of the normalized spillover matrix.
//!
//! The spillover matrix D = UΣUᵀ defines an orthonormal basis of
//! "eigenbundles": bundles of goods with the property that a cost or tax
//! change on one bundle passes through only to that bundle's own price,
//! with pass-through coefficient λ = 1/(1-σ). Eigenvalues are kept in
//! ascending order, so pass-throughs are ascending as well.

use crate::error::{Error, Result};
use crate::linalg::{dot, eigen_symmetric, Matrix};
use crate::market::DEFINITENESS_TOL;

/// Bundle quantities with absolute value at or below this are treated as
/// zero (sign-convention tie-break and support restriction).
pub const BUNDLE_ZERO_TOL: f64 = 1e-12;

/// Orthonormal eigenbundle basis of a normalized spillover matrix, together
/// with the pre-intervention bundle quantities that fix the sign convention.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    basis: Matrix,
    pass_through: Vec<f64>,
    inverse_pass_through: Vec<f64>,
    bundle_quantities: Vec<f64>,
}

/// Decomposes `d_norm` and orients each eigenbundle so its equilibrium
/// quantity ⟨u, q0⟩ is non-negative. Exact ties are resolved by making the
/// first non-zero entry of the bundle positive.
pub fn decompose(d_norm: &Matrix, q0: &[f64]) -> Result<SpectralDecomposition> {
    let n = d_norm.rows();
    if !d_norm.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: d_norm.cols(),
        });
    }
    if q0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q0.len(),
        });
    }
    for i in 0..n {
        if (d_norm.get(i, i) + 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMarket(format!(
                "spillover diagonal D[{i}][{i}] = {} is not -1; normalize first",
                d_norm.get(i, i)
            )));
        }
    }
    let (mut eigenvalues, mut basis) = eigen_symmetric(d_norm)?;
    if let Some(&bad) = eigenvalues.iter().find(|&&s| s > DEFINITENESS_TOL) {
        return Err(Error::NotNegativeDefinite(format!(
            "eigenvalue {bad:.6e} > 0"
        )));
    }
    // roundoff can leave tiny positive eigenvalues at the semidefinite boundary
    for s in eigenvalues.iter_mut() {
        if *s > 0.0 {
            *s = 0.0;
        }
    }
    for l in 0..n {
        let col = basis.column(l);
        let proj = dot(&col, q0);
        if proj < -BUNDLE_ZERO_TOL {
            basis.flip_column_sign(l);
        } else if proj.abs() <= BUNDLE_ZERO_TOL {
            if let Some(first) = col.iter().find(|v| v.abs() > BUNDLE_ZERO_TOL) {
                if *first < 0.0 {
                    basis.flip_column_sign(l);
                }
            }
        }
    }
    let mut bundle_quantities = basis.tr_matvec(q0);
    for q in bundle_quantities.iter_mut() {
        if q.abs() <= BUNDLE_ZERO_TOL {
            *q = 0.0;
        }
    }
    let pass_through: Vec<f64> = eigenvalues.iter().map(|s| 1.0 / (1.0 - s)).collect();
    let inverse_pass_through: Vec<f64> = eigenvalues.iter().map(|s| 1.0 - s).collect();
    Ok(SpectralDecomposition {
        eigenvalues,
        basis,
        pass_through,
        inverse_pass_through,
        bundle_quantities,
    })
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues σ of D, ascending, all ≤ 0.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal basis; column ℓ is eigenbundle ℓ.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Pass-throughs λ = 1/(1-σ), ascending, in (0, 1].
    pub fn pass_through(&self) -> &[f64] {
        &self.pass_through
    }

    /// Inverse pass-throughs 1-σ = 1/λ.
    pub fn inverse_pass_through(&self) -> &[f64] {
        &self.inverse_pass_through
    }

    /// Pre-intervention equilibrium quantities of the eigenbundles (≥ 0).
    pub fn bundle_quantities(&self) -> &[f64] {
        &self.bundle_quantities
    }

    /// Indices ℓ with bundle quantity treated as zero.
    pub fn zero_bundles(&self) -> Vec<usize> {
        self.bundle_quantities
            .iter()
            .enumerate()
            .filter(|(_, q)| **q == 0.0)
            .map(|(l, _)| l)
            .collect()
    }

    /// x̄ = Uᵀx.
    pub fn to_eigenbasis(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(self.basis.tr_matvec(x))
    }

    /// x = Ux̄.
    pub fn from_eigenbasis(&self, x_eigen: &[f64]) -> Result<Vec<f64>> {
        if x_eigen.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x_eigen.len(),
            });
        }
        Ok(self.basis.matvec(x_eigen))
    }

    /// Sample variance of the eigenvalues, (1/N)Σσ² - ((1/N)Σσ)².
    pub fn eigenvalue_variance(&self) -> f64 {
        let n = self.n() as f64;
        let mean = self.eigenvalues.iter().sum::<f64>() / n;
        let mean_sq = self.eigenvalues.iter().map(|s| s * s).sum::<f64>() / n;
        mean_sq - mean * mean
    }

    /// First-order response of prices and consumer surplus to a cost change:
    /// ṗ = U diag(λ) Uᵀ ċ and Ċ = -⟨ṗ, q0⟩.
    pub fn first_order_response(&self, c_dot: &[f64], q0: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.n();
        if c_dot.len() != n || q0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c_dot.len().max(q0.len()),
            });
        }
        let mut c_eigen = self.basis.tr_matvec(c_dot);
        for (c, l) in c_eigen.iter_mut().zip(&self.pass_through) {
            *c *= l;
        }
        let p_dot = self.basis.matvec(&c_eigen);
        let cs_dot = -dot(&p_dot, q0);
        Ok((p_dot, cs_dot))
    }
}

/// Eigenvalue variance computed from the matrix entries instead of the
/// spectrum: (1/N)Σ_{i≠j} D_ij². Agrees with
/// [`SpectralDecomposition::eigenvalue_variance`] for any symmetric matrix
/// with diagonal -1; the two routes cross-check each other in tests.
pub fn eigenvalue_variance_from_entries(d_norm: &Matrix) -> f64 {
    let n = d_norm.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += d_norm.get(i, j) * d_norm.get(i, j);
            }
        }
    }
    s / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn triangle(g: f64) -> Matrix {
        Matrix::from_rows(&[
            vec![-1.0, 0.0, -g],
            vec![0.0, -1.0, -g],
            vec![-g, -g, -1.0],
        ])
        .unwrap()
    }

    fn minus_identity(n: usize) -> Matrix {
        let mut m = Matrix::identity(n);
        for i in 0..n {
            m.set(i, i, -1.0);
        }
        m
    }

    #[test]
    fn independent_goods_decomposition() {
        let dec = decompose(&minus_identity(3), &[5.0, 5.0, 5.0]).unwrap();
        assert!(max_abs_diff(dec.eigenvalues(), &[-1.0, -1.0, -1.0]) < 1e-14);
        assert!(max_abs_diff(dec.pass_through(), &[0.5, 0.5, 0.5]) < 1e-14);
        // canonical basis comes back for a diagonal matrix
        for l in 0..3 {
            let col = dec.basis().column(l);
            assert!((col.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_triangle_spectrum_is_exact() {
        // coupling 1/sqrt2: spectrum (-2, -1, 0), pass-throughs (1/3, 1/2, 1)
        let g = 1.0 / 2.0_f64.sqrt();
        let q0 = [5.69, 5.69, 8.05];
        let dec = decompose(&triangle(g), &q0).unwrap();
        assert!(max_abs_diff(dec.eigenvalues(), &[-2.0, -1.0, 0.0]) < 1e-12);
        assert!(max_abs_diff(dec.pass_through(), &[1.0 / 3.0, 0.5, 1.0]) < 1e-12);
        // eigenbundles up to sign: (.5,.5,1/√2), (1/√2,-1/√2,0), (.5,.5,-1/√2)
        let r = 1.0 / 2.0_f64.sqrt();
        let want = [
            vec![0.5, 0.5, r],
            vec![r, -r, 0.0],
            vec![0.5, 0.5, -r],
        ];
        for l in 0..3 {
            let col = dec.basis().column(l);
            let direct: f64 = max_abs_diff(&col, &want[l]);
            let flipped: f64 =
                max_abs_diff(&col.iter().map(|v| -v).collect::<Vec<_>>(), &want[l]);
            assert!(direct.min(flipped) < 1e-10, "bundle {l}: {col:?}");
        }
    }

    #[test]
    fn g_triangle_pass_throughs() {
        let q0 = [2.96, 2.96, 2.1496];
        let dec = decompose(&triangle(0.5), &q0).unwrap();
        let s = 2.0_f64.sqrt() * 0.5;
        let want = [1.0 / (2.0 + s), 0.5, 1.0 / (2.0 - s)];
        assert!(max_abs_diff(dec.pass_through(), &want) < 1e-12);
    }

    #[test]
    fn sign_convention_makes_bundle_quantities_nonnegative() {
        let q0 = [2.96, 2.96, 2.1496];
        let dec = decompose(&triangle(0.5), &q0).unwrap();
        for &q in dec.bundle_quantities() {
            assert!(q >= 0.0);
        }
        // symmetric q0 zeroes the (1,-1,0)/√2 bundle exactly
        assert_eq!(dec.bundle_quantities()[1], 0.0);
        assert_eq!(dec.zero_bundles(), vec![1]);
        // tie-break: first non-zero entry of that bundle is positive
        let col = dec.basis().column(1);
        assert!(col[0] > 0.0);
    }

    #[test]
    fn eigen_roundtrip() {
        let dec = decompose(&triangle(0.3), &[1.0, 2.0, 3.0]).unwrap();
        let x = [0.7, -1.3, 2.1];
        let back = dec.from_eigenbasis(&dec.to_eigenbasis(&x).unwrap()).unwrap();
        assert!(max_abs_diff(&back, &x) < 1e-12);
    }

    #[test]
    fn variance_identities() {
        // independent goods: zero variance
        let dec = decompose(&minus_identity(4), &[1.0; 4]).unwrap();
        assert!(dec.eigenvalue_variance().abs() < 1e-14);
        // g-triangle: 4g²/3 both ways
        for &g in &[0.2, 0.5, 1.0 / 2.0_f64.sqrt()] {
            let d = triangle(g);
            let dec = decompose(&d, &[1.0, 1.0, 1.0]).unwrap();
            let want = 4.0 * g * g / 3.0;
            assert!((dec.eigenvalue_variance() - want).abs() < 1e-12, "g={g}");
            assert!((eigenvalue_variance_from_entries(&d) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn variance_is_even_in_coupling_sign() {
        let plus = triangle(0.4);
        let minus = triangle(-0.4);
        // entry route is bit-exact under sign flips
        assert_eq!(
            eigenvalue_variance_from_entries(&plus),
            eigenvalue_variance_from_entries(&minus)
        );
    }

    #[test]
    fn first_order_response_boundary_triangle() {
        // cost bump on good 3: ṗ = (-1/(3√2), -1/(3√2), 2/3)
        let g = 1.0 / 2.0_f64.sqrt();
        let q0 = [5.69, 5.69, 8.05];
        let dec = decompose(&triangle(g), &q0).unwrap();
        let (p_dot, cs_dot) = dec.first_order_response(&[0.0, 0.0, 1.0], &q0).unwrap();
        let s = 1.0 / (3.0 * 2.0_f64.sqrt());
        assert!(max_abs_diff(&p_dot, &[-s, -s, 2.0 / 3.0]) < 1e-12);
        let want = -s * ((4.0 / 2.0_f64.sqrt()) * q0[2] - (q0[0] + q0[1]));
        assert!((cs_dot - want).abs() < 1e-12);
    }

    #[test]
    fn zero_cost_change_gives_zero_response() {
        let dec = decompose(&triangle(0.5), &[1.0, 1.0, 1.0]).unwrap();
        let (p_dot, cs_dot) = dec.first_order_response(&[0.0; 3], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(p_dot, vec![0.0; 3]);
        assert_eq!(cs_dot, 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let dec = decompose(&triangle(0.5), &[1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            dec.to_eigenbasis(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unnormalized_matrix_is_rejected() {
        let mut d = minus_identity(2);
        d.set(0, 0, -2.0);
        assert!(decompose(&d, &[1.0, 1.0]).is_err());
    }
}
