//! Generators for the bundled three-product market families.
//!
//! Both families share the same shape: goods 1 and 2 are mutually
//! independent and good 3 is coupled to each with strength g. Consumption
//! complements show up as negative spillover entries (strategic
//! substitutes in the pricing game), substitutes as positive entries.
//! Negative semidefiniteness requires |g| ≤ 1/√2; the `triangle-3.2`
//! preset sits exactly on that boundary.

use crate::error::{Error, Result};
use crate::io::{MarketFile, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingSign {
    /// Good 3 is a consumption complement of goods 1 and 2 (entries -g).
    Complements,
    /// Good 3 is a consumption substitute (entries +g).
    Substitutes,
}

pub const MAX_COUPLING: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// The three-product family with coupling strength `g` in [0, 1/√2].
pub fn g_triangle(
    g: f64,
    sign: CouplingSign,
    beta: Option<Vec<f64>>,
    cost: Option<Vec<f64>>,
) -> Result<MarketFile> {
    if !g.is_finite() || g < 0.0 {
        return Err(Error::RangeError(format!(
            "coupling g = {g} must be a finite non-negative number"
        )));
    }
    if g > MAX_COUPLING * (1.0 + 1e-12) {
        return Err(Error::RangeError(format!(
            "coupling g = {g} exceeds 1/sqrt(2) ~= {MAX_COUPLING:.6}; the spillover \
             matrix would not be negative semidefinite"
        )));
    }
    let beta = beta.unwrap_or_else(|| vec![10.0, 10.0, 15.0]);
    let cost = cost.unwrap_or_else(|| vec![0.0; 3]);
    if beta.len() != 3 || cost.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: beta.len().max(cost.len()),
        });
    }
    let e = match sign {
        CouplingSign::Complements => -g,
        CouplingSign::Substitutes => g,
    };
    Ok(MarketFile {
        schema_version: SCHEMA_VERSION,
        n: 3,
        label: Some(format!(
            "three-product market, g = {g} ({})",
            match sign {
                CouplingSign::Complements => "complements",
                CouplingSign::Substitutes => "substitutes",
            }
        )),
        beta,
        cost,
        b_matrix: None,
        d_matrix: Some(vec![
            vec![-1.0, 0.0, e],
            vec![0.0, -1.0, e],
            vec![e, e, -1.0],
        ]),
    })
}

/// Boundary complement triangle (g = 1/√2): two independent goods plus a
/// common complement, with eigenvalues (-2, -1, 0).
pub fn triangle_boundary(beta: Option<Vec<f64>>, cost: Option<Vec<f64>>) -> Result<MarketFile> {
    let mut f = g_triangle(
        MAX_COUPLING,
        CouplingSign::Complements,
        Some(beta.unwrap_or_else(|| vec![10.0, 10.0, 10.0])),
        cost,
    )?;
    f.label = Some("three-product boundary triangle (coupling 1/sqrt 2)".into());
    Ok(f)
}

/// Fully independent goods, D = -I.
pub fn independent_goods(n: usize, beta: Option<Vec<f64>>, cost: Option<Vec<f64>>) -> Result<MarketFile> {
    if n == 0 {
        return Err(Error::RangeError("need at least one good".into()));
    }
    let beta = beta.unwrap_or_else(|| vec![10.0; n]);
    let cost = cost.unwrap_or_else(|| vec![0.0; n]);
    if beta.len() != n || cost.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: beta.len().max(cost.len()),
        });
    }
    let mut d = vec![vec![0.0; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = -1.0;
    }
    Ok(MarketFile {
        schema_version: SCHEMA_VERSION,
        n,
        label: Some("independent goods".into()),
        beta,
        cost,
        b_matrix: None,
        d_matrix: Some(d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_triangle_has_expected_entries() {
        let f = triangle_boundary(None, None).unwrap();
        let d = f.d_matrix.as_ref().unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        assert!((d[0][2] + r).abs() < 1e-15);
        assert!((d[1][2] + r).abs() < 1e-15);
        assert_eq!(d[0][1], 0.0);
        f.to_spec().unwrap().normalize().unwrap();
    }

    #[test]
    fn sign_flag_controls_off_diagonals() {
        let c = g_triangle(0.5, CouplingSign::Complements, None, None).unwrap();
        let s = g_triangle(0.5, CouplingSign::Substitutes, None, None).unwrap();
        assert_eq!(c.d_matrix.as_ref().unwrap()[0][2], -0.5);
        assert_eq!(s.d_matrix.as_ref().unwrap()[0][2], 0.5);
    }

    #[test]
    fn oversized_coupling_is_rejected() {
        assert!(matches!(
            g_triangle(0.9, CouplingSign::Complements, None, None),
            Err(Error::RangeError(_))
        ));
    }

    #[test]
    fn generated_markets_validate() {
        for &g in &[0.0, 0.25, 0.5, MAX_COUPLING] {
            let f = g_triangle(g, CouplingSign::Complements, None, None).unwrap();
            f.to_spec().unwrap().normalize().unwrap();
        }
        independent_goods(4, None, None)
            .unwrap()
            .to_spec()
            .unwrap()
            .normalize()
            .unwrap();
    }
}
