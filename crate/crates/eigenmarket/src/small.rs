//! Closed-form optimal small interventions for a risk-averse planner.
//!
//! In the large-risk-aversion limit the optimal budget-balanced target
//! taxes have an explicit form per eigenbundle: bundles with pass-through
//! below the shadow price z are taxed, bundles above it are subsidized,
//! and the achievable surplus gain scales with the eigenvalue variance.

use crate::error::{Error, Result};
use crate::spectral::SpectralDecomposition;

/// Shadow price of the budget constraint in the small-intervention limit.
#[derive(Debug, Clone)]
pub struct SmallShadowPrice {
    /// z = 1/(2 + var[σ]/2); lies in (0, ½], equals ½ iff var[σ] = 0.
    pub full_support: f64,
    /// Recomputed over bundles with positive quantity when some bundle
    /// quantity is zero; `None` when all bundles carry quantity.
    pub restricted: Option<f64>,
    /// Bundles with zero equilibrium quantity, excluded from the budget FOC.
    pub excluded: Vec<usize>,
}

impl SmallShadowPrice {
    /// The value the tax formula actually uses.
    pub fn effective(&self) -> f64 {
        self.restricted.unwrap_or(self.full_support)
    }
}

/// z = [2 + var[σ]/2]⁻¹, plus the restricted-support variant when some
/// eigenbundle has zero equilibrium quantity.
pub fn shadow_price_small(dec: &SpectralDecomposition) -> SmallShadowPrice {
    let full_support = 1.0 / (2.0 + 0.5 * dec.eigenvalue_variance());
    let excluded = dec.zero_bundles();
    let restricted = if excluded.is_empty() {
        None
    } else {
        // budget FOC restricted to the support: z Σ'λ⁻² - Σ'λ⁻¹ = 0
        let mut sum_mu = 0.0;
        let mut sum_mu_sq = 0.0;
        for (l, &mu) in dec.inverse_pass_through().iter().enumerate() {
            if dec.bundle_quantities()[l] > 0.0 {
                sum_mu += mu;
                sum_mu_sq += mu * mu;
            }
        }
        Some(sum_mu / sum_mu_sq)
    };
    SmallShadowPrice {
        full_support,
        restricted,
        excluded,
    }
}

/// Optimal small target taxes at finite risk aversion.
#[derive(Debug, Clone)]
pub struct SmallPlan {
    /// Shadow price used by the tax formula (restricted-support when some
    /// bundle quantity is zero).
    pub shadow_price: f64,
    /// Theorem value 1/(2 + var/2), kept for reporting.
    pub shadow_price_full_support: f64,
    /// Target taxes per eigenbundle.
    pub tau_eigen: Vec<f64>,
    /// The same targets mapped to product space, Uτ̄.
    pub tau_product: Vec<f64>,
    /// Limiting scaled surplus gain, N·var[σ]/(4 + var[σ]).
    pub leverage: f64,
    pub risk_aversion: f64,
    /// Bundles with zero quantity; their target tax is zero.
    pub excluded: Vec<usize>,
}

/// Target taxes τ̄_ℓ = (z - λ_ℓ)/(a λ_ℓ² q̄_ℓ) on the support, zero on
/// excluded bundles. 1/a-homogeneous: doubling `risk_aversion` halves all
/// targets.
pub fn optimal_small_taxes(
    dec: &SpectralDecomposition,
    risk_aversion: f64,
) -> Result<SmallPlan> {
    if !(risk_aversion > 0.0) {
        return Err(Error::InvalidRiskAversion(risk_aversion));
    }
    let shadow = shadow_price_small(dec);
    let z = shadow.effective();
    let mut tau_eigen = vec![0.0; dec.n()];
    for l in 0..dec.n() {
        let q = dec.bundle_quantities()[l];
        if q > 0.0 {
            let mu = dec.inverse_pass_through()[l];
            // (z - λ)/(λ² q) written with μ = 1/λ for numerical clarity
            tau_eigen[l] = (z - dec.pass_through()[l]) * mu * mu / (risk_aversion * q);
        }
    }
    let tau_product = dec.from_eigenbasis(&tau_eigen)?;
    Ok(SmallPlan {
        shadow_price: z,
        shadow_price_full_support: shadow.full_support,
        tau_eigen,
        tau_product,
        leverage: pigouvian_leverage(dec),
        risk_aversion,
        excluded: shadow.excluded,
    })
}

/// Limiting scaled consumer-surplus gain of the optimal small scheme,
/// N·var[σ]/(4 + var[σ]).
pub fn pigouvian_leverage(dec: &SpectralDecomposition) -> f64 {
    let var = dec.eigenvalue_variance();
    dec.n() as f64 * var / (4.0 + var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, Matrix};
    use crate::spectral::decompose;

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
    fn independent_goods_have_half_shadow_price_and_no_taxes() {
        let dec = decompose(&minus_identity(3), &[5.0; 3]).unwrap();
        let shadow = shadow_price_small(&dec);
        assert_eq!(shadow.full_support, 0.5);
        assert!(shadow.restricted.is_none());
        let plan = optimal_small_taxes(&dec, 1.0).unwrap();
        assert!(max_abs_diff(&plan.tau_eigen, &[0.0; 3]) < 1e-15);
        assert_eq!(plan.leverage, 0.0);
    }

    #[test]
    fn g_triangle_shadow_price_formula() {
        // z(g) = 3/(6 + 2g²); all bundle quantities positive here
        for &g in &[0.1, 0.3, 0.5, 0.7] {
            let dec = decompose(&triangle(g), &[1.0, 2.0, 3.0]).unwrap();
            let z = shadow_price_small(&dec).full_support;
            assert!((z - 3.0 / (6.0 + 2.0 * g * g)).abs() < 1e-13, "g={g}");
        }
        let dec = decompose(&triangle(0.5), &[1.0, 2.0, 3.0]).unwrap();
        assert!((shadow_price_small(&dec).full_support - 3.0 / 6.5).abs() < 1e-13);
    }

    #[test]
    fn boundary_triangle_shadow_price() {
        // var = 2/3 at coupling 1/sqrt2, so z = 3/7
        let dec = decompose(&triangle(1.0 / 2.0_f64.sqrt()), &[1.0, 2.0, 3.0]).unwrap();
        assert!((shadow_price_small(&dec).full_support - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn restricted_support_plan_balances_budget() {
        // symmetric q0 zeroes bundle 2; restricted z' = 4/9 at g = 0.5
        let q0 = [2.96, 2.96, 2.1496];
        let dec = decompose(&triangle(0.5), &q0).unwrap();
        let shadow = shadow_price_small(&dec);
        assert_eq!(shadow.excluded, vec![1]);
        let zr = shadow.restricted.unwrap();
        assert!((zr - 4.0 / 9.0).abs() < 1e-12);

        let plan = optimal_small_taxes(&dec, 1.0).unwrap();
        assert_eq!(plan.tau_eigen[1], 0.0);
        // taxed below z, subsidized above
        assert!(plan.tau_eigen[0] > 0.0);
        assert!(plan.tau_eigen[2] < 0.0);
        // first-order budget over the support
        let budget: f64 = dec
            .bundle_quantities()
            .iter()
            .zip(&plan.tau_eigen)
            .map(|(q, t)| q * t)
            .sum();
        assert!(budget.abs() < 1e-10);
        // against the closed form: q̄ τ̄ = (z - λ) μ²  (a = 1)
        for l in [0usize, 2] {
            let want = (zr - dec.pass_through()[l]) * dec.inverse_pass_through()[l].powi(2);
            let got = dec.bundle_quantities()[l] * plan.tau_eigen[l];
            assert!((got - want).abs() < 1e-10, "bundle {l}");
        }
    }

    #[test]
    fn taxes_scale_inversely_with_risk_aversion() {
        let dec = decompose(&triangle(0.4), &[1.0, 2.0, 3.0]).unwrap();
        let a1 = optimal_small_taxes(&dec, 10.0).unwrap();
        let a2 = optimal_small_taxes(&dec, 20.0).unwrap();
        for l in 0..3 {
            assert!((a1.tau_eigen[l] - 2.0 * a2.tau_eigen[l]).abs() < 1e-15);
        }
    }

    #[test]
    fn leverage_values_and_monotonicity() {
        // boundary triangle: var = 2/3, N = 3, leverage = 3/7
        let dec = decompose(&triangle(1.0 / 2.0_f64.sqrt()), &[1.0, 2.0, 3.0]).unwrap();
        assert!((pigouvian_leverage(&dec) - 3.0 / 7.0).abs() < 1e-12);
        let mut last = -1.0;
        for &g in &[0.0, 0.2, 0.4, 0.6, 0.7] {
            let dec = decompose(&triangle(g), &[1.0, 2.0, 3.0]).unwrap();
            let lev = pigouvian_leverage(&dec);
            assert!(lev > last, "leverage must increase with |g|");
            last = lev;
        }
    }

    #[test]
    fn limit_surplus_identity_full_support() {
        // a · (-Σ λ q̄ τ̄) = Σ(1 - z/λ) = N var/(4+var) when all q̄ > 0
        let dec = decompose(&triangle(0.45), &[1.3, 2.2, 3.1]).unwrap();
        assert!(dec.zero_bundles().is_empty());
        let a = 37.0;
        let plan = optimal_small_taxes(&dec, a).unwrap();
        let first_order: f64 = dec
            .pass_through()
            .iter()
            .zip(dec.bundle_quantities())
            .zip(&plan.tau_eigen)
            .map(|((l, q), t)| -l * q * t)
            .sum();
        assert!((a * first_order - pigouvian_leverage(&dec)).abs() < 1e-9);
    }

    #[test]
    fn nonpositive_risk_aversion_is_rejected() {
        let dec = decompose(&minus_identity(2), &[1.0, 1.0]).unwrap();
        assert!(matches!(
            optimal_small_taxes(&dec, 0.0),
            Err(Error::InvalidRiskAversion(_))
        ));
        assert!(matches!(
            optimal_small_taxes(&dec, -1.0),
            Err(Error::InvalidRiskAversion(_))
        ));
    }
}
