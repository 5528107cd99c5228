//! Exact optimal budget-balanced taxation under linear demand.
//!
//! The planner maximizes consumer surplus subject to the pricing-game
//! equilibrium and ⟨τ, q⟩ = 0. In the eigenbundle basis the optimum is
//! characterized by a scalar shadow price z: the unique positive root of
//!
//!   Σ_ℓ (q̄⁰_ℓ)² (z - λ_ℓ) / ((1 - λ_ℓ)(2z - λ_ℓ)²) = 0,
//!
//! found here by bisection between the asymptote at λ*/2 and a sign-change
//! point grown geometrically from λ_max. Requires strictly negative
//! definite spillovers (all λ < 1); semidefinite markets are rejected.

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::market::NormalizedMarket;
use crate::spectral::SpectralDecomposition;

/// Absolute bisection tolerance on the shadow price. Tight enough that the
/// bundle-revenue identity holds to 1e-8 even for large quantity vectors.
pub const SHADOW_PRICE_TOL: f64 = 1e-14;
/// Lemma-based and re-solved post-tax quantities must agree this closely.
pub const RESOLVE_AGREEMENT_TOL: f64 = 1e-6;

/// The exact optimal budget-balanced plan.
#[derive(Debug, Clone)]
pub struct GlobalPlan {
    /// Shadow price of the budget constraint.
    pub shadow_price: f64,
    /// Interval certified to contain the shadow price.
    pub bracket: (f64, f64),
    /// Optimal taxes per eigenbundle.
    pub tau_eigen: Vec<f64>,
    /// The same taxes in product space, Uτ.
    pub tau_product: Vec<f64>,
    /// Post-intervention eigenbundle quantities q̄_ℓ = q̄⁰_ℓ z/(2z - λ_ℓ).
    pub post_bundle_quantities: Vec<f64>,
    /// Revenue collected from each eigenbundle, q̄_ℓ τ̄_ℓ; sums to zero.
    pub bundle_revenue: Vec<f64>,
    pub cs_pre: f64,
    pub cs_post: f64,
}

fn check_strictly_stable(pass_through: &[f64]) -> Result<()> {
    if let Some((l, &lam)) = pass_through
        .iter()
        .enumerate()
        .find(|(_, &lam)| !(lam > 0.0 && lam < 1.0 - 1e-12))
    {
        return Err(Error::NotStrictlyStable(format!(
            "pass-through λ[{l}] = {lam} is not in (0, 1); the exact plan needs strictly \
             negative definite spillovers (use the small-intervention analysis instead)"
        )));
    }
    Ok(())
}

/// Budget-balance residual as a function of a candidate shadow price.
fn shadow_objective(z: f64, bundle_q0: &[f64], pass_through: &[f64]) -> f64 {
    let mut s = 0.0;
    for (q, &lam) in bundle_q0.iter().zip(pass_through) {
        if *q == 0.0 {
            continue;
        }
        let d = 2.0 * z - lam;
        s += q * q * (z - lam) / ((1.0 - lam) * d * d);
    }
    s
}

/// Solves for the shadow price. Returns the root and the certified bracket.
pub fn shadow_price_global(bundle_q0: &[f64], pass_through: &[f64]) -> Result<(f64, (f64, f64))> {
    if bundle_q0.len() != pass_through.len() {
        return Err(Error::DimensionMismatch {
            expected: pass_through.len(),
            got: bundle_q0.len(),
        });
    }
    check_strictly_stable(pass_through)?;
    let support: Vec<usize> = (0..bundle_q0.len())
        .filter(|&l| bundle_q0[l] != 0.0)
        .collect();
    if support.is_empty() {
        return Err(Error::AllQuantitiesZero);
    }
    // largest pass-through carrying quantity; the objective has its last
    // asymptote at half this value and is negative just above it
    let lam_star = support
        .iter()
        .map(|&l| pass_through[l])
        .fold(f64::MIN, f64::max);
    if support.len() == 1 || support.iter().all(|&l| pass_through[l] == lam_star) {
        // every term vanishes exactly at z = λ*
        return Ok((lam_star, (lam_star, lam_star)));
    }
    let mut lo = lam_star / 2.0 * (1.0 + 1e-12);
    // guard: step closer to the asymptote if rounding left the objective
    // non-negative at the initial lower end
    let mut guard = 0;
    while shadow_objective(lo, bundle_q0, pass_through) >= 0.0 {
        lo = 0.5 * (lo + lam_star / 2.0);
        guard += 1;
        if guard > 60 {
            return Err(Error::ConvergenceFailure(
                "could not bracket the shadow price from below".into(),
            ));
        }
    }
    let lam_max = pass_through.iter().fold(f64::MIN, |m, &l| m.max(l));
    let mut hi = lam_max;
    guard = 0;
    while shadow_objective(hi, bundle_q0, pass_through) < 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::ConvergenceFailure(
                "could not bracket the shadow price from above".into(),
            ));
        }
    }
    let bracket = (lo, hi);
    let (mut lo, mut hi) = bracket;
    while hi - lo > SHADOW_PRICE_TOL {
        let mid = 0.5 * (lo + hi);
        if shadow_objective(mid, bundle_q0, pass_through) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), bracket))
}

/// Optimal taxes τ̄_ℓ = q̄⁰_ℓ (z - λ_ℓ)/((1 - λ_ℓ)(2z - λ_ℓ)); zero where the
/// bundle carries no quantity.
pub fn optimal_global_taxes(bundle_q0: &[f64], pass_through: &[f64], z: f64) -> Vec<f64> {
    bundle_q0
        .iter()
        .zip(pass_through)
        .map(|(q, &lam)| {
            if *q == 0.0 {
                0.0
            } else {
                q * (z - lam) / ((1.0 - lam) * (2.0 * z - lam))
            }
        })
        .collect()
}

/// Post-tax eigenbundle quantities at the optimum, q̄_ℓ = q̄⁰_ℓ · z/(2z - λ_ℓ).
/// Valid only when the taxes come from [`optimal_global_taxes`] at this `z`.
pub fn post_tax_bundle_quantities(bundle_q0: &[f64], pass_through: &[f64], z: f64) -> Vec<f64> {
    bundle_q0
        .iter()
        .zip(pass_through)
        .map(|(q, &lam)| q * z / (2.0 * z - lam))
        .collect()
}

/// Post-tax eigenbundle quantities for an arbitrary eigenbundle tax vector:
/// q̄_ℓ = q̄⁰_ℓ + (λ_ℓ - 1) τ̄_ℓ, the exact linear-demand response.
pub fn bundle_quantity_response(
    bundle_q0: &[f64],
    pass_through: &[f64],
    tau_eigen: &[f64],
) -> Vec<f64> {
    bundle_q0
        .iter()
        .zip(pass_through)
        .zip(tau_eigen)
        .map(|((q, &lam), t)| q + (lam - 1.0) * t)
        .collect()
}

/// Solves the full plan for a market: shadow price, taxes, post-tax
/// quantities (checked against an independent equilibrium re-solve), and
/// the surplus change.
pub fn plan_global(m: &NormalizedMarket, dec: &SpectralDecomposition) -> Result<GlobalPlan> {
    let bundle_q0 = dec.bundle_quantities();
    let (z, bracket) = shadow_price_global(bundle_q0, dec.pass_through())?;
    let tau_eigen = optimal_global_taxes(bundle_q0, dec.pass_through(), z);
    let plan = apply_global_plan(m, dec, z, bracket, tau_eigen)?;
    // at the optimum the general response collapses to q̄⁰ z/(2z - λ)
    debug_assert!({
        let shortcut = post_tax_bundle_quantities(bundle_q0, dec.pass_through(), z);
        crate::linalg::max_abs_diff(&plan.post_bundle_quantities, &shortcut) < 1e-7
    });
    Ok(plan)
}

/// Completes a plan from its shadow price and eigenbundle taxes. The
/// lemma-based post-tax quantities must agree with re-solving the pricing
/// game under Uτ̄; disagreement beyond [`RESOLVE_AGREEMENT_TOL`] is an error.
pub fn apply_global_plan(
    m: &NormalizedMarket,
    dec: &SpectralDecomposition,
    z: f64,
    bracket: (f64, f64),
    tau_eigen: Vec<f64>,
) -> Result<GlobalPlan> {
    let bundle_q0 = dec.bundle_quantities();
    let post_lemma = bundle_quantity_response(bundle_q0, dec.pass_through(), &tau_eigen);
    let tau_product = dec.from_eigenbasis(&tau_eigen)?;
    let eq = m.solve_equilibrium(&tau_product)?;
    let post_resolved = dec.to_eigenbasis(&eq.quantity)?;
    let gap = crate::linalg::max_abs_diff(&post_lemma, &post_resolved);
    if gap > RESOLVE_AGREEMENT_TOL {
        return Err(Error::ConsistencyFailure(format!(
            "post-tax bundle quantities disagree by {gap:.3e} between the closed form \
             and the re-solved equilibrium"
        )));
    }
    let q0_product = dec.from_eigenbasis(bundle_q0)?;
    let cs_pre = m.consumer_surplus(&q0_product)?;
    let cs_post = m.consumer_surplus(&eq.quantity)?;
    let bundle_revenue: Vec<f64> = post_lemma
        .iter()
        .zip(&tau_eigen)
        .map(|(q, t)| q * t)
        .collect();
    Ok(GlobalPlan {
        shadow_price: z,
        bracket,
        tau_eigen,
        tau_product,
        post_bundle_quantities: post_lemma,
        bundle_revenue,
        cs_pre,
        cs_post,
    })
}

impl GlobalPlan {
    /// Total revenue across eigenbundles; zero at the optimum.
    pub fn total_revenue(&self) -> f64 {
        self.bundle_revenue.iter().sum()
    }

    pub fn surplus_gain(&self) -> f64 {
        self.cs_post - self.cs_pre
    }
}

/// Residual of the shadow-price equation at `z`, scaled by Σ(q̄⁰)²; small at
/// the returned root.
pub fn shadow_residual(bundle_q0: &[f64], pass_through: &[f64], z: f64) -> f64 {
    let scale: f64 = bundle_q0.iter().map(|q| q * q).sum();
    if scale == 0.0 {
        return 0.0;
    }
    shadow_objective(z, bundle_q0, pass_through) / scale
}

/// Exact budget of a product-space tax vector at its re-solved equilibrium.
pub fn resolve_budget(m: &NormalizedMarket, tau_product: &[f64]) -> Result<f64> {
    let eq = m.solve_equilibrium(tau_product)?;
    Ok(dot(tau_product, &eq.quantity))
}
