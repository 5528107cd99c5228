//! Monte Carlo model of noisy tax implementation under a risk-averse
//! planner, and a numeric optimizer for the planner's problem.
//!
//! The planner announces target taxes; what is implemented is the target
//! scaled by independent mean-one shocks. Every sample re-solves the exact
//! linear-demand equilibrium, so the simulated surplus change carries no
//! first-order approximation and the optimizer can serve as an independent
//! check on the closed-form small-intervention results.
//!
//! The shocks can multiply either the product-space targets or the
//! eigenbundle coordinates of the target. The closed-form analysis treats
//! the planner's problem bundle by bundle, which corresponds to the
//! eigenbundle variant; per-product noise mixes bundles and leads to a
//! different optimum. Both variants are exposed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, LuFactors, Matrix};
use crate::market::NormalizedMarket;
use crate::spectral::{decompose, SpectralDecomposition};

/// Which coordinates of the target the implementation shocks multiply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoiseBasis {
    /// τ_i = τ̄_i η_i per product.
    Product,
    /// τ̄_ℓ η_ℓ per eigenbundle coordinate of the target.
    Eigenbundle,
}

/// Multiplicative implementation noise: i.i.d. draws with mean 1 and the
/// given variance, uniform on [1-w, 1+w] with w = √(3ν²).
#[derive(Debug, Clone, Serialize)]
pub struct NoiseModel {
    pub variance: f64,
    /// Support-bound parameter; recorded for reporting, not used by the
    /// uniform family.
    pub support_bound: f64,
    pub basis: NoiseBasis,
    pub seed: u64,
}

impl NoiseModel {
    pub fn uniform(variance: f64, seed: u64) -> Self {
        NoiseModel {
            variance,
            support_bound: 3.0,
            basis: NoiseBasis::Product,
            seed,
        }
    }

    pub fn with_basis(mut self, basis: NoiseBasis) -> Self {
        self.basis = basis;
        self
    }

    pub fn half_width(&self) -> f64 {
        (3.0 * self.variance).sqrt()
    }
}

/// Sample statistics of a simulated intervention.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationResult {
    pub n_samples: usize,
    pub risk_aversion: f64,
    /// Mean surplus change, E[ΔC].
    pub mean_dc: f64,
    pub se_mean_dc: f64,
    /// Sample variance of the surplus change.
    pub var_dc: f64,
    /// Asymptotic standard error of the variance estimate.
    pub se_var_dc: f64,
    /// Mean realized revenue, E[⟨τ, q⟩].
    pub mean_revenue: f64,
    pub se_mean_revenue: f64,
    /// Planner objective, mean_dc - (risk_aversion/2)·var_dc.
    pub objective: f64,
}

/// Pre-factored market data for repeated exact re-solves.
struct SampleEngine {
    n: usize,
    d_norm: Matrix,
    beta: Vec<f64>,
    rhs_base: Vec<f64>,
    price_factors: LuFactors,
    surplus_factors: LuFactors,
    cs0: f64,
    /// Eigenbundle basis, present when noise acts on bundle coordinates.
    basis: Option<Matrix>,
}

impl SampleEngine {
    fn new(m: &NormalizedMarket, needs_basis: bool) -> Result<Self> {
        let n = m.n();
        let mut i_minus_d = Matrix::identity(n);
        let mut neg_d = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let d = m.d_norm().get(i, j);
                i_minus_d.set(i, j, i_minus_d.get(i, j) - d);
                neg_d.set(i, j, -d);
            }
        }
        let price_factors = i_minus_d.lu_factor()?;
        let surplus_factors = neg_d.lu_factor().map_err(|_| {
            Error::NotNegativeDefinite(
                "simulation needs strictly negative definite spillovers".into(),
            )
        })?;
        let minus_d_beta = neg_d.matvec(m.beta());
        let rhs_base: Vec<f64> = (0..n).map(|i| minus_d_beta[i] + m.cost()[i]).collect();
        let q0 = {
            let p0 = price_factors.solve(&rhs_base);
            let bmp: Vec<f64> = m.beta().iter().zip(&p0).map(|(b, p)| b - p).collect();
            neg_d.matvec(&bmp)
        };
        let cs0 = 0.5 * dot(&q0, &surplus_factors.solve(&q0));
        let basis = if needs_basis {
            let dec = decompose(m.d_norm(), &q0)?;
            Some(dec.basis().clone())
        } else {
            None
        };
        Ok(SampleEngine {
            n,
            d_norm: m.d_norm().clone(),
            beta: m.beta().to_vec(),
            rhs_base,
            price_factors,
            surplus_factors,
            cs0,
            basis,
        })
    }

    /// Exact surplus change and revenue under a realized product-space tax.
    fn outcome(&self, tau: &[f64]) -> (f64, f64) {
        let rhs: Vec<f64> = self
            .rhs_base
            .iter()
            .zip(tau)
            .map(|(b, t)| b + t)
            .collect();
        let price = self.price_factors.solve(&rhs);
        let mut quantity = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s -= self.d_norm.get(i, j) * (self.beta[j] - price[j]);
            }
            quantity[i] = s;
        }
        let cs = 0.5 * dot(&quantity, &self.surplus_factors.solve(&quantity));
        (cs - self.cs0, dot(tau, &quantity))
    }

    /// Maps an optimizer decision vector plus a shock vector to the
    /// realized product-space tax.
    fn realized_tax(&self, target: &[f64], eta: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match &self.basis {
            None => out.extend(target.iter().zip(eta).map(|(t, e)| t * e)),
            Some(u) => {
                // target here holds eigenbundle coordinates
                let shocked: Vec<f64> =
                    target.iter().zip(eta).map(|(t, e)| t * e).collect();
                out.extend(u.matvec(&shocked));
            }
        }
    }
}

fn draw_eta(noise: &NoiseModel, n_samples: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let w = noise.half_width();
    let mut eta = Vec::with_capacity(n_samples * n);
    for _ in 0..n_samples * n {
        let u: f64 = rng.gen();
        eta.push(1.0 + w * (2.0 * u - 1.0));
    }
    eta
}

fn summarize(
    dc: &[f64],
    revenue: &[f64],
    risk_aversion: f64,
) -> SimulationResult {
    let n = dc.len();
    let nf = n as f64;
    let mean_dc = dc.iter().sum::<f64>() / nf;
    let mean_revenue = revenue.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    let mut r2 = 0.0;
    for (&x, &r) in dc.iter().zip(revenue) {
        let d = x - mean_dc;
        m2 += d * d;
        m4 += d * d * d * d;
        let dr = r - mean_revenue;
        r2 += dr * dr;
    }
    let var_dc = m2 / (nf - 1.0);
    let m2n = m2 / nf;
    let m4n = m4 / nf;
    SimulationResult {
        n_samples: n,
        risk_aversion,
        mean_dc,
        se_mean_dc: (var_dc / nf).sqrt(),
        var_dc,
        se_var_dc: ((m4n - m2n * m2n).max(0.0) / nf).sqrt(),
        mean_revenue,
        se_mean_revenue: (r2 / (nf - 1.0) / nf).sqrt(),
        objective: mean_dc - 0.5 * risk_aversion * var_dc,
    }
}

/// Simulates the intervention `tau_target` (product space, normalized
/// units) under implementation noise, re-solving the exact equilibrium for
/// every draw. Deterministic for a fixed seed.
pub fn simulate(
    m: &NormalizedMarket,
    tau_target: &[f64],
    noise: &NoiseModel,
    risk_aversion: f64,
    n_samples: usize,
) -> Result<SimulationResult> {
    if n_samples < 2 {
        return Err(Error::InvalidSampleCount(n_samples));
    }
    if tau_target.len() != m.n() {
        return Err(Error::DimensionMismatch {
            expected: m.n(),
            got: tau_target.len(),
        });
    }
    if !(noise.variance >= 0.0) {
        return Err(Error::RangeError(format!(
            "noise variance {} must be non-negative",
            noise.variance
        )));
    }
    let engine = SampleEngine::new(m, noise.basis == NoiseBasis::Eigenbundle)?;
    let target: Vec<f64> = match &engine.basis {
        None => tau_target.to_vec(),
        Some(u) => u.tr_matvec(tau_target),
    };
    let eta = draw_eta(noise, n_samples, m.n());
    let mut dc = Vec::with_capacity(n_samples);
    let mut revenue = Vec::with_capacity(n_samples);
    let mut tau = Vec::with_capacity(m.n());
    for s in 0..n_samples {
        let shocks = &eta[s * m.n()..(s + 1) * m.n()];
        engine.realized_tax(&target, shocks, &mut tau);
        let (d, r) = engine.outcome(&tau);
        dc.push(d);
        revenue.push(r);
    }
    Ok(summarize(&dc, &revenue, risk_aversion))
}

/// Result of the numeric planner optimization.
#[derive(Debug, Clone)]
pub struct PlannerOptimum {
    /// Optimal target taxes in product space (normalized units).
    pub tau_target: Vec<f64>,
    /// Statistics of the optimum under the same common random numbers.
    pub achieved: SimulationResult,
    /// Monte Carlo estimate of expected revenue at the optimum.
    pub budget_residual: f64,
}

/// Maximizes the planner objective E[ΔC] - (a/2)Var[ΔC] over target taxes,
/// subject to E[revenue] = 0, on a fixed set of common random numbers.
/// The budget constraint is enforced by a quadratic penalty with an
/// increasing weight ladder; a few extra starts guard against poor steps.
pub fn optimize_planner(
    m: &NormalizedMarket,
    noise: &NoiseModel,
    risk_aversion: f64,
    n_samples: usize,
    seed: u64,
) -> Result<PlannerOptimum> {
    if !(risk_aversion > 0.0) {
        return Err(Error::InvalidRiskAversion(risk_aversion));
    }
    if n_samples < 2 {
        return Err(Error::InvalidSampleCount(n_samples));
    }
    let n = m.n();
    let engine = SampleEngine::new(m, noise.basis == NoiseBasis::Eigenbundle)?;
    let eta = draw_eta(noise, n_samples, n);

    // common-random-number statistics of a candidate decision vector
    let stats = |x: &[f64]| -> (f64, f64, f64) {
        let mut tau = Vec::with_capacity(n);
        let mut sum_dc = 0.0;
        let mut sum_r = 0.0;
        let mut dcs = Vec::with_capacity(n_samples);
        for s in 0..n_samples {
            let shocks = &eta[s * n..(s + 1) * n];
            engine.realized_tax(x, shocks, &mut tau);
            let (d, r) = engine.outcome(&tau);
            sum_dc += d;
            sum_r += r;
            dcs.push(d);
        }
        let nf = n_samples as f64;
        let mean_dc = sum_dc / nf;
        let var_dc = dcs.iter().map(|d| (d - mean_dc) * (d - mean_dc)).sum::<f64>() / (nf - 1.0);
        (mean_dc, var_dc, sum_r / nf)
    };
    let penalized = |x: &[f64], weight: f64| -> f64 {
        let (mean_dc, var_dc, mean_r) = stats(x);
        mean_dc - 0.5 * risk_aversion * var_dc - weight * mean_r * mean_r
    };

    let ladder = [1e2, 1e4, 1e6, 1e8, 1e10, 1e12];
    let mut x = vec![0.0; n];
    for &weight in &ladder {
        x = bfgs_maximize(&|v| penalized(v, weight), &x, 400);
        let (_, _, mean_r) = stats(&x);
        if mean_r.abs() < 1e-10 && weight >= 1e8 {
            break;
        }
    }
    let final_weight = *ladder.last().expect("ladder non-empty");
    // restarts around the incumbent: scaled copies plus a seeded jitter
    let mut best = x.clone();
    let mut best_val = penalized(&best, final_weight);
    let norm = best.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let jitter_scale = if norm > 0.0 { 0.5 * norm } else { 0.01 / risk_aversion };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5_5a5a);
    for trial in 0..3 {
        let start: Vec<f64> = match trial {
            0 => best.iter().map(|v| 0.5 * v).collect(),
            1 => best.iter().map(|v| 2.0 * v).collect(),
            _ => best
                .iter()
                .map(|v| v + jitter_scale * (2.0 * rng.gen::<f64>() - 1.0))
                .collect(),
        };
        let cand = bfgs_maximize(&|v| penalized(v, final_weight), &start, 400);
        let val = penalized(&cand, final_weight);
        if val > best_val {
            best_val = val;
            best = cand;
        }
    }
    if !best.iter().all(|v| v.is_finite()) || !best_val.is_finite() {
        return Err(Error::OptimizationFailure(
            "optimizer produced non-finite values".into(),
        ));
    }
    let (_, _, residual) = stats(&best);
    if residual.abs() > 1e-6 {
        return Err(Error::OptimizationFailure(format!(
            "budget residual {residual:.3e} exceeds 1e-6 at the best point found"
        )));
    }
    let tau_target = match &engine.basis {
        None => best,
        Some(u) => u.matvec(&best),
    };
    let achieved = simulate(m, &tau_target, noise, risk_aversion, n_samples)?;
    Ok(PlannerOptimum {
        tau_target,
        achieved,
        budget_residual: residual,
    })
}

/// Eigenbundle coordinates of a planner optimum's target taxes.
pub fn optimum_in_eigenbasis(
    dec: &SpectralDecomposition,
    optimum: &PlannerOptimum,
) -> Result<Vec<f64>> {
    dec.to_eigenbasis(&optimum.tau_target)
}

/// Quasi-Newton maximization with central-difference gradients and Armijo
/// backtracking. Convergence on relative step size; deterministic.
fn bfgs_maximize(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], max_iter: usize) -> Vec<f64> {
    let n = x0.len();
    let neg = |x: &[f64]| -f(x);
    let grad = |x: &[f64], buf: &mut Vec<f64>| {
        buf.clear();
        let mut xp = x.to_vec();
        for i in 0..n {
            let h = 1e-8 * (1.0 + x[i].abs());
            let orig = xp[i];
            xp[i] = orig + h;
            let fp = neg(&xp);
            xp[i] = orig - h;
            let fm = neg(&xp);
            xp[i] = orig;
            buf.push((fp - fm) / (2.0 * h));
        }
    };

    let mut x = x0.to_vec();
    let mut g = Vec::with_capacity(n);
    grad(&x, &mut g);
    let mut fx = neg(&x);

    // curvature probe along the first coordinate sets the Hessian scale
    let mut h_scale = 1.0;
    {
        let h = 1e-6 * (1.0 + x[0].abs());
        let mut xp = x.clone();
        xp[0] = x[0] + h;
        let fp = neg(&xp);
        xp[0] = x[0] - h;
        let fm = neg(&xp);
        let curv = ((fp - 2.0 * fx + fm) / (h * h)).abs();
        if curv.is_finite() && curv > 1e-12 {
            h_scale = 1.0 / curv;
        }
    }
    let mut h_inv = Matrix::identity(n);
    for i in 0..n {
        h_inv.set(i, i, h_scale);
    }

    for _iter in 0..max_iter {
        let dir: Vec<f64> = {
            let mut d = h_inv.matvec(&g);
            d.iter_mut().for_each(|v| *v = -*v);
            d
        };
        // backtracking line search
        let g_dot_d = dot(&g, &dir);
        if g_dot_d >= 0.0 {
            // not a descent direction; reset the metric
            h_inv = Matrix::identity(n);
            for i in 0..n {
                h_inv.set(i, i, h_scale);
            }
            continue;
        }
        let mut t = 1.0;
        let mut x_new = x.clone();
        let mut f_new;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + t * dir[i];
            }
            f_new = neg(&x_new);
            if f_new <= fx + 1e-4 * t * g_dot_d {
                accepted = true;
                fx = f_new;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        let step: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let step_norm = step.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let x_norm = x_new.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut g_new = Vec::with_capacity(n);
        grad(&x_new, &mut g_new);
        // BFGS inverse update
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &y);
        let y_norm = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if sy > 1e-14 * step_norm.max(1e-300) * y_norm.max(1e-300) && sy.is_finite() {
            let hy = h_inv.matvec(&y);
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    let v = h_inv.get(i, j) + (1.0 + yhy * rho) * rho * step[i] * step[j]
                        - rho * (step[i] * hy[j] + hy[i] * step[j]);
                    h_inv.set(i, j, v);
                }
            }
        }
        x = x_new;
        g = g_new;
        if step_norm < 1e-8 * x_norm.max(1e-12) {
            break;
        }
    }
    x
}
