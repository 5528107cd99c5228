//! Helpers shared by the integration suites: fixture loading, seeded
//! random market generation, and a brute-force search oracle for the
//! exact intervention problem.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eigenmarket::linalg::{dot, Matrix};
use eigenmarket::market::NormalizedMarket;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn data(name: &str) -> String {
    std::fs::read_to_string(data_path(name)).expect("fixture exists")
}

/// Complement triangle with coupling g.
pub fn triangle_d(g: f64) -> Matrix {
    Matrix::from_rows(&[
        vec![-1.0, 0.0, -g],
        vec![0.0, -1.0, -g],
        vec![-g, -g, -1.0],
    ])
    .unwrap()
}

/// Random normalized strictly-negative-definite spillover matrix: build a
/// positive definite W·Wᵀ + ridge, negate, rescale the diagonal to -1.
pub fn random_normalized_spillover(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            w.set(i, j, rng.gen::<f64>() * 2.0 - 1.0);
        }
    }
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += w.get(i, k) * w.get(j, k);
            }
            m.set(i, j, s);
        }
    }
    for i in 0..n {
        m.set(i, i, m.get(i, i) + 0.3);
    }
    let scale: Vec<f64> = (0..n).map(|i| 1.0 / m.get(i, i).sqrt()).collect();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            d.set(i, j, -scale[i] * m.get(i, j) * scale[j]);
        }
    }
    for i in 0..n {
        d.set(i, i, -1.0);
    }
    d
}

/// Builds a market in normalized units whose zero-tax equilibrium
/// quantities equal `q_target` (all positive keeps it interior): with
/// p = q + c the intercepts must be β = q + c + (-D)⁻¹ q.
pub fn market_with_quantities(
    d_norm: &Matrix,
    q_target: &[f64],
    cost: &[f64],
) -> NormalizedMarket {
    let n = q_target.len();
    let mut neg_d = d_norm.clone();
    for i in 0..n {
        for j in 0..n {
            let v = -neg_d.get(i, j);
            neg_d.set(i, j, v);
        }
    }
    let bq = neg_d.inverse().unwrap().matvec(q_target);
    let beta: Vec<f64> = (0..n).map(|i| q_target[i] + cost[i] + bq[i]).collect();
    NormalizedMarket::from_normalized(d_norm.clone(), beta, cost.to_vec()).unwrap()
}

/// Random interior market on a random strictly-negative-definite matrix.
pub fn random_market(n: usize, rng: &mut ChaCha8Rng) -> NormalizedMarket {
    let d = random_normalized_spillover(n, rng);
    let q: Vec<f64> = (0..n).map(|_| 0.5 + 1.5 * rng.gen::<f64>()).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    market_with_quantities(&d, &q, &c)
}

/// Exact revenue ⟨τ, q(τ)⟩ of a product-space tax at its re-solved
/// equilibrium.
pub fn exact_budget(m: &NormalizedMarket, tau: &[f64]) -> f64 {
    let eq = m.solve_equilibrium(tau).unwrap();
    dot(tau, &eq.quantity)
}

fn consumer_surplus_of(m: &NormalizedMarket, tau: &[f64]) -> Option<f64> {
    let eq = m.solve_equilibrium(tau).ok()?;
    eq.consumer_surplus
}

/// Best consumer surplus found by a grid-plus-zoom search over
/// budget-balanced taxes. The budget ⟨τ, q(τ)⟩ = 0 is enforced by
/// eliminating coordinate `pivot`: for fixed free coordinates the budget
/// is a quadratic in τ_pivot whose real roots (when any) give feasible
/// points. Returns the best surplus over all feasible points visited.
pub fn brute_force_best_surplus(
    m: &NormalizedMarket,
    pivot: usize,
    center: &[f64],
    range: f64,
    points_per_dim: usize,
    zoom_levels: usize,
) -> f64 {
    let n = m.n();
    let free: Vec<usize> = (0..n).filter(|&i| i != pivot).collect();
    let mut best = f64::NEG_INFINITY;
    let mut center_free: Vec<f64> = free.iter().map(|&i| center[i]).collect();
    let mut half = range;

    for _ in 0..zoom_levels {
        let mut level_best = f64::NEG_INFINITY;
        let mut level_arg = center_free.clone();
        let steps = points_per_dim;
        let mut idx = vec![0usize; free.len()];
        loop {
            let mut tau = vec![0.0; n];
            for (k, &i) in free.iter().enumerate() {
                let frac = if steps == 1 {
                    0.0
                } else {
                    idx[k] as f64 / (steps - 1) as f64 * 2.0 - 1.0
                };
                tau[i] = center_free[k] + half * frac;
            }
            // budget as a quadratic in the pivot coordinate, coefficients by
            // evaluation at pivot = 0, +1, -1
            tau[pivot] = 0.0;
            let c0 = exact_budget(m, &tau);
            tau[pivot] = 1.0;
            let cp = exact_budget(m, &tau);
            tau[pivot] = -1.0;
            let cm = exact_budget(m, &tau);
            let c1 = 0.5 * (cp - cm);
            let c2 = 0.5 * (cp + cm) - c0;
            let mut roots = Vec::new();
            if c2.abs() < 1e-14 {
                if c1.abs() > 1e-14 {
                    roots.push(-c0 / c1);
                }
            } else {
                let disc = c1 * c1 - 4.0 * c2 * c0;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    roots.push((-c1 + s) / (2.0 * c2));
                    roots.push((-c1 - s) / (2.0 * c2));
                }
            }
            for root in roots {
                if !root.is_finite() {
                    continue;
                }
                tau[pivot] = root;
                if let Some(cs) = consumer_surplus_of(m, &tau) {
                    if cs > level_best {
                        level_best = cs;
                        level_arg = free.iter().map(|&i| tau[i]).collect();
                    }
                }
            }
            // advance the mixed-radix counter
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] < steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
        if level_best > best {
            best = level_best;
        }
        center_free = level_arg;
        half /= (steps - 1) as f64 / 2.0;
    }
    best
}
