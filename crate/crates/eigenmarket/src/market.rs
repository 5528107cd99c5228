//! Linear-demand Bertrand oligopoly: market construction, unit
//! normalization of the spillover matrix, and equilibrium solving under
//! per-unit taxes.
//!
//! A market is specified either by the quadratic-utility curvature matrix B
//! (positive definite) or directly by the demand spillover matrix D = -B⁻¹
//! (negative semidefinite, D_ij = ∂q_i/∂p_j). Normalization rescales
//! quantity units good by good so that diag(D) = -1 while money units stay
//! fixed; all downstream analysis works in these units.

use crate::error::{Error, Result};
use crate::linalg::{dot, eigen_symmetric, Matrix};

/// Input matrices must be symmetric to this tolerance; smaller asymmetries
/// are averaged away, larger ones are rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues of D above this are rejected as positive.
pub const DEFINITENESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
enum Curvature {
    /// Quadratic-utility matrix B (positive definite).
    Utility(Matrix),
    /// Demand spillover matrix D = -B⁻¹ (negative semidefinite).
    Spillover(Matrix),
}

/// A differentiated oligopoly in raw units.
#[derive(Debug, Clone)]
pub struct MarketSpec {
    beta: Vec<f64>,
    cost: Vec<f64>,
    curvature: Curvature,
}

fn validate_square_symmetric(m: &mut Matrix, n: usize, name: &str) -> Result<()> {
    if !m.is_square() || m.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.rows().max(m.cols()),
        });
    }
    let (asym, (i, j)) = m.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidMarket(format!(
            "{name} is asymmetric: |m[{i}][{j}] - m[{j}][{i}]| = {asym:.3e} \
             ({} vs {})",
            m.get(i, j),
            m.get(j, i)
        )));
    }
    m.symmetrize();
    Ok(())
}

fn validate_primitives(beta: &[f64], cost: &[f64]) -> Result<()> {
    if beta.len() != cost.len() {
        return Err(Error::DimensionMismatch {
            expected: beta.len(),
            got: cost.len(),
        });
    }
    if let Some(i) = beta.iter().position(|&b| !(b > 0.0)) {
        return Err(Error::InvalidMarket(format!(
            "beta[{i}] = {} must be strictly positive",
            beta[i]
        )));
    }
    if let Some(i) = cost.iter().position(|&c| !(c >= 0.0)) {
        return Err(Error::InvalidMarket(format!(
            "cost[{i}] = {} must be non-negative",
            cost[i]
        )));
    }
    Ok(())
}

impl MarketSpec {
    /// Market given by the spillover matrix D (negative semidefinite).
    pub fn from_spillover(beta: Vec<f64>, d_matrix: Matrix, cost: Vec<f64>) -> Result<Self> {
        validate_primitives(&beta, &cost)?;
        let mut d = d_matrix;
        validate_square_symmetric(&mut d, beta.len(), "d_matrix")?;
        Ok(MarketSpec {
            beta,
            cost,
            curvature: Curvature::Spillover(d),
        })
    }

    /// Market given by the quadratic-utility curvature B (positive definite).
    pub fn from_utility_curvature(beta: Vec<f64>, b_matrix: Matrix, cost: Vec<f64>) -> Result<Self> {
        validate_primitives(&beta, &cost)?;
        let mut b = b_matrix;
        validate_square_symmetric(&mut b, beta.len(), "b_matrix")?;
        Ok(MarketSpec {
            beta,
            cost,
            curvature: Curvature::Utility(b),
        })
    }

    pub fn n(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    /// The spillover matrix in raw units (computed as -B⁻¹ if B was given).
    pub fn spillover(&self) -> Result<Matrix> {
        match &self.curvature {
            Curvature::Spillover(d) => Ok(d.clone()),
            Curvature::Utility(b) => {
                let mut d = b
                    .inverse()
                    .map_err(|_| Error::SingularMatrix("b_matrix is not invertible".into()))?;
                for i in 0..d.rows() {
                    for j in 0..d.cols() {
                        let v = -d.get(i, j);
                        d.set(i, j, v);
                    }
                }
                // inversion noise can break exact symmetry
                d.symmetrize();
                Ok(d)
            }
        }
    }

    /// Rescales quantity units so that diag(D) = -1; money units unchanged.
    pub fn normalize(&self) -> Result<NormalizedMarket> {
        let n = self.n();
        let d_raw = self.spillover()?;
        // diagonal entries must be strictly negative for the rescaling to exist
        for i in 0..n {
            if !(d_raw.get(i, i) < -1e-12) {
                return Err(Error::NotNegativeDefinite(format!(
                    "spillover diagonal D[{i}][{i}] = {} is not strictly negative",
                    d_raw.get(i, i)
                )));
            }
        }
        let (eigs, _) = eigen_symmetric(&d_raw)?;
        if let Some(&bad) = eigs.iter().find(|&&s| s > DEFINITENESS_TOL) {
            return Err(Error::NotNegativeDefinite(format!(
                "spillover matrix has eigenvalue {bad:.6e} > 0"
            )));
        }
        let scale: Vec<f64> = (0..n).map(|i| 1.0 / (-d_raw.get(i, i)).sqrt()).collect();
        let mut d_norm = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                d_norm.set(i, j, scale[i] * d_raw.get(i, j) * scale[j]);
            }
        }
        for i in 0..n {
            d_norm.set(i, i, -1.0);
        }
        let beta_norm: Vec<f64> = self.beta.iter().zip(&scale).map(|(b, r)| b / r).collect();
        let cost_norm: Vec<f64> = self.cost.iter().zip(&scale).map(|(c, r)| c / r).collect();
        Ok(NormalizedMarket {
            d_norm,
            beta: beta_norm,
            cost: cost_norm,
            scale,
        })
    }
}

/// Market in normalized quantity units: diag(D) = -1 exactly.
#[derive(Debug, Clone)]
pub struct NormalizedMarket {
    d_norm: Matrix,
    beta: Vec<f64>,
    cost: Vec<f64>,
    scale: Vec<f64>,
}

/// Bertrand equilibrium under a given tax vector, in normalized units.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub price: Vec<f64>,
    pub quantity: Vec<f64>,
    pub tax: Vec<f64>,
    /// ½ qᵀBq; `None` when D is only semidefinite, so B = -D⁻¹ does not exist.
    pub consumer_surplus: Option<f64>,
    /// Per-firm profit q_i (p_i - c_i - τ_i).
    pub profit: Vec<f64>,
    /// False when some quantity is negative or some markup is negative.
    pub interior: bool,
}

impl NormalizedMarket {
    /// Builds a market that is already in normalized units. The diagonal of
    /// `d_norm` must be exactly -1.
    pub fn from_normalized(d_norm: Matrix, beta: Vec<f64>, cost: Vec<f64>) -> Result<Self> {
        let n = beta.len();
        let mut d = d_norm;
        validate_square_symmetric(&mut d, n, "d_matrix")?;
        validate_primitives(&beta, &cost)?;
        for i in 0..n {
            if (d.get(i, i) + 1.0).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidMarket(format!(
                    "normalized spillover diagonal D[{i}][{i}] = {} is not -1",
                    d.get(i, i)
                )));
            }
            d.set(i, i, -1.0);
        }
        let (eigs, _) = eigen_symmetric(&d)?;
        if let Some(&bad) = eigs.iter().find(|&&s| s > DEFINITENESS_TOL) {
            return Err(Error::NotNegativeDefinite(format!(
                "spillover matrix has eigenvalue {bad:.6e} > 0"
            )));
        }
        Ok(NormalizedMarket {
            d_norm: d,
            beta,
            cost,
            scale: vec![1.0; n],
        })
    }

    pub fn n(&self) -> usize {
        self.beta.len()
    }

    pub fn d_norm(&self) -> &Matrix {
        &self.d_norm
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    /// Per-good quantity rescaling factors r (original q = normalized q / r).
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Maps normalized prices back to original units (p = r · p̃).
    pub fn price_to_original(&self, price: &[f64]) -> Vec<f64> {
        price.iter().zip(&self.scale).map(|(p, r)| p * r).collect()
    }

    /// Maps normalized quantities back to original units (q = q̃ / r).
    pub fn quantity_to_original(&self, quantity: &[f64]) -> Vec<f64> {
        quantity.iter().zip(&self.scale).map(|(q, r)| q / r).collect()
    }

    /// Maps per-unit taxes in original units into normalized units
    /// (τ̃ = τ / r, same rule as marginal costs).
    pub fn tax_to_normalized(&self, tax: &[f64]) -> Result<Vec<f64>> {
        if tax.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: tax.len(),
            });
        }
        Ok(tax.iter().zip(&self.scale).map(|(t, r)| t / r).collect())
    }

    /// Maps normalized per-unit taxes to original units (τ = r · τ̃).
    pub fn tax_to_original(&self, tax: &[f64]) -> Vec<f64> {
        tax.iter().zip(&self.scale).map(|(t, r)| t * r).collect()
    }

    /// Solves the pricing game: [I - D] p = -D β + c + τ, then q = -D(β - p).
    ///
    /// `tax` is in normalized units. I - D is invertible for any negative
    /// semidefinite D, so the singularity branch is defensive only.
    pub fn solve_equilibrium(&self, tax: &[f64]) -> Result<Equilibrium> {
        let n = self.n();
        if tax.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: tax.len(),
            });
        }
        let mut i_minus_d = Matrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                let v = i_minus_d.get(i, j) - self.d_norm.get(i, j);
                i_minus_d.set(i, j, v);
            }
        }
        let factors = i_minus_d.lu_factor()?;
        let minus_d_beta = {
            let mut v = self.d_norm.matvec(&self.beta);
            v.iter_mut().for_each(|x| *x = -*x);
            v
        };
        let rhs: Vec<f64> = (0..n)
            .map(|i| minus_d_beta[i] + self.cost[i] + tax[i])
            .collect();
        let price = factors.solve(&rhs);
        let beta_minus_p: Vec<f64> = self.beta.iter().zip(&price).map(|(b, p)| b - p).collect();
        let mut quantity = self.d_norm.matvec(&beta_minus_p);
        quantity.iter_mut().for_each(|x| *x = -*x);
        if quantity.iter().any(|q| !q.is_finite()) {
            return Err(Error::SingularMatrix("non-finite equilibrium".into()));
        }
        let markup: Vec<f64> = (0..n)
            .map(|i| price[i] - self.cost[i] - tax[i])
            .collect();
        let interior = quantity.iter().all(|&q| q > -1e-12) && markup.iter().all(|&m| m > -1e-12);
        let profit: Vec<f64> = quantity.iter().zip(&markup).map(|(q, m)| q * m).collect();
        let consumer_surplus = self.consumer_surplus(&quantity).ok();
        Ok(Equilibrium {
            price,
            quantity,
            tax: tax.to_vec(),
            consumer_surplus,
            profit,
            interior,
        })
    }

    /// Consumer surplus ½ qᵀ(-D)⁻¹q. Requires strictly negative definite D.
    pub fn consumer_surplus(&self, quantity: &[f64]) -> Result<f64> {
        let n = self.n();
        if quantity.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: quantity.len(),
            });
        }
        let mut neg_d = self.d_norm.clone();
        for i in 0..n {
            for j in 0..n {
                let v = -neg_d.get(i, j);
                neg_d.set(i, j, v);
            }
        }
        let factors = neg_d.lu_factor().map_err(|_| {
            Error::NotNegativeDefinite(
                "consumer surplus needs strictly negative definite spillovers".into(),
            )
        })?;
        let x = factors.solve(quantity);
        let cs = 0.5 * dot(quantity, &x);
        if !cs.is_finite() {
            return Err(Error::NotNegativeDefinite(
                "consumer surplus is not finite; spillover matrix is singular".into(),
            ));
        }
        Ok(cs)
    }

    /// Tax revenue ⟨τ, q⟩ at the equilibrium induced by `tax`.
    pub fn revenue(&self, eq: &Equilibrium) -> f64 {
        dot(&eq.tax, &eq.quantity)
    }
}

/// Profit vector π_i = q_i (p_i - c_i - τ_i); equals q_i² in normalized units.
pub fn firm_profits(eq: &Equilibrium) -> Vec<f64> {
    eq.profit.clone()
}
