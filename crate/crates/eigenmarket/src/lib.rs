//! Spectral analysis of differentiated Bertrand oligopolies and design of
//! budget-balanced tax/subsidy interventions.
//!
//! The demand side of a linear oligopoly is summarized by a symmetric
//! negative semidefinite spillover matrix D (the Jacobian of demand in
//! prices, rescaled so its diagonal is -1). Its eigenvectors form a basis
//! of *eigenbundles*: a cost or tax change on one bundle moves only that
//! bundle's equilibrium price, by the pass-through 1/(1-σ). On top of the
//! decomposition this crate computes
//!
//! * Bertrand equilibria under arbitrary per-unit taxes ([`market`]),
//! * pass-throughs, eigenvalue variance and first-order surplus responses
//!   ([`spectral`]),
//! * the closed-form optimal small budget-balanced intervention for a
//!   risk-averse planner ([`small`]),
//! * the exact optimal budget-balanced intervention under linear demand
//!   ([`global`]),
//! * a Monte Carlo planner with noisy tax implementation that serves as a
//!   numeric cross-check on the closed forms ([`sim`]),
//! * market files, reports and the example generators behind the
//!   `eigenmarket` CLI ([`io`], [`report`], [`families`]).

pub mod error;
pub mod families;
pub mod global;
pub mod io;
pub mod linalg;
pub mod market;
pub mod report;
pub mod sim;
pub mod small;
pub mod spectral;

pub use error::{Error, Result};
pub use global::{plan_global, shadow_price_global, GlobalPlan};
pub use market::{Equilibrium, MarketSpec, NormalizedMarket};
pub use sim::{optimize_planner, simulate, NoiseBasis, NoiseModel, SimulationResult};
pub use small::{optimal_small_taxes, pigouvian_leverage, shadow_price_small, SmallPlan};
pub use spectral::{decompose, SpectralDecomposition};
