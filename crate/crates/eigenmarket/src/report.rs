//! Analysis reports: one struct, two renderings (plain text and JSON).
//!
//! Every number in a report is recomputable from the market file plus the
//! echoed flags and seed. The JSON rendering is the machine-readable
//! schema documented in the README; the text rendering is for terminals.

use serde::Serialize;

use crate::global::GlobalPlan;
use crate::market::{Equilibrium, NormalizedMarket};
use crate::sim::{NoiseModel, SimulationResult};
use crate::small::SmallPlan;
use crate::spectral::{eigenvalue_variance_from_entries, SpectralDecomposition};

#[derive(Debug, Clone, Serialize)]
pub struct MarketSection {
    /// Per-good quantity rescaling factors used by the normalization.
    pub scale: Vec<f64>,
    /// Normalized spillover matrix (diagonal -1), row-major.
    pub d_norm: Vec<Vec<f64>>,
    pub beta_norm: Vec<f64>,
    pub cost_norm: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSection {
    /// Ascending eigenvalues of the normalized spillover matrix.
    pub eigenvalues: Vec<f64>,
    /// Pass-throughs 1/(1-σ), ascending.
    pub pass_through: Vec<f64>,
    /// Eigenbundles as rows (bundle ℓ = row ℓ), sign convention applied.
    pub eigenbundles: Vec<Vec<f64>>,
    /// Equilibrium quantities of the eigenbundles.
    pub bundle_quantities: Vec<f64>,
    pub eigenvalue_variance: f64,
    /// |variance from eigenvalues - variance from off-diagonal entries|.
    pub variance_identity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSection {
    /// Prices and quantities mapped back to the input units.
    pub price: Vec<f64>,
    pub quantity: Vec<f64>,
    /// The same equilibrium in normalized units.
    pub price_normalized: Vec<f64>,
    pub quantity_normalized: Vec<f64>,
    /// Applied per-unit taxes in input units.
    pub tax: Vec<f64>,
    /// None when the spillover matrix is only semidefinite.
    pub consumer_surplus: Option<f64>,
    pub profit: Vec<f64>,
    pub interior: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallPlanSection {
    pub risk_aversion: f64,
    /// Shadow price used by the tax formula.
    pub shadow_price: f64,
    /// Closed-form full-support value 1/(2 + var/2).
    pub shadow_price_full_support: f64,
    /// Bundles excluded because their equilibrium quantity is zero.
    pub excluded_bundles: Vec<usize>,
    pub tau_eigen: Vec<f64>,
    pub tau_product_normalized: Vec<f64>,
    pub tau_product: Vec<f64>,
    /// Limiting scaled surplus gain N·var/(4 + var).
    pub leverage: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalPlanSection {
    pub shadow_price: f64,
    pub bracket: (f64, f64),
    pub tau_eigen: Vec<f64>,
    pub tau_product_normalized: Vec<f64>,
    pub tau_product: Vec<f64>,
    pub post_bundle_quantities: Vec<f64>,
    pub bundle_revenue: Vec<f64>,
    pub total_revenue: f64,
    pub cs_pre: f64,
    pub cs_post: f64,
    pub surplus_gain: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSection {
    pub seed: u64,
    pub noise_variance: f64,
    /// Target taxes in input units, as given.
    pub tau_target: Vec<f64>,
    #[serde(flatten)]
    pub result: SimulationResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub n: usize,
    pub market: MarketSection,
    pub spectrum: SpectrumSection,
    pub equilibrium: EquilibriumSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub small_plan: Option<SmallPlanSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_plan: Option<GlobalPlanSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    pub fn new(
        label: Option<String>,
        m: &NormalizedMarket,
        dec: &SpectralDecomposition,
        eq: &Equilibrium,
    ) -> Self {
        let var_eigen = dec.eigenvalue_variance();
        let var_entries = eigenvalue_variance_from_entries(m.d_norm());
        let mut warnings = Vec::new();
        if !eq.interior {
            warnings.push(
                "equilibrium is not interior: some quantity or markup is negative".into(),
            );
        }
        if eq.consumer_surplus.is_none() {
            warnings.push(
                "spillover matrix is only negative semidefinite; consumer surplus and the \
                 exact intervention are unavailable"
                    .into(),
            );
        }
        if var_eigen < 1e-12 {
            warnings.push(
                "eigenvalue variance is zero: no scope for budget-balanced intervention".into(),
            );
        }
        let eigenbundles = (0..dec.n()).map(|l| dec.basis().column(l)).collect();
        AnalysisReport {
            label,
            n: m.n(),
            market: MarketSection {
                scale: m.scale().to_vec(),
                d_norm: m.d_norm().to_rows(),
                beta_norm: m.beta().to_vec(),
                cost_norm: m.cost().to_vec(),
            },
            spectrum: SpectrumSection {
                eigenvalues: dec.eigenvalues().to_vec(),
                pass_through: dec.pass_through().to_vec(),
                eigenbundles,
                bundle_quantities: dec.bundle_quantities().to_vec(),
                eigenvalue_variance: var_eigen,
                variance_identity_residual: (var_eigen - var_entries).abs(),
            },
            equilibrium: EquilibriumSection {
                price: m.price_to_original(&eq.price),
                quantity: m.quantity_to_original(&eq.quantity),
                price_normalized: eq.price.clone(),
                quantity_normalized: eq.quantity.clone(),
                tax: m.tax_to_original(&eq.tax),
                consumer_surplus: eq.consumer_surplus,
                profit: eq.profit.clone(),
                interior: eq.interior,
            },
            small_plan: None,
            global_plan: None,
            simulation: None,
            warnings,
        }
    }

    pub fn with_small_plan(mut self, m: &NormalizedMarket, plan: &SmallPlan) -> Self {
        self.small_plan = Some(SmallPlanSection {
            risk_aversion: plan.risk_aversion,
            shadow_price: plan.shadow_price,
            shadow_price_full_support: plan.shadow_price_full_support,
            excluded_bundles: plan.excluded.clone(),
            tau_eigen: plan.tau_eigen.clone(),
            tau_product_normalized: plan.tau_product.clone(),
            tau_product: m.tax_to_original(&plan.tau_product),
            leverage: plan.leverage,
        });
        if !plan.excluded.is_empty() {
            self.warnings.push(format!(
                "bundles {:?} carry zero quantity; shadow price recomputed on the support",
                plan.excluded
            ));
        }
        self
    }

    pub fn with_global_plan(mut self, m: &NormalizedMarket, plan: &GlobalPlan) -> Self {
        self.global_plan = Some(GlobalPlanSection {
            shadow_price: plan.shadow_price,
            bracket: plan.bracket,
            tau_eigen: plan.tau_eigen.clone(),
            tau_product_normalized: plan.tau_product.clone(),
            tau_product: m.tax_to_original(&plan.tau_product),
            post_bundle_quantities: plan.post_bundle_quantities.clone(),
            bundle_revenue: plan.bundle_revenue.clone(),
            total_revenue: plan.total_revenue(),
            cs_pre: plan.cs_pre,
            cs_post: plan.cs_post,
            surplus_gain: plan.surplus_gain(),
        });
        self
    }

    pub fn with_simulation(
        mut self,
        noise: &NoiseModel,
        tau_target: Vec<f64>,
        result: SimulationResult,
    ) -> Self {
        self.simulation = Some(SimulationSection {
            seed: noise.seed,
            noise_variance: noise.variance,
            tau_target,
            result,
        });
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        match &self.label {
            Some(l) => push(&mut out, format!("market: {l} (n = {})", self.n)),
            None => push(&mut out, format!("market: n = {}", self.n)),
        }
        push(&mut out, format!("scale factors r: {}", fmt_vec(&self.market.scale)));
        push(&mut out, "normalized spillover matrix:".into());
        for row in &self.market.d_norm {
            push(&mut out, format!("  {}", fmt_vec(row)));
        }
        push(
            &mut out,
            format!("eigenvalues: {}", fmt_vec(&self.spectrum.eigenvalues)),
        );
        push(
            &mut out,
            format!("pass-throughs: {}", fmt_vec(&self.spectrum.pass_through)),
        );
        push(&mut out, "eigenbundles (one per line):".into());
        for (l, b) in self.spectrum.eigenbundles.iter().enumerate() {
            push(&mut out, format!("  u{}: {}", l + 1, fmt_vec(b)));
        }
        push(
            &mut out,
            format!(
                "bundle quantities: {}",
                fmt_vec(&self.spectrum.bundle_quantities)
            ),
        );
        push(
            &mut out,
            format!(
                "eigenvalue variance: {} (identity residual {})",
                fmt_f(self.spectrum.eigenvalue_variance),
                fmt_f(self.spectrum.variance_identity_residual)
            ),
        );
        push(&mut out, "equilibrium (input units):".into());
        push(&mut out, format!("  prices:     {}", fmt_vec(&self.equilibrium.price)));
        push(&mut out, format!("  quantities: {}", fmt_vec(&self.equilibrium.quantity)));
        push(&mut out, format!("  profits:    {}", fmt_vec(&self.equilibrium.profit)));
        match self.equilibrium.consumer_surplus {
            Some(cs) => push(&mut out, format!("  consumer surplus: {}", fmt_f(cs))),
            None => push(&mut out, "  consumer surplus: undefined (semidefinite)".into()),
        }
        if let Some(p) = &self.small_plan {
            push(&mut out, "small intervention plan:".into());
            push(&mut out, format!("  risk aversion a: {}", fmt_f(p.risk_aversion)));
            push(
                &mut out,
                format!(
                    "  shadow price z: {} (full-support {})",
                    fmt_f(p.shadow_price),
                    fmt_f(p.shadow_price_full_support)
                ),
            );
            if !p.excluded_bundles.is_empty() {
                push(&mut out, format!("  excluded bundles: {:?}", p.excluded_bundles));
            }
            push(&mut out, format!("  taxes (eigenbundles): {}", fmt_vec(&p.tau_eigen)));
            push(&mut out, format!("  taxes (products):     {}", fmt_vec(&p.tau_product)));
            push(&mut out, format!("  leverage: {}", fmt_f(p.leverage)));
        }
        if let Some(p) = &self.global_plan {
            push(&mut out, "exact intervention plan:".into());
            push(
                &mut out,
                format!(
                    "  shadow price z: {} in [{}, {}]",
                    fmt_f(p.shadow_price),
                    fmt_f(p.bracket.0),
                    fmt_f(p.bracket.1)
                ),
            );
            push(&mut out, format!("  taxes (eigenbundles): {}", fmt_vec(&p.tau_eigen)));
            push(&mut out, format!("  taxes (products):     {}", fmt_vec(&p.tau_product)));
            push(
                &mut out,
                format!("  post-tax bundle quantities: {}", fmt_vec(&p.post_bundle_quantities)),
            );
            push(
                &mut out,
                format!(
                    "  bundle revenue: {} (total {})",
                    fmt_vec(&p.bundle_revenue),
                    fmt_f(p.total_revenue)
                ),
            );
            push(
                &mut out,
                format!(
                    "  consumer surplus: {} -> {} (gain {})",
                    fmt_f(p.cs_pre),
                    fmt_f(p.cs_post),
                    fmt_f(p.surplus_gain)
                ),
            );
        }
        if let Some(s) = &self.simulation {
            push(&mut out, "simulation:".into());
            push(
                &mut out,
                format!(
                    "  samples: {}  seed: {}  noise variance: {}  risk aversion: {}",
                    s.result.n_samples,
                    s.seed,
                    fmt_f(s.noise_variance),
                    fmt_f(s.result.risk_aversion)
                ),
            );
            push(&mut out, format!("  target taxes: {}", fmt_vec(&s.tau_target)));
            push(
                &mut out,
                format!(
                    "  mean dC: {} +/- {}",
                    fmt_f(s.result.mean_dc),
                    fmt_f(s.result.se_mean_dc)
                ),
            );
            push(
                &mut out,
                format!(
                    "  var dC:  {} +/- {}",
                    fmt_f(s.result.var_dc),
                    fmt_f(s.result.se_var_dc)
                ),
            );
            push(
                &mut out,
                format!(
                    "  mean revenue: {} +/- {}",
                    fmt_f(s.result.mean_revenue),
                    fmt_f(s.result.se_mean_revenue)
                ),
            );
            push(&mut out, format!("  objective W: {}", fmt_f(s.result.objective)));
        }
        if !self.warnings.is_empty() {
            push(&mut out, "warnings:".into());
            for w in &self.warnings {
                push(&mut out, format!("  - {w}"));
            }
        }
        out
    }
}

/// Fixed-width decimal for mid-range magnitudes, scientific otherwise.
fn fmt_f(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-4 && v.abs() < 1e7 {
        format!("{v:.6}")
    } else {
        format!("{v:.6e}")
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_f(*x)).collect();
    format!("[{}]", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::market::MarketSpec;
    use crate::spectral::decompose;

    fn sample_report() -> AnalysisReport {
        let d = Matrix::from_rows(&[
            vec![-1.0, 0.0, -0.5],
            vec![0.0, -1.0, -0.5],
            vec![-0.5, -0.5, -1.0],
        ])
        .unwrap();
        let spec = MarketSpec::from_spillover(vec![10.0, 10.0, 15.0], d, vec![0.0; 3]).unwrap();
        let m = spec.normalize().unwrap();
        let eq = m.solve_equilibrium(&[0.0; 3]).unwrap();
        let dec = decompose(m.d_norm(), &eq.quantity).unwrap();
        AnalysisReport::new(Some("test".into()), &m, &dec, &eq)
    }

    #[test]
    fn json_round_trips_through_value() {
        let r = sample_report();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["n", "market", "spectrum", "equilibrium", "warnings"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["spectrum"]["eigenvalues"].is_array());
        assert!(v["equilibrium"]["consumer_surplus"].is_number());
    }

    #[test]
    fn text_rendering_is_deterministic() {
        let a = sample_report().render_text();
        let b = sample_report().render_text();
        assert_eq!(a, b);
        assert!(a.contains("pass-throughs"));
    }

    #[test]
    fn zero_variance_warning_appears() {
        let mut d = Matrix::identity(2);
        d.set(0, 0, -1.0);
        d.set(1, 1, -1.0);
        let spec = MarketSpec::from_spillover(vec![10.0; 2], d, vec![0.0; 2]).unwrap();
        let m = spec.normalize().unwrap();
        let eq = m.solve_equilibrium(&[0.0; 2]).unwrap();
        let dec = decompose(m.d_norm(), &eq.quantity).unwrap();
        let r = AnalysisReport::new(None, &m, &dec, &eq);
        assert!(r
            .warnings
            .iter()
            .any(|w| w.contains("no scope for budget-balanced intervention")));
    }
}
