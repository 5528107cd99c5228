//! Market and tax files: JSON on disk, validated into market types.
//!
//! A market file carries the demand intercepts, marginal costs and exactly
//! one of the two curvature matrices (`b_matrix` or `d_matrix`) as
//! row-major nested arrays. Values survive a serialize/parse round trip
//! exactly; all dimension and symmetry checks happen at `to_spec` time so
//! a file parses if and only if it describes a valid market.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::market::MarketSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketFile {
    pub schema_version: u32,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub beta: Vec<f64>,
    pub cost: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_matrix: Option<Vec<Vec<f64>>>,
}

impl MarketFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: MarketFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("market file: {e}")))?;
        if file.schema_version > SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported schema_version {} (newest known is {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("market file serializes");
        s.push('\n');
        s
    }

    /// Validates dimensions and matrix shape and builds the market.
    pub fn to_spec(&self) -> Result<MarketSpec> {
        if self.beta.len() != self.n {
            return Err(Error::InvalidMarket(format!(
                "beta has {} entries, n = {}",
                self.beta.len(),
                self.n
            )));
        }
        if self.cost.len() != self.n {
            return Err(Error::InvalidMarket(format!(
                "cost has {} entries, n = {}",
                self.cost.len(),
                self.n
            )));
        }
        if self.beta.iter().chain(&self.cost).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMarket("non-finite beta or cost entry".into()));
        }
        match (&self.b_matrix, &self.d_matrix) {
            (Some(b), None) => {
                let m = nested_to_matrix(b, self.n, "b_matrix")?;
                MarketSpec::from_utility_curvature(self.beta.clone(), m, self.cost.clone())
            }
            (None, Some(d)) => {
                let m = nested_to_matrix(d, self.n, "d_matrix")?;
                MarketSpec::from_spillover(self.beta.clone(), m, self.cost.clone())
            }
            (Some(_), Some(_)) => Err(Error::InvalidMarket(
                "market file has both b_matrix and d_matrix; give exactly one".into(),
            )),
            (None, None) => Err(Error::InvalidMarket(
                "market file has neither b_matrix nor d_matrix; give exactly one".into(),
            )),
        }
    }

    /// Parses and validates in one step.
    pub fn load(text: &str) -> Result<(Self, MarketSpec)> {
        let file = Self::from_json(text)?;
        let spec = file.to_spec()?;
        Ok((file, spec))
    }
}

fn nested_to_matrix(rows: &[Vec<f64>], n: usize, name: &str) -> Result<Matrix> {
    if rows.len() != n {
        return Err(Error::InvalidMarket(format!(
            "{name} has {} rows, n = {n}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidMarket(format!(
                "{name} row {i} has {} entries, n = {n}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMarket(format!(
                "{name} row {i} has a non-finite entry"
            )));
        }
    }
    Matrix::from_rows(rows)
}

/// Per-unit target taxes in the same units as the market file's costs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauFile {
    pub tau: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl TauFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TauFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("tau file: {e}")))?;
        if file.tau.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("tau file has a non-finite entry".into()));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tau file serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_json() -> String {
        let r = 1.0 / 2.0_f64.sqrt();
        MarketFile {
            schema_version: SCHEMA_VERSION,
            n: 3,
            label: Some("triangle".into()),
            beta: vec![10.0, 10.0, 10.0],
            cost: vec![0.0; 3],
            b_matrix: None,
            d_matrix: Some(vec![
                vec![-1.0, 0.0, -r],
                vec![0.0, -1.0, -r],
                vec![-r, -r, -1.0],
            ]),
        }
        .to_json()
    }

    #[test]
    fn round_trip_is_numerically_exact() {
        let text = triangle_json();
        let a = MarketFile::from_json(&text).unwrap();
        let b = MarketFile::from_json(&a.to_json()).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.d_matrix, b.d_matrix);
        // full-precision doubles survive too
        let mut c = a.clone();
        c.beta[0] = 0.1 + 0.2; // not representable exactly in decimal
        let d = MarketFile::from_json(&c.to_json()).unwrap();
        assert_eq!(c.beta[0].to_bits(), d.beta[0].to_bits());
    }

    #[test]
    fn parse_then_validate() {
        let (_, spec) = MarketFile::load(&triangle_json()).unwrap();
        assert_eq!(spec.n(), 3);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = MarketFile::from_json("{ \"n\": 3, ").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn both_matrices_rejected() {
        let mut f = MarketFile::from_json(&triangle_json()).unwrap();
        f.b_matrix = Some(vec![vec![1.0, 0.0, 0.0]; 3]);
        assert!(matches!(f.to_spec(), Err(Error::InvalidMarket(_))));
        f.b_matrix = None;
        f.d_matrix = None;
        assert!(matches!(f.to_spec(), Err(Error::InvalidMarket(_))));
    }

    #[test]
    fn dimension_mismatches_rejected() {
        let mut f = MarketFile::from_json(&triangle_json()).unwrap();
        f.n = 4;
        assert!(f.to_spec().is_err());
    }

    #[test]
    fn asymmetry_is_named() {
        let mut f = MarketFile::from_json(&triangle_json()).unwrap();
        if let Some(d) = f.d_matrix.as_mut() {
            d[0][2] = -0.5; // breaks symmetry with d[2][0]
        }
        let msg = f.to_spec().unwrap_err().to_string();
        assert!(msg.contains("asymmetric"), "{msg}");
        assert!(msg.contains("[0][2]"), "{msg}");
    }

    #[test]
    fn future_schema_is_rejected() {
        let text = triangle_json().replace(
            &format!("\"schema_version\": {SCHEMA_VERSION}"),
            "\"schema_version\": 99",
        );
        assert!(matches!(
            MarketFile::from_json(&text),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn tau_file_round_trip() {
        let t = TauFile {
            tau: vec![0.1, -0.2, 0.3],
            label: None,
        };
        let back = TauFile::from_json(&t.to_json()).unwrap();
        assert_eq!(t.tau, back.tau);
        assert!(TauFile::from_json("{\"tau\": [1e999]}").is_err());
    }
}
