//! JSON market description.
//!
//! ```json
//! {
//!   "assets": [
//!     {"type": "lognormal", "s0": 8, "sigma": 1.5},
//!     {"type": "nig", "s0": 100, "alpha": 12.5, "beta": -1.8, "delta": 0.3}
//!   ],
//!   "derivatives": [{"kind": "min_call", "strike": 3, "indices": [0, 1]}],
//!   "prices": [1.2]
//! }
//! ```
//!
//! Asset indices are 0-based. `indices` and `prices` are optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arbitrage::{Market, MarketSpec, PriceVector};
use crate::error::{Error, Result};
use crate::marginals::{Marginal, MarginalVector};
use crate::pricing::PayoffSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AssetEntry {
    Lognormal { s0: f64, sigma: f64 },
    Nig { s0: f64, alpha: f64, beta: f64, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeKind {
    MinCall,
    MinPut,
}

impl DerivativeKind {
    pub fn payoff(self, strike: f64) -> Result<PayoffSpec> {
        match self {
            DerivativeKind::MinCall => PayoffSpec::min_call(strike),
            DerivativeKind::MinPut => PayoffSpec::min_put(strike),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DerivativeKind::MinCall => "min_call",
            DerivativeKind::MinPut => "min_put",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivativeEntry {
    pub kind: DerivativeKind,
    pub strike: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpecFile {
    pub assets: Vec<AssetEntry>,
    #[serde(default)]
    pub derivatives: Vec<DerivativeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<f64>>,
}

fn at(location: impl Into<String>, e: Error) -> Error {
    Error::Spec {
        location: location.into(),
        message: e.to_string(),
    }
}

/// A validated spec file.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub file: MarketSpecFile,
    pub margins: MarginalVector,
    pub payoffs: Vec<PayoffSpec>,
    pub prices: Option<PriceVector>,
}

impl MarketSpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Spec {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn validate(self) -> Result<LoadedSpec> {
        let assets = self
            .assets
            .iter()
            .enumerate()
            .map(|(i, a)| {
                match *a {
                    AssetEntry::Lognormal { s0, sigma } => Marginal::lognormal(s0, sigma),
                    AssetEntry::Nig { s0, alpha, beta, delta } => Marginal::nig(s0, alpha, beta, delta),
                }
                .map_err(|e| match e {
                    // keep the variant so callers can tell a model precondition apart
                    Error::NoMartingaleDrift { .. } => e,
                    e => at(format!("assets[{i}]"), e),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let margins = MarginalVector::new(assets).map_err(|e| at("assets", e))?;
        let d = margins.dim();
        let mut payoffs = Vec::with_capacity(self.derivatives.len());
        for (k, entry) in self.derivatives.iter().enumerate() {
            payoffs.push(entry.kind.payoff(entry.strike).map_err(|e| at(format!("derivatives[{k}].strike"), e))?);
            if let Some(ix) = &entry.indices {
                let mut s = ix.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() != ix.len() || s.len() < 2 || s.iter().any(|&i| i >= d) {
                    return Err(Error::Spec {
                        location: format!("derivatives[{k}].indices"),
                        message: format!("expected at least two distinct asset indices below {d}, got {ix:?}"),
                    });
                }
            }
        }
        let prices = match &self.prices {
            None => None,
            Some(p) => {
                if p.len() != self.derivatives.len() {
                    return Err(Error::Spec {
                        location: "prices".into(),
                        message: format!("{} prices for {} derivatives", p.len(), self.derivatives.len()),
                    });
                }
                Some(PriceVector::new(p.clone()).map_err(|e| at("prices", e))?)
            }
        };
        Ok(LoadedSpec {
            file: self,
            margins,
            payoffs,
            prices,
        })
    }
}

impl LoadedSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        MarketSpecFile::from_json(text)?.validate()
    }

    pub fn read(path: &Path) -> Result<Self> {
        MarketSpecFile::read(path)?.validate()
    }

    pub fn subsets(&self) -> Vec<Option<Vec<usize>>> {
        self.file.derivatives.iter().map(|d| d.indices.clone()).collect()
    }

    pub fn market_spec(&self) -> Result<MarketSpec> {
        MarketSpec::with_subsets(self.margins.clone(), self.payoffs.clone(), self.subsets())
            .map_err(|e| at("derivatives", e))
    }

    pub fn market(&self) -> Result<Market> {
        Market::new(self.market_spec()?)
    }

    pub fn require_prices(&self) -> Result<&PriceVector> {
        self.prices.as_ref().ok_or_else(|| Error::Spec {
            location: "prices".into(),
            message: "this command needs observed prices".into(),
        })
    }
}
