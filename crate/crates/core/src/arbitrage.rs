//! Joint arbitrage detection for several simultaneously traded derivatives.
//!
//! Each observed price `p_k` restricts the set of admissible (survival)
//! quasi-copulas to `{Q : ρ̂_k(Q) = p_k}`. Intersecting all of them, the
//! pointwise minimum of the upper bounds must dominate the pointwise maximum
//! of the lower bounds. A point where it does not certifies that no single
//! pricing measure reproduces all prices.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::MarginalVector;
use crate::optimize::{nelder_mead_unit_cube, NelderMeadConfig};
use crate::pricing::{interval_of, pricing_functional, PayoffSpec, PriceInterval, QuadratureConfig};
use crate::quasicopula::{BoundSurface, Domain, Functional, FunctionalBounds, InverseConfig};

/// Marginals plus the traded payoffs, each optionally written on a subset
/// of the assets (0-based indices).
#[derive(Debug, Clone)]
pub struct MarketSpec {
    margins: MarginalVector,
    payoffs: Vec<PayoffSpec>,
    subsets: Vec<Option<Vec<usize>>>,
}

impl MarketSpec {
    pub fn new(margins: MarginalVector, payoffs: Vec<PayoffSpec>) -> Result<Self> {
        let n = payoffs.len();
        Self::with_subsets(margins, payoffs, vec![None; n])
    }

    pub fn with_subsets(
        margins: MarginalVector,
        payoffs: Vec<PayoffSpec>,
        subsets: Vec<Option<Vec<usize>>>,
    ) -> Result<Self> {
        if payoffs.is_empty() {
            return Err(Error::Config("a market needs at least one derivative".into()));
        }
        if subsets.len() != payoffs.len() {
            return Err(Error::Config(format!(
                "{} asset subsets given for {} derivatives",
                subsets.len(),
                payoffs.len()
            )));
        }
        let d = margins.dim();
        let mut normalized = Vec::with_capacity(subsets.len());
        for (k, s) in subsets.into_iter().enumerate() {
            let s = match s {
                None => None,
                Some(mut s) => {
                    s.sort_unstable();
                    s.dedup();
                    if s.len() < 2 || s.iter().any(|&i| i >= d) {
                        return Err(Error::Config(format!(
                            "derivative {k}: asset subset must hold at least two indices below {d}"
                        )));
                    }
                    Some(s)
                }
            };
            normalized.push(s);
        }
        let spec = Self {
            margins,
            payoffs,
            subsets: normalized,
        };
        if spec.shared_indices().len() < 2 {
            return Err(Error::Config(
                "the assets common to all derivatives must number at least two".into(),
            ));
        }
        for (k, p) in spec.payoffs.iter().enumerate() {
            if let crate::pricing::PayoffKind::Discrete(dp) = p.kind() {
                let want = spec.indices(k).len();
                if dp.dim != want {
                    return Err(Error::Config(format!(
                        "derivative {k}: payoff dimension {} does not match its {want} assets",
                        dp.dim
                    )));
                }
            }
        }
        Ok(spec)
    }

    pub fn margins(&self) -> &MarginalVector {
        &self.margins
    }

    pub fn payoffs(&self) -> &[PayoffSpec] {
        &self.payoffs
    }

    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }

    /// Asset indices underlying derivative `k`.
    pub fn indices(&self, k: usize) -> Vec<usize> {
        self.subsets[k]
            .clone()
            .unwrap_or_else(|| (0..self.margins.dim()).collect())
    }

    /// Indices common to every derivative.
    pub fn shared_indices(&self) -> Vec<usize> {
        (0..self.margins.dim())
            .filter(|i| (0..self.len()).all(|k| self.indices(k).contains(i)))
            .collect()
    }

    fn all_share_indices(&self) -> Option<Vec<usize>> {
        let first = self.indices(0);
        (1..self.len()).all(|k| self.indices(k) == first).then_some(first)
    }
}

/// Observed prices, one per derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        if let Some((k, p)) = prices.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Config(format!("price {k} must be finite and non-negative, got {p}")));
        }
        Ok(Self(prices))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Arbitrage,
    NoDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub verdict: Verdict,
    /// Point where the envelopes cross; present iff the verdict is arbitrage
    /// from the joint search.
    pub witness: Option<Vec<f64>>,
    /// Objective at the witness, or the best value found when there is none.
    pub objective: Option<f64>,
    pub grid_n: usize,
    pub grid_minimum: Option<f64>,
    pub grid_argmin: Option<Vec<f64>>,
    pub refinement_iterations: usize,
    /// Whether each price lies inside its own no-arbitrage interval.
    pub feasible: Vec<bool>,
    pub intervals: Vec<PriceInterval>,
    /// First derivative whose price alone is an arbitrage.
    pub infeasible_derivative: Option<usize>,
    /// Assets the search ran over.
    pub indices: Vec<usize>,
}

/// Search parameters for [`Market::detect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub grid_n: usize,
    pub refine: bool,
    /// Grid minima below `-refine_threshold` trigger refinement.
    pub refine_threshold: f64,
    /// Arbitrage iff the final minimum is below `-tolerance`.
    pub tolerance: f64,
    pub nelder_mead: NelderMeadConfig,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            grid_n: 11,
            refine: true,
            refine_threshold: 1e-9,
            tolerance: 1e-6,
            nelder_mead: NelderMeadConfig::default(),
        }
    }
}

/// A market with its price functionals and single-derivative intervals
/// precomputed.
pub struct Market {
    spec: MarketSpec,
    functionals: Vec<Arc<dyn Functional>>,
    rho_fh: Vec<(f64, f64)>,
    intervals: Vec<PriceInterval>,
    inverse: InverseConfig,
}

impl std::fmt::Debug for Market {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Market")
            .field("spec", &self.spec)
            .field("intervals", &self.intervals)
            .finish()
    }
}

impl Market {
    pub fn new(spec: MarketSpec) -> Result<Self> {
        Self::with_config(spec, QuadratureConfig::default(), InverseConfig::default())
    }

    pub fn with_config(spec: MarketSpec, quad: QuadratureConfig, inverse: InverseConfig) -> Result<Self> {
        let mut functionals = Vec::with_capacity(spec.len());
        let mut rho_fh = Vec::with_capacity(spec.len());
        let mut intervals = Vec::with_capacity(spec.len());
        for (k, payoff) in spec.payoffs.iter().enumerate() {
            let margins = spec.margins.select(&spec.indices(k))?;
            let f = pricing_functional(payoff, &margins, &quad)?;
            let domain = f.domain();
            rho_fh.push((
                f.apply(&|u: &[f64]| domain.fh_lower(u)),
                f.apply(&|u: &[f64]| domain.fh_upper(u)),
            ));
            intervals.push(interval_of(&*f));
            functionals.push(f);
        }
        Ok(Self {
            spec,
            functionals,
            rho_fh,
            intervals,
            inverse,
        })
    }

    pub fn spec(&self) -> &MarketSpec {
        &self.spec
    }

    pub fn intervals(&self) -> &[PriceInterval] {
        &self.intervals
    }

    pub fn functional(&self, k: usize) -> &Arc<dyn Functional> {
        &self.functionals[k]
    }

    fn check_prices(&self, p: &PriceVector) -> Result<()> {
        if p.len() != self.spec.len() {
            return Err(Error::Config(format!(
                "{} prices given for {} derivatives",
                p.len(),
                self.spec.len()
            )));
        }
        Ok(())
    }

    fn functional_bounds(&self, k: usize, price: f64) -> Result<Arc<FunctionalBounds>> {
        let iv = self.intervals[k];
        if !iv.contains(price) {
            return Err(Error::InfeasiblePrice {
                index: k,
                price,
                lower: iv.lower,
                upper: iv.upper,
            });
        }
        let (at_w, at_m) = self.rho_fh[k];
        Ok(Arc::new(FunctionalBounds::with_cached(
            Arc::clone(&self.functionals[k]),
            price,
            at_w,
            at_m,
            self.inverse,
        )?))
    }

    /// Lower and upper bounds on all (survival) quasi-copulas that price
    /// derivative `k` at `price`, over the derivative's own assets.
    pub fn constrained_bounds(&self, k: usize, price: f64) -> Result<(BoundSurface, BoundSurface)> {
        if k >= self.spec.len() {
            return Err(Error::Config(format!("no derivative with index {k}")));
        }
        Ok(self.functional_bounds(k, price)?.surfaces())
    }

    /// Minimal upper and maximal lower bound over all price constraints.
    pub fn envelopes(&self, p: &PriceVector) -> Result<Envelopes> {
        self.check_prices(p)?;
        let domain = self.functionals[0].domain();
        if self.functionals.iter().any(|f| f.domain() != domain) {
            return Err(Error::Unsupported(
                "derivatives mix primal and survival bound families".into(),
            ));
        }
        let indices = self.spec.indices(0);
        if (1..self.spec.len()).any(|k| self.spec.indices(k) != indices) {
            return Err(Error::Unsupported(
                "derivatives written on different asset subsets".into(),
            ));
        }
        let bounds = p
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, &price)| self.functional_bounds(k, price))
            .collect::<Result<Vec<_>>>()?;
        Ok(Envelopes {
            dim: indices.len(),
            domain,
            bounds,
        })
    }

    /// `Q̄_p(u) - Q̲_p(u)`.
    pub fn f_obj(&self, u: &[f64], p: &PriceVector) -> Result<f64> {
        let env = self.envelopes(p)?;
        env.check_point(u)?;
        Ok(env.gap(u))
    }

    /// Grid search (optionally refined) for a point where the envelopes cross.
    ///
    /// All derivatives must be written on every asset; for markets where
    /// they share a proper subset use [`Market::detect_margins`].
    pub fn detect(&self, p: &PriceVector, cfg: &DetectConfig) -> Result<DetectionReport> {
        let all: Vec<usize> = (0..self.spec.margins.dim()).collect();
        if (0..self.spec.len()).any(|k| self.spec.indices(k) != all) {
            return Err(Error::Unsupported(
                "derivatives do not all depend on every asset; use detect_margins".into(),
            ));
        }
        self.search(p, cfg)
    }

    /// Detection over the margin of the assets shared by all derivatives.
    pub fn detect_margins(&self, p: &PriceVector, cfg: &DetectConfig) -> Result<DetectionReport> {
        if self.spec.all_share_indices().is_none() {
            return Err(Error::Unsupported(
                "derivatives on overlapping but unequal asset subsets".into(),
            ));
        }
        self.search(p, cfg)
    }

    fn search(&self, p: &PriceVector, cfg: &DetectConfig) -> Result<DetectionReport> {
        self.check_prices(p)?;
        if cfg.grid_n < 3 {
            return Err(Error::Config(format!("grid size must be at least 3, got {}", cfg.grid_n)));
        }
        let indices = self.spec.indices(0);
        let feasible: Vec<bool> = p
            .as_slice()
            .iter()
            .zip(&self.intervals)
            .map(|(&price, iv)| iv.contains(price))
            .collect();
        let mut report = DetectionReport {
            verdict: Verdict::NoDecision,
            witness: None,
            objective: None,
            grid_n: cfg.grid_n,
            grid_minimum: None,
            grid_argmin: None,
            refinement_iterations: 0,
            feasible: feasible.clone(),
            intervals: self.intervals.clone(),
            infeasible_derivative: None,
            indices,
        };
        if let Some(k) = feasible.iter().position(|ok| !ok) {
            report.verdict = Verdict::Arbitrage;
            report.infeasible_derivative = Some(k);
            return Ok(report);
        }

        let env = self.envelopes(p)?;
        let (argmin, min) = env.grid_minimum(cfg.grid_n);
        report.grid_minimum = Some(min);
        report.grid_argmin = Some(argmin.clone());

        let (mut best_x, mut best) = (argmin, min);
        if cfg.refine && min < -cfg.refine_threshold {
            let nm = NelderMeadConfig {
                step: cfg.nelder_mead.step.min(0.5 / (cfg.grid_n + 1) as f64),
                ..cfg.nelder_mead
            };
            let r = nelder_mead_unit_cube(|u| env.gap(u), &best_x, nm);
            report.refinement_iterations = r.iterations;
            let interior = r.x.iter().all(|&v| v > 0.0 && v < 1.0);
            if interior && r.value < best {
                best_x = r.x;
                best = r.value;
            }
        }
        report.objective = Some(best);
        if best < -cfg.tolerance {
            report.verdict = Verdict::Arbitrage;
            report.witness = Some(best_x);
        }
        Ok(report)
    }
}

/// The envelopes `Q̄_p = min_k upper_k` and `Q̲_p = max_k lower_k`.
pub struct Envelopes {
    dim: usize,
    domain: Domain,
    bounds: Vec<Arc<FunctionalBounds>>,
}

impl Envelopes {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim || u.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Domain(format!("{u:?} is not a point of [0,1]^{}", self.dim)));
        }
        Ok(())
    }

    pub fn upper(&self, u: &[f64]) -> f64 {
        self.bounds
            .iter()
            .map(|b| b.upper_at(u))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn lower(&self, u: &[f64]) -> f64 {
        self.bounds
            .iter()
            .map(|b| b.lower_at(u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn gap(&self, u: &[f64]) -> f64 {
        self.upper(u) - self.lower(u)
    }

    pub fn upper_surface(self: &Arc<Self>) -> BoundSurface {
        let e = Arc::clone(self);
        BoundSurface::new(
            self.dim,
            self.domain,
            crate::quasicopula::Side::Upper,
            crate::quasicopula::Provenance::Envelope,
            move |u| e.upper(u),
        )
    }

    pub fn lower_surface(self: &Arc<Self>) -> BoundSurface {
        let e = Arc::clone(self);
        BoundSurface::new(
            self.dim,
            self.domain,
            crate::quasicopula::Side::Lower,
            crate::quasicopula::Provenance::Envelope,
            move |u| e.lower(u),
        )
    }

    /// Minimum of the gap over `{1/(n+1), ..., n/(n+1)}^d`; ties go to the
    /// first point in lexicographic order.
    pub fn grid_minimum(&self, n: usize) -> (Vec<f64>, f64) {
        let total = n.pow(self.dim as u32);
        let point = |mut idx: usize| -> Vec<f64> {
            let mut u = vec![0.0; self.dim];
            for j in (0..self.dim).rev() {
                u[j] = (idx % n + 1) as f64 / (n + 1) as f64;
                idx /= n;
            }
            u
        };
        let values: Vec<f64> = (0..total).into_par_iter().map(|i| self.gap(&point(i))).collect();
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if *v < values[best] {
                best = i;
            }
        }
        (point(best), values[best])
    }
}

/// Free-function form of [`Market::constrained_bounds`].
pub fn constrained_bounds(k: usize, price: f64, market: &Market) -> Result<(BoundSurface, BoundSurface)> {
    market.constrained_bounds(k, price)
}

/// Free-function form of [`Market::envelopes`].
pub fn envelopes(p: &PriceVector, market: &Market) -> Result<Envelopes> {
    market.envelopes(p)
}

/// Free-function form of [`Market::f_obj`].
pub fn f_obj(u: &[f64], p: &PriceVector, market: &Market) -> Result<f64> {
    market.f_obj(u, p)
}

/// Free-function form of [`Market::detect`].
pub fn detect(p: &PriceVector, market: &Market, grid_n: usize, refine: bool) -> Result<DetectionReport> {
    market.detect(
        p,
        &DetectConfig {
            grid_n,
            refine,
            ..DetectConfig::default()
        },
    )
}

/// Free-function form of [`Market::detect_margins`].
pub fn detect_margins(p: &PriceVector, market: &Market, grid_n: usize) -> Result<DetectionReport> {
    market.detect_margins(
        p,
        &DetectConfig {
            grid_n,
            ..DetectConfig::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::Marginal;
    use crate::quasicopula::{survival_fh_lower, survival_fh_upper};

    fn setting1() -> Market {
        let margins = MarginalVector::new(vec![
            Marginal::lognormal(8.0, 1.5).unwrap(),
            Marginal::lognormal(10.0, 1.0).unwrap(),
            Marginal::lognormal(12.0, 0.5).unwrap(),
        ])
        .unwrap();
        let payoffs = vec![PayoffSpec::min_call(3.0).unwrap(), PayoffSpec::min_put(8.0).unwrap()];
        Market::new(MarketSpec::new(margins, payoffs).unwrap()).unwrap()
    }

    fn prices(p: &[f64]) -> PriceVector {
        PriceVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn witness_values_setting1() {
        let m = setting1();
        let u = [0.7, 0.5, 0.1];
        let a = m.f_obj(&u, &prices(&[3.5, 6.0])).unwrap();
        let b = m.f_obj(&u, &prices(&[0.3, 4.5])).unwrap();
        assert!((a + 0.0952).abs() < 5e-3, "{a}");
        assert!((b + 0.1257).abs() < 5e-3, "{b}");
    }

    #[test]
    fn endpoint_prices_collapse_to_fh() {
        let m = setting1();
        let iv = m.intervals()[0];
        let (_, upper) = m.constrained_bounds(0, iv.upper).unwrap();
        let (lower, _) = m.constrained_bounds(0, iv.lower).unwrap();
        for u in [[0.7, 0.5, 0.1], [0.2, 0.3, 0.4], [0.05, 0.9, 0.5]] {
            assert!((upper.eval(&u) - survival_fh_upper(&u)).abs() < 1e-9);
            assert!((lower.eval(&u) - survival_fh_lower(&u)).abs() < 1e-9);
        }
    }

    #[test]
    fn constrained_bounds_sandwich() {
        let m = setting1();
        let (lo, hi) = m.constrained_bounds(0, 3.5).unwrap();
        let u = [0.7, 0.5, 0.1];
        let (l, h) = (lo.eval(&u), hi.eval(&u));
        assert!(survival_fh_lower(&u) <= l + 1e-12);
        assert!(l <= h + 1e-12);
        assert!(h <= survival_fh_upper(&u) + 1e-12);
    }

    #[test]
    fn infeasible_price_short_circuits() {
        let m = setting1();
        let r = m.detect(&prices(&[4.0, 6.0]), &DetectConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Arbitrage);
        assert_eq!(r.infeasible_derivative, Some(0));
        assert_eq!(r.feasible, vec![false, true]);
        assert!(r.witness.is_none());
        assert!(matches!(
            m.constrained_bounds(0, 4.0),
            Err(Error::InfeasiblePrice { index: 0, .. })
        ));
    }

    #[test]
    fn detects_setting1_arbitrage() {
        let m = setting1();
        let r = m.detect(&prices(&[3.5, 6.0]), &DetectConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Arbitrage);
        assert!(r.objective.unwrap() <= -0.09);
        let w = r.witness.unwrap();
        assert!(w.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn single_derivative_is_never_arbitrage() {
        let margins = setting1().spec().margins().clone();
        let m = Market::new(MarketSpec::new(margins, vec![PayoffSpec::min_call(3.0).unwrap()]).unwrap()).unwrap();
        let r = m
            .detect(
                &prices(&[2.0]),
                &DetectConfig {
                    grid_n: 5,
                    ..DetectConfig::default()
                },
            )
            .unwrap();
        assert_eq!(r.verdict, Verdict::NoDecision);
        assert!(r.grid_minimum.unwrap() >= -1e-9);
    }

    #[test]
    fn price_count_must_match() {
        let m = setting1();
        assert!(m.f_obj(&[0.5, 0.5, 0.5], &prices(&[3.5])).is_err());
        assert!(PriceVector::new(vec![-1.0]).is_err());
    }

    #[test]
    fn unequal_subsets_are_unsupported() {
        let base = setting1();
        let mut v: Vec<Marginal> = base.spec().margins().iter().cloned().collect();
        v.push(Marginal::lognormal(9.0, 0.8).unwrap());
        let margins = MarginalVector::new(v).unwrap();
        let spec = MarketSpec::with_subsets(
            margins,
            vec![PayoffSpec::min_call(3.0).unwrap(), PayoffSpec::min_put(8.0).unwrap()],
            vec![Some(vec![0, 1, 2]), Some(vec![1, 2, 3])],
        )
        .unwrap();
        let m = Market::new(spec).unwrap();
        let p = prices(&[1.0, 5.0]);
        assert!(matches!(m.detect_margins(&p, &DetectConfig::default()), Err(Error::Unsupported(_))));
        assert!(matches!(m.detect(&p, &DetectConfig::default()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn grid_minimum_is_deterministic() {
        let m = setting1();
        let env = m.envelopes(&prices(&[3.5, 5.0])).unwrap();
        assert_eq!(env.grid_minimum(5), env.grid_minimum(5));
    }
}
