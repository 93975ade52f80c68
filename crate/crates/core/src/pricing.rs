//! Expectation operators for min-options and finite-atom payoffs, evaluated
//! against arbitrary (survival) quasi-copulas, plus the single-derivative
//! no-arbitrage intervals they induce.
//!
//! A min-call `(min x_i - K)^+` induces a payoff measure carried by the
//! diagonal `{x_1 = ... = x_d >= K}`, so its price under a survival function
//! `Q̂` is the one-dimensional integral `∫_K^∞ Q̂(F_1(x), ..., F_d(x)) dx`.
//! The min-put is `K - ∫_0^K Q̂(F(x)) dx`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::MarginalVector;
use crate::quasicopula::{BoundSurface, Domain, Functional, Monotonicity};

/// The sign class of a payoff's iterated differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaClass {
    /// `z` is Δ-monotonic.
    Monotonic,
    /// `z` is Δ-antitonic.
    Antitonic,
    /// `-z` is Δ-monotonic.
    NegMonotonic,
    /// `-z` is Δ-antitonic.
    NegAntitonic,
}

impl DeltaClass {
    /// Domain in which the price is a monotone functional.
    pub fn domain(self) -> Domain {
        match self {
            DeltaClass::Monotonic | DeltaClass::NegMonotonic => Domain::Survival,
            DeltaClass::Antitonic | DeltaClass::NegAntitonic => Domain::Primal,
        }
    }

    pub fn monotonicity(self) -> Monotonicity {
        match self {
            DeltaClass::Monotonic | DeltaClass::Antitonic => Monotonicity::NonDecreasing,
            DeltaClass::NegMonotonic | DeltaClass::NegAntitonic => Monotonicity::NonIncreasing,
        }
    }

    /// Whether an atom of weight `w` on a margin of size `n` fits the class.
    fn admits(self, n: usize, w: f64) -> bool {
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        match self {
            DeltaClass::Monotonic => w >= 0.0,
            DeltaClass::NegMonotonic => w <= 0.0,
            DeltaClass::Antitonic => parity * w >= 0.0,
            DeltaClass::NegAntitonic => parity * w <= 0.0,
        }
    }
}

/// A point mass of the payoff measure on one margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<f64>,
    pub weight: f64,
}

/// Atoms of the payoff measure induced on the margin `indices` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginAtoms {
    pub indices: Vec<usize>,
    pub atoms: Vec<Atom>,
}

/// A payoff `f(x) = f(0) + Σ_J Σ_atoms w · 1{x_j > a_j for all j ∈ J}`,
/// i.e. one whose induced measures are finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePayoff {
    pub dim: usize,
    pub value_at_origin: f64,
    pub margins: Vec<MarginAtoms>,
}

impl DiscretePayoff {
    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            dim,
            value_at_origin: value,
            margins: Vec::new(),
        }
    }

    fn validate(&self, class: DeltaClass) -> Result<()> {
        for m in &self.margins {
            let mut seen = m.indices.clone();
            seen.sort_unstable();
            seen.dedup();
            if m.indices.is_empty()
                || seen.len() != m.indices.len()
                || seen.iter().any(|&i| i >= self.dim)
            {
                return Err(Error::Config(format!(
                    "margin {:?} is not a non-empty subset of 0..{}",
                    m.indices, self.dim
                )));
            }
            for a in &m.atoms {
                if a.point.len() != m.indices.len() || a.point.iter().any(|x| !(*x >= 0.0)) {
                    return Err(Error::Config(format!(
                        "atom {:?} does not fit margin {:?}",
                        a.point, m.indices
                    )));
                }
                if !class.admits(m.indices.len(), a.weight) {
                    return Err(Error::Config(format!(
                        "atom weight {} on margin {:?} violates the {:?} sign pattern",
                        a.weight, m.indices, class
                    )));
                }
            }
        }
        Ok(())
    }

    /// Direct evaluation of the payoff at a price vector.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.value_at_origin;
        for m in &self.margins {
            for a in &m.atoms {
                if m.indices.iter().zip(&a.point).all(|(&i, &p)| x[i] > p) {
                    v += a.weight;
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffKind {
    MinCall { strike: f64 },
    MinPut { strike: f64 },
    Discrete(DiscretePayoff),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffSpec {
    kind: PayoffKind,
    class: DeltaClass,
}

impl PayoffSpec {
    pub fn min_call(strike: f64) -> Result<Self> {
        check_strike(strike)?;
        Ok(Self {
            kind: PayoffKind::MinCall { strike },
            class: DeltaClass::Monotonic,
        })
    }

    pub fn min_put(strike: f64) -> Result<Self> {
        check_strike(strike)?;
        Ok(Self {
            kind: PayoffKind::MinPut { strike },
            class: DeltaClass::NegMonotonic,
        })
    }

    pub fn discrete(payoff: DiscretePayoff, class: DeltaClass) -> Result<Self> {
        payoff.validate(class)?;
        Ok(Self {
            kind: PayoffKind::Discrete(payoff),
            class,
        })
    }

    pub fn kind(&self) -> &PayoffKind {
        &self.kind
    }

    pub fn class(&self) -> DeltaClass {
        self.class
    }

    pub fn strike(&self) -> Option<f64> {
        match self.kind {
            PayoffKind::MinCall { strike } | PayoffKind::MinPut { strike } => Some(strike),
            PayoffKind::Discrete(_) => None,
        }
    }

    /// Payoff value at a price vector.
    pub fn value(&self, x: &[f64]) -> f64 {
        let min = || x.iter().copied().fold(f64::INFINITY, f64::min);
        match &self.kind {
            PayoffKind::MinCall { strike } => (min() - strike).max(0.0),
            PayoffKind::MinPut { strike } => (strike - min()).max(0.0),
            PayoffKind::Discrete(p) => p.value(x),
        }
    }
}

fn check_strike(strike: f64) -> Result<()> {
    if strike.is_finite() && strike >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("strike must be finite and non-negative, got {strike}")))
    }
}

/// Diagonal quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Number of Simpson sub-intervals (rounded up to even).
    pub intervals: usize,
    /// Upper integration limit is the largest `1 - tail_prob` quantile.
    pub tail_prob: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            intervals: 2000,
            tail_prob: 1e-8,
        }
    }
}

/// Composite Simpson nodes on `[lo, hi]` with the marginal CDFs cached at
/// every node.
///
/// Nodes are uniform in `t` with `x = lo + c (e^t - 1)`, which keeps the
/// resolution fine near the strike while still reaching far into the
/// right tail.
#[derive(Debug, Clone)]
pub struct DiagonalGrid {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cdfs: Vec<f64>,
}

impl DiagonalGrid {
    pub fn new(margins: &MarginalVector, lo: f64, hi: f64, intervals: usize) -> Result<Self> {
        let scale = 0.5 * margins.min_quantile(0.5)?;
        Ok(Self::with_scale(margins, lo, hi, intervals, scale))
    }

    fn with_scale(margins: &MarginalVector, lo: f64, hi: f64, intervals: usize, scale: f64) -> Self {
        let dim = margins.dim();
        if hi <= lo {
            return Self {
                dim,
                nodes: Vec::new(),
                weights: Vec::new(),
                cdfs: Vec::new(),
            };
        }
        let n = intervals.max(2).div_ceil(2) * 2;
        let t_max = ((hi - lo) / scale).ln_1p();
        let h = t_max / n as f64;
        let mut nodes = Vec::with_capacity(n + 1);
        let mut weights = Vec::with_capacity(n + 1);
        let mut cdfs = vec![0.0; (n + 1) * dim];
        for j in 0..=n {
            let t = h * j as f64;
            let x = if j == n { hi } else { lo + scale * t.exp_m1() };
            let simpson = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            nodes.push(x);
            weights.push(simpson * h / 3.0 * scale * t.exp());
            margins.cdfs_at(x, &mut cdfs[j * dim..(j + 1) * dim]);
        }
        Self {
            dim,
            nodes,
            weights,
            cdfs,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `∫ q(F_1(x), ..., F_d(x)) dx` over the grid's interval.
    pub fn integrate(&self, q: &dyn Fn(&[f64]) -> f64) -> f64 {
        self.weights
            .iter()
            .zip(self.cdfs.chunks_exact(self.dim))
            .map(|(w, u)| w * q(u))
            .sum()
    }
}

fn upper_limit(margins: &MarginalVector, cfg: &QuadratureConfig) -> Result<f64> {
    margins.max_quantile(1.0 - cfg.tail_prob)
}

/// Price functional of a min-option: `Q̂ ↦ π̂_z(Q̂)` on a cached grid.
#[derive(Debug, Clone)]
pub struct MinOptionFunctional {
    call: bool,
    strike: f64,
    grid: DiagonalGrid,
}

impl MinOptionFunctional {
    pub fn new(payoff: &PayoffSpec, margins: &MarginalVector, cfg: &QuadratureConfig) -> Result<Self> {
        let hi = upper_limit(margins, cfg)?;
        let (call, strike, lo, top) = match payoff.kind {
            PayoffKind::MinCall { strike } => (true, strike, strike, hi),
            PayoffKind::MinPut { strike } => (false, strike, 0.0, strike.min(hi)),
            PayoffKind::Discrete(_) => {
                return Err(Error::Config("not a min-option payoff".into()));
            }
        };
        let grid = DiagonalGrid::new(margins, lo, top, cfg.intervals)?;
        Ok(Self { call, strike, grid })
    }

    pub fn grid(&self) -> &DiagonalGrid {
        &self.grid
    }
}

impl Functional for MinOptionFunctional {
    fn dim(&self) -> usize {
        self.grid.dim
    }

    fn domain(&self) -> Domain {
        Domain::Survival
    }

    fn monotonicity(&self) -> Monotonicity {
        if self.call {
            Monotonicity::NonDecreasing
        } else {
            Monotonicity::NonIncreasing
        }
    }

    fn apply(&self, q: &dyn Fn(&[f64]) -> f64) -> f64 {
        let integral = self.grid.integrate(q);
        if self.call {
            integral
        } else {
            self.strike - integral
        }
    }
}

fn require_survival(q: &BoundSurface, margins: &MarginalVector) -> Result<()> {
    if q.domain() != Domain::Survival {
        return Err(Error::Config("min-option prices need a survival-domain surface".into()));
    }
    if q.dim() != margins.dim() {
        return Err(Error::Config(format!(
            "surface dimension {} does not match {} marginals",
            q.dim(),
            margins.dim()
        )));
    }
    Ok(())
}

/// `∫_K^∞ Q̂(F_1(x), ..., F_d(x)) dx`.
pub fn pi_min_call(qhat: &BoundSurface, margins: &MarginalVector, strike: f64, cfg: &QuadratureConfig) -> Result<f64> {
    require_survival(qhat, margins)?;
    let f = MinOptionFunctional::new(&PayoffSpec::min_call(strike)?, margins, cfg)?;
    Ok(f.apply(qhat.as_fn()))
}

/// `K - ∫_0^K Q̂(F_1(x), ..., F_d(x)) dx`.
pub fn pi_min_put(qhat: &BoundSurface, margins: &MarginalVector, strike: f64, cfg: &QuadratureConfig) -> Result<f64> {
    require_survival(qhat, margins)?;
    let f = MinOptionFunctional::new(&PayoffSpec::min_put(strike)?, margins, cfg)?;
    Ok(f.apply(qhat.as_fn()))
}

/// One atom with its margin and CDF-transformed location.
#[derive(Debug, Clone)]
struct PreparedAtom {
    indices: Vec<usize>,
    levels: Vec<f64>,
    weight: f64,
}

/// Price functional of a finite-atom payoff, exact (no quadrature).
#[derive(Debug, Clone)]
pub struct DiscreteFunctional {
    dim: usize,
    class: DeltaClass,
    value_at_origin: f64,
    atoms: Vec<PreparedAtom>,
}

impl DiscreteFunctional {
    pub fn new(payoff: &PayoffSpec, margins: &MarginalVector) -> Result<Self> {
        let PayoffKind::Discrete(p) = &payoff.kind else {
            return Err(Error::Config("not a discrete-measure payoff".into()));
        };
        if p.dim != margins.dim() {
            return Err(Error::Config(format!(
                "payoff dimension {} does not match {} marginals",
                p.dim,
                margins.dim()
            )));
        }
        let atoms = p
            .margins
            .iter()
            .flat_map(|m| {
                m.atoms.iter().map(move |a| PreparedAtom {
                    indices: m.indices.clone(),
                    levels: m
                        .indices
                        .iter()
                        .zip(&a.point)
                        .map(|(&i, &x)| margins.get(i).cdf(x))
                        .collect(),
                    weight: a.weight,
                })
            })
            .collect();
        Ok(Self {
            dim: p.dim,
            class: payoff.class,
            value_at_origin: p.value_at_origin,
            atoms,
        })
    }

    /// `f(0) + Σ_J Σ_atoms w · Q̂_J(F_J(a))` with `Q̂_J` read off `q`, which
    /// lives in `domain`.
    fn evaluate(&self, domain: Domain, q: &dyn Fn(&[f64]) -> f64) -> f64 {
        let mut buf = vec![0.0; self.dim];
        let mut total = self.value_at_origin;
        for a in &self.atoms {
            total += a.weight * margin_survival(domain, q, &a.indices, &a.levels, &mut buf);
        }
        total
    }
}

/// Survival function of the `indices`-margin at `levels`.
///
/// For a survival surface the other coordinates are set to 0. For a primal
/// surface the margin survival function is recovered by inclusion-exclusion
/// over its lower-dimensional margins, which set unused coordinates to 1.
fn margin_survival(
    domain: Domain,
    q: &dyn Fn(&[f64]) -> f64,
    indices: &[usize],
    levels: &[f64],
    buf: &mut [f64],
) -> f64 {
    match domain {
        Domain::Survival => {
            buf.fill(0.0);
            for (&i, &v) in indices.iter().zip(levels) {
                buf[i] = v;
            }
            q(buf)
        }
        Domain::Primal => {
            let n = indices.len();
            let mut total = 0.0;
            for mask in 0u32..(1 << n) {
                if mask == 0 {
                    total += 1.0;
                    continue;
                }
                buf.fill(1.0);
                for (bit, (&i, &v)) in indices.iter().zip(levels).enumerate() {
                    if mask & (1 << bit) != 0 {
                        buf[i] = v;
                    }
                }
                let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * q(buf);
            }
            total
        }
    }
}

impl Functional for DiscreteFunctional {
    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> Domain {
        self.class.domain()
    }
    fn monotonicity(&self) -> Monotonicity {
        self.class.monotonicity()
    }
    fn apply(&self, q: &dyn Fn(&[f64]) -> f64) -> f64 {
        self.evaluate(self.class.domain(), q)
    }
}

/// Expectation of a finite-atom payoff under the (quasi-)copula described by `q`.
pub fn pi_discrete(q: &BoundSurface, payoff: &PayoffSpec, margins: &MarginalVector) -> Result<f64> {
    let f = DiscreteFunctional::new(payoff, margins)?;
    if q.dim() != f.dim {
        return Err(Error::Config(format!(
            "surface dimension {} does not match payoff dimension {}",
            q.dim(),
            f.dim
        )));
    }
    Ok(f.evaluate(q.domain(), q.as_fn()))
}

/// The price functional `ρ̂` of a payoff, tagged with domain and monotonicity.
pub fn pricing_functional(
    payoff: &PayoffSpec,
    margins: &MarginalVector,
    cfg: &QuadratureConfig,
) -> Result<Arc<dyn Functional>> {
    Ok(match payoff.kind {
        PayoffKind::MinCall { .. } | PayoffKind::MinPut { .. } => {
            Arc::new(MinOptionFunctional::new(payoff, margins, cfg)?)
        }
        PayoffKind::Discrete(_) => Arc::new(DiscreteFunctional::new(payoff, margins)?),
    })
}

/// Model-free no-arbitrage price interval of a single derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceInterval {
    pub lower: f64,
    pub upper: f64,
}

impl PriceInterval {
    pub fn contains(&self, p: f64) -> bool {
        let eps = 1e-12 * p.abs().max(1.0);
        p >= self.lower - eps && p <= self.upper + eps
    }
}

/// Interval bounds from the functional at the domain's Frechet-Hoeffding bounds.
pub fn interval_of(f: &dyn Functional) -> PriceInterval {
    let domain = f.domain();
    let at_lower = f.apply(&|u: &[f64]| domain.fh_lower(u));
    let at_upper = f.apply(&|u: &[f64]| domain.fh_upper(u));
    match f.monotonicity() {
        Monotonicity::NonDecreasing => PriceInterval {
            lower: at_lower,
            upper: at_upper,
        },
        Monotonicity::NonIncreasing => PriceInterval {
            lower: at_upper,
            upper: at_lower,
        },
    }
}

pub fn price_interval(payoff: &PayoffSpec, margins: &MarginalVector, cfg: &QuadratureConfig) -> Result<PriceInterval> {
    let f = pricing_functional(payoff, margins, cfg)?;
    Ok(interval_of(&*f))
}
