//! Frechet-Hoeffding bounds and their improvements under point, subset and
//! functional constraints, in both the primal (lower orthant) and survival
//! (upper orthant) domains.
//!
//! A survival function `Q̂` of a copula is, after reflecting its argument,
//! again a copula: `v ↦ Q̂(1 - v)`. Survival bounds are therefore the primal
//! bounds evaluated at reflected points, which is how every survival
//! formula below is obtained.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::root::bisect_predicate;

/// `W_d(u) = max(sum u_i - d + 1, 0)`.
pub fn fh_lower(u: &[f64]) -> f64 {
    let d = u.len() as f64;
    (u.iter().sum::<f64>() - d + 1.0).max(0.0)
}

/// `M_d(u) = min_i u_i`.
pub fn fh_upper(u: &[f64]) -> f64 {
    u.iter().copied().fold(1.0, f64::min)
}

/// `W̄_d(u) = W_d(1 - u)`.
pub fn survival_fh_lower(u: &[f64]) -> f64 {
    let d = u.len() as f64;
    (d - u.iter().sum::<f64>() - d + 1.0).max(0.0)
}

/// `M̄_d(u) = M_d(1 - u)`.
pub fn survival_fh_upper(u: &[f64]) -> f64 {
    u.iter().map(|x| 1.0 - x).fold(1.0, f64::min)
}

/// Which function class a surface bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Distribution functions, ordered by the lower orthant order.
    Primal,
    /// Survival functions, ordered by the upper orthant order.
    Survival,
}

impl Domain {
    pub fn fh_lower(self, u: &[f64]) -> f64 {
        match self {
            Domain::Primal => fh_lower(u),
            Domain::Survival => survival_fh_lower(u),
        }
    }

    pub fn fh_upper(self, u: &[f64]) -> f64 {
        match self {
            Domain::Primal => fh_upper(u),
            Domain::Survival => survival_fh_upper(u),
        }
    }

    /// Upper bound at `w` of every function in this domain taking value `r` at `at`.
    pub fn point_upper(self, at: &[f64], r: f64, w: &[f64]) -> f64 {
        match self {
            Domain::Primal => {
                let slack: f64 = w.iter().zip(at).map(|(w, a)| (w - a).max(0.0)).sum();
                fh_upper(w).min(r + slack)
            }
            Domain::Survival => {
                let slack: f64 = at.iter().zip(w).map(|(a, w)| (a - w).max(0.0)).sum();
                survival_fh_upper(w).min(r + slack)
            }
        }
    }

    /// Lower bound at `w` of every function in this domain taking value `r` at `at`.
    pub fn point_lower(self, at: &[f64], r: f64, w: &[f64]) -> f64 {
        match self {
            Domain::Primal => {
                let slack: f64 = at.iter().zip(w).map(|(a, w)| (a - w).max(0.0)).sum();
                fh_lower(w).max(r - slack)
            }
            Domain::Survival => {
                let slack: f64 = w.iter().zip(at).map(|(w, a)| (w - a).max(0.0)).sum();
                survival_fh_lower(w).max(r - slack)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
    /// Not a bound: an actual (quasi-)copula or survival function.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FrechetHoeffding,
    SubsetConstrained,
    PointConstrained,
    FunctionalConstrained,
    Envelope,
    Reference,
}

/// Order-monotonicity of a functional with respect to its domain's order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    NonDecreasing,
    NonIncreasing,
}

pub type SurfaceFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// An evaluable map `[0,1]^d -> [0,1]` with its metadata.
#[derive(Clone)]
pub struct BoundSurface {
    dim: usize,
    domain: Domain,
    side: Side,
    provenance: Provenance,
    f: Arc<SurfaceFn>,
}

impl fmt::Debug for BoundSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundSurface")
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("side", &self.side)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

impl BoundSurface {
    pub fn new<F>(dim: usize, domain: Domain, side: Side, provenance: Provenance, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            domain,
            side,
            provenance,
            f: Arc::new(f),
        }
    }

    /// The plain Frechet-Hoeffding bound of the given side.
    pub fn frechet_hoeffding(dim: usize, domain: Domain, side: Side) -> Self {
        let f: Arc<SurfaceFn> = match side {
            Side::Lower => Arc::new(move |u: &[f64]| domain.fh_lower(u)),
            _ => Arc::new(move |u: &[f64]| domain.fh_upper(u)),
        };
        Self {
            dim,
            domain,
            side,
            provenance: Provenance::FrechetHoeffding,
            f,
        }
    }

    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        (self.f)(u)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn domain(&self) -> Domain {
        self.domain
    }
    pub fn side(&self) -> Side {
        self.side
    }
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn as_fn(&self) -> &SurfaceFn {
        &*self.f
    }
}

const FEASIBILITY_SLACK: f64 = 1e-12;

fn check_unit_cube(u: &[f64]) -> Result<()> {
    if u.iter().all(|x| (0.0..=1.0).contains(x)) {
        Ok(())
    } else {
        Err(Error::Domain(format!("point {u:?} is not in the unit cube")))
    }
}

/// A prescribed value `r` of a (survival) quasi-copula at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConstraint {
    point: Vec<f64>,
    value: f64,
    domain: Domain,
}

impl PointConstraint {
    pub fn new(point: Vec<f64>, value: f64, domain: Domain) -> Result<Self> {
        if point.len() < 2 {
            return Err(Error::Config("point constraints need d >= 2".into()));
        }
        check_unit_cube(&point)?;
        let lo = domain.fh_lower(&point);
        let hi = domain.fh_upper(&point);
        if !(value >= lo - FEASIBILITY_SLACK && value <= hi + FEASIBILITY_SLACK) {
            return Err(Error::InfeasibleConstraint(format!(
                "value {value} at {point:?} outside the Frechet interval [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            point,
            value: value.clamp(lo, hi),
            domain,
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }
    pub fn value(&self) -> f64 {
        self.value
    }
    pub fn domain(&self) -> Domain {
        self.domain
    }
}

/// Improved bounds for a single point constraint, in either domain.
pub fn point_bounds(c: &PointConstraint) -> (BoundSurface, BoundSurface) {
    let dim = c.point.len();
    let domain = c.domain;
    let (at_lo, r_lo) = (c.point.clone(), c.value);
    let (at_hi, r_hi) = (c.point.clone(), c.value);
    (
        BoundSurface::new(dim, domain, Side::Lower, Provenance::PointConstrained, move |w| {
            domain.point_lower(&at_lo, r_lo, w)
        }),
        BoundSurface::new(dim, domain, Side::Upper, Provenance::PointConstrained, move |w| {
            domain.point_upper(&at_hi, r_hi, w)
        }),
    )
}

/// Survival-domain point bounds:
/// `upper(w) = min{M̄(w), r + sum (u_i - w_i)^+}`,
/// `lower(w) = max{0, W̄(w), r - sum (w_i - u_i)^+}`.
pub fn survival_point_bounds(c: &PointConstraint) -> Result<(BoundSurface, BoundSurface)> {
    if c.domain != Domain::Survival {
        return Err(Error::Config(
            "survival_point_bounds needs a survival-domain constraint".into(),
        ));
    }
    Ok(point_bounds(c))
}

/// Bounds for quasi-copulas that agree with `reference` on the finite set `points`.
///
/// An empty set gives back the Frechet-Hoeffding bounds.
pub fn subset_constrained_bounds(
    dim: usize,
    domain: Domain,
    points: &[Vec<f64>],
    reference: &dyn Fn(&[f64]) -> f64,
) -> Result<(BoundSurface, BoundSurface)> {
    let mut constraints = Vec::with_capacity(points.len());
    for x in points {
        if x.len() != dim {
            return Err(Error::Config(format!(
                "constraint point {x:?} does not have dimension {dim}"
            )));
        }
        constraints.push(PointConstraint::new(x.clone(), reference(x), domain)?);
    }
    let constraints = Arc::new(constraints);
    let lower_set = Arc::clone(&constraints);
    let upper_set = constraints;
    Ok((
        BoundSurface::new(dim, domain, Side::Lower, Provenance::SubsetConstrained, move |w| {
            lower_set
                .iter()
                .map(|c| domain.point_lower(&c.point, c.value, w))
                .fold(domain.fh_lower(w), f64::max)
        }),
        BoundSurface::new(dim, domain, Side::Upper, Provenance::SubsetConstrained, move |w| {
            upper_set
                .iter()
                .map(|c| domain.point_upper(&c.point, c.value, w))
                .fold(domain.fh_upper(w), f64::min)
        }),
    ))
}

/// A real-valued functional on (survival) quasi-copulas, monotone in its
/// domain's order.
pub trait Functional: Send + Sync {
    fn dim(&self) -> usize;
    fn domain(&self) -> Domain;
    fn monotonicity(&self) -> Monotonicity;
    fn apply(&self, q: &dyn Fn(&[f64]) -> f64) -> f64;
}

/// Stopping rule for the inverse maps `ρ_±⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseConfig {
    /// Bracket width in `r` at which bisection stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// `ρ_+(u, r)`: the functional at the upper point-constrained bound.
pub fn rho_plus(f: &dyn Functional, u: &[f64], r: f64) -> f64 {
    let domain = f.domain();
    f.apply(&|w: &[f64]| domain.point_upper(u, r, w))
}

/// `ρ_-(u, r)`: the functional at the lower point-constrained bound.
pub fn rho_minus(f: &dyn Functional, u: &[f64], r: f64) -> f64 {
    let domain = f.domain();
    f.apply(&|w: &[f64]| domain.point_lower(u, r, w))
}

fn value_slack(theta: f64) -> f64 {
    1e-12 * theta.abs().max(1.0)
}

/// `min { r : ρ_+(u, r) = θ }`.
pub fn rho_inverse_plus(f: &dyn Functional, u: &[f64], theta: f64, cfg: InverseConfig) -> Result<f64> {
    let domain = f.domain();
    let (lo, hi) = (domain.fh_lower(u), domain.fh_upper(u));
    let at_lo = rho_plus(f, u, lo);
    let at_hi = rho_plus(f, u, hi);
    inverse_plus_with(f, u, theta, lo, hi, at_lo, at_hi, cfg)
}

#[allow(clippy::too_many_arguments)]
fn inverse_plus_with(
    f: &dyn Functional,
    u: &[f64],
    theta: f64,
    lo: f64,
    hi: f64,
    at_lo: f64,
    at_hi: f64,
    cfg: InverseConfig,
) -> Result<f64> {
    let eps = value_slack(theta);
    let (low, high) = match f.monotonicity() {
        Monotonicity::NonDecreasing => (at_lo, at_hi),
        Monotonicity::NonIncreasing => (at_hi, at_lo),
    };
    if theta < low - eps || theta > high + eps {
        return Err(Error::OutOfRange { theta, low, high });
    }
    let b = match f.monotonicity() {
        Monotonicity::NonDecreasing => {
            if theta <= at_lo {
                return Ok(lo);
            }
            bisect_predicate(|r| rho_plus(f, u, r) >= theta, lo, hi, cfg.tol, cfg.max_iter)
        }
        Monotonicity::NonIncreasing => {
            if theta >= at_lo {
                return Ok(lo);
            }
            bisect_predicate(|r| rho_plus(f, u, r) <= theta, lo, hi, cfg.tol, cfg.max_iter)
        }
    };
    Ok(b.hi)
}

/// `max { r : ρ_-(u, r) = θ }`.
pub fn rho_inverse_minus(f: &dyn Functional, u: &[f64], theta: f64, cfg: InverseConfig) -> Result<f64> {
    let domain = f.domain();
    let (lo, hi) = (domain.fh_lower(u), domain.fh_upper(u));
    let at_lo = rho_minus(f, u, lo);
    let at_hi = rho_minus(f, u, hi);
    inverse_minus_with(f, u, theta, lo, hi, at_lo, at_hi, cfg)
}

#[allow(clippy::too_many_arguments)]
fn inverse_minus_with(
    f: &dyn Functional,
    u: &[f64],
    theta: f64,
    lo: f64,
    hi: f64,
    at_lo: f64,
    at_hi: f64,
    cfg: InverseConfig,
) -> Result<f64> {
    let eps = value_slack(theta);
    let (low, high) = match f.monotonicity() {
        Monotonicity::NonDecreasing => (at_lo, at_hi),
        Monotonicity::NonIncreasing => (at_hi, at_lo),
    };
    if theta < low - eps || theta > high + eps {
        return Err(Error::OutOfRange { theta, low, high });
    }
    let b = match f.monotonicity() {
        Monotonicity::NonDecreasing => {
            if theta >= at_hi {
                return Ok(hi);
            }
            bisect_predicate(|r| rho_minus(f, u, r) > theta, lo, hi, cfg.tol, cfg.max_iter)
        }
        Monotonicity::NonIncreasing => {
            if theta <= at_hi {
                return Ok(hi);
            }
            bisect_predicate(|r| rho_minus(f, u, r) < theta, lo, hi, cfg.tol, cfg.max_iter)
        }
    };
    Ok(b.lo)
}

/// Pointwise infimum and supremum over all (survival) quasi-copulas `Q`
/// with `ρ(Q) = θ`.
///
/// | monotonicity   | lower at `u`                                   | upper at `u`                                   |
/// |----------------|------------------------------------------------|------------------------------------------------|
/// | non-decreasing | `ρ_+⁻¹(u,θ)` if `θ ≥ ρ_+(u, W(u))`, else `W(u)` | `ρ_-⁻¹(u,θ)` if `θ ≤ ρ_-(u, M(u))`, else `M(u)` |
/// | non-increasing | `ρ_+⁻¹(u,θ)` if `θ ≤ ρ_+(u, W(u))`, else `W(u)` | `ρ_-⁻¹(u,θ)` if `θ ≥ ρ_-(u, M(u))`, else `M(u)` |
///
/// `W` and `M` are the Frechet-Hoeffding bounds of the functional's domain.
pub struct FunctionalBounds {
    functional: Arc<dyn Functional>,
    theta: f64,
    rho_at_lower: f64,
    rho_at_upper: f64,
    cfg: InverseConfig,
}

impl fmt::Debug for FunctionalBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionalBounds")
            .field("theta", &self.theta)
            .field("rho_at_lower", &self.rho_at_lower)
            .field("rho_at_upper", &self.rho_at_upper)
            .field("domain", &self.functional.domain())
            .field("monotonicity", &self.functional.monotonicity())
            .finish()
    }
}

impl FunctionalBounds {
    pub fn new(functional: Arc<dyn Functional>, theta: f64, cfg: InverseConfig) -> Result<Self> {
        let domain = functional.domain();
        let rho_at_lower = functional.apply(&|u: &[f64]| domain.fh_lower(u));
        let rho_at_upper = functional.apply(&|u: &[f64]| domain.fh_upper(u));
        Self::with_cached(functional, theta, rho_at_lower, rho_at_upper, cfg)
    }

    /// Same as [`FunctionalBounds::new`] with `ρ(W)` and `ρ(M)` already known.
    pub fn with_cached(
        functional: Arc<dyn Functional>,
        theta: f64,
        rho_at_lower: f64,
        rho_at_upper: f64,
        cfg: InverseConfig,
    ) -> Result<Self> {
        let (low, high) = match functional.monotonicity() {
            Monotonicity::NonDecreasing => (rho_at_lower, rho_at_upper),
            Monotonicity::NonIncreasing => (rho_at_upper, rho_at_lower),
        };
        let eps = value_slack(theta);
        if !(theta >= low - eps && theta <= high + eps) {
            return Err(Error::InfeasibleConstraint(format!(
                "functional value {theta} outside the attainable interval [{low}, {high}]"
            )));
        }
        Ok(Self {
            functional,
            theta: theta.clamp(low, high),
            rho_at_lower,
            rho_at_upper,
            cfg,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `(ρ(W), ρ(M))` for the domain's Frechet-Hoeffding bounds.
    pub fn rho_at_fh(&self) -> (f64, f64) {
        (self.rho_at_lower, self.rho_at_upper)
    }

    pub fn functional(&self) -> &Arc<dyn Functional> {
        &self.functional
    }

    pub fn lower_at(&self, u: &[f64]) -> f64 {
        let f = &*self.functional;
        let domain = f.domain();
        let (lo, hi) = (domain.fh_lower(u), domain.fh_upper(u));
        if hi <= lo {
            return lo;
        }
        let at_lo = rho_plus(f, u, lo);
        let inverse_applies = match f.monotonicity() {
            Monotonicity::NonDecreasing => self.theta >= at_lo,
            Monotonicity::NonIncreasing => self.theta <= at_lo,
        };
        if !inverse_applies {
            return lo;
        }
        // the upper point bound at r = M(u) is M itself
        let at_hi = self.rho_at_upper;
        inverse_plus_with(f, u, self.theta, lo, hi, at_lo, at_hi, self.cfg).unwrap_or(lo)
    }

    pub fn upper_at(&self, u: &[f64]) -> f64 {
        let f = &*self.functional;
        let domain = f.domain();
        let (lo, hi) = (domain.fh_lower(u), domain.fh_upper(u));
        if hi <= lo {
            return hi;
        }
        let at_hi = rho_minus(f, u, hi);
        let inverse_applies = match f.monotonicity() {
            Monotonicity::NonDecreasing => self.theta <= at_hi,
            Monotonicity::NonIncreasing => self.theta >= at_hi,
        };
        if !inverse_applies {
            return hi;
        }
        // likewise the lower point bound at r = W(u) is W
        let at_lo = self.rho_at_lower;
        inverse_minus_with(f, u, self.theta, lo, hi, at_lo, at_hi, self.cfg).unwrap_or(hi)
    }

    pub fn surfaces(self: &Arc<Self>) -> (BoundSurface, BoundSurface) {
        let dim = self.functional.dim();
        let domain = self.functional.domain();
        let lower = Arc::clone(self);
        let upper = Arc::clone(self);
        (
            BoundSurface::new(
                dim,
                domain,
                Side::Lower,
                Provenance::FunctionalConstrained,
                move |u| lower.lower_at(u),
            ),
            BoundSurface::new(
                dim,
                domain,
                Side::Upper,
                Provenance::FunctionalConstrained,
                move |u| upper.upper_at(u),
            ),
        )
    }
}

/// A functional together with its prescribed value.
#[derive(Clone)]
pub struct FunctionalConstraint {
    pub functional: Arc<dyn Functional>,
    pub theta: f64,
}

/// Lower and upper bound surfaces for `{ Q : ρ(Q) = θ }`.
pub fn functional_bounds(c: &FunctionalConstraint) -> Result<(BoundSurface, BoundSurface)> {
    let b = Arc::new(FunctionalBounds::new(
        Arc::clone(&c.functional),
        c.theta,
        InverseConfig::default(),
    )?);
    Ok(b.surfaces())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frechet_hoeffding_examples() {
        assert_eq!(fh_lower(&[1.0, 1.0, 1.0]), 1.0);
        assert_eq!(fh_lower(&[0.5, 0.5, 0.5]), 0.0);
        assert!((fh_lower(&[0.9, 0.8, 0.9]) - 0.6).abs() < 1e-15);
        assert_eq!(fh_upper(&[0.3, 0.7, 1.0]), 0.3);
        assert_eq!(fh_upper(&[1.0, 1.0, 1.0]), 1.0);
        assert_eq!(survival_fh_lower(&[0.0, 0.0, 0.0]), 1.0);
        assert_eq!(survival_fh_upper(&[0.2, 0.5, 0.4]), 0.5);
        assert!((survival_fh_lower(&[0.3, 0.3, 0.3]) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn reflection_is_exact() {
        let u = [0.13, 0.71, 0.42];
        let r: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
        assert_eq!(survival_fh_lower(&u), fh_lower(&r));
        assert_eq!(survival_fh_upper(&u), fh_upper(&r));
    }

    #[test]
    fn subset_bounds_hand_evaluation() {
        let s = vec![vec![0.5, 0.5, 0.5]];
        let (lo, hi) = subset_constrained_bounds(3, Domain::Primal, &s, &|_| 0.4).unwrap();
        assert!((hi.eval(&[0.6, 0.5, 0.5]) - 0.5).abs() < 1e-15);
        assert!((lo.eval(&[0.4, 0.5, 0.5]) - 0.3).abs() < 1e-15);
        assert!((lo.eval(&[0.5, 0.5, 0.5]) - 0.4).abs() < 1e-15);
        assert!((hi.eval(&[0.5, 0.5, 0.5]) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn empty_subset_is_frechet_hoeffding() {
        let (lo, hi) = subset_constrained_bounds(3, Domain::Primal, &[], &|_| 0.0).unwrap();
        let u = [0.9, 0.8, 0.7];
        assert_eq!(lo.eval(&u), fh_lower(&u));
        assert_eq!(hi.eval(&u), fh_upper(&u));
    }

    #[test]
    fn subset_rejects_values_outside_frechet_interval() {
        let s = vec![vec![0.5, 0.5, 0.5]];
        let err = subset_constrained_bounds(3, Domain::Primal, &s, &|_| 0.7).unwrap_err();
        assert!(matches!(err, Error::InfeasibleConstraint(_)));
    }

    #[test]
    fn survival_point_bounds_hand_evaluation() {
        let c = PointConstraint::new(vec![0.5, 0.5, 0.5], 0.2, Domain::Survival).unwrap();
        let (lo, hi) = survival_point_bounds(&c).unwrap();
        let w = [0.6, 0.5, 0.5];
        assert!((hi.eval(&w) - 0.2).abs() < 1e-15);
        assert!((lo.eval(&w) - 0.1).abs() < 1e-15);
        assert_eq!(lo.eval(&[0.5, 0.5, 0.5]), 0.2);
        assert_eq!(hi.eval(&[0.5, 0.5, 0.5]), 0.2);
    }

    #[test]
    fn survival_point_bound_at_maximum_stays_below_fh() {
        let u = vec![0.3, 0.6, 0.2];
        let r = survival_fh_upper(&u);
        let c = PointConstraint::new(u.clone(), r, Domain::Survival).unwrap();
        let (_, hi) = point_bounds(&c);
        for w in [[0.1, 0.1, 0.1], [0.9, 0.2, 0.5], [0.3, 0.6, 0.2]] {
            assert!(hi.eval(&w) <= survival_fh_upper(&w) + 1e-15);
        }
        assert_eq!(hi.eval(&u), survival_fh_upper(&u));
    }

    #[test]
    fn survival_point_constraint_requires_survival_domain() {
        let c = PointConstraint::new(vec![0.5, 0.5], 0.3, Domain::Primal).unwrap();
        assert!(survival_point_bounds(&c).is_err());
    }

    /// ρ(Q) = Q(a) + Q(b): non-decreasing, evaluates at two fixed points.
    struct TwoPoint {
        domain: Domain,
        sign: f64,
    }

    impl Functional for TwoPoint {
        fn dim(&self) -> usize {
            2
        }
        fn domain(&self) -> Domain {
            self.domain
        }
        fn monotonicity(&self) -> Monotonicity {
            if self.sign > 0.0 {
                Monotonicity::NonDecreasing
            } else {
                Monotonicity::NonIncreasing
            }
        }
        fn apply(&self, q: &dyn Fn(&[f64]) -> f64) -> f64 {
            self.sign * (q(&[0.3, 0.4]) + q(&[0.7, 0.6]))
        }
    }

    #[test]
    fn inverse_round_trip_and_flat_regions() {
        let f = TwoPoint {
            domain: Domain::Primal,
            sign: 1.0,
        };
        let u = [0.5, 0.5];
        let cfg = InverseConfig::default();
        for r0 in [0.05, 0.2, 0.35] {
            let theta = rho_plus(&f, &u, r0);
            let r = rho_inverse_plus(&f, &u, theta, cfg).unwrap();
            assert!((rho_plus(&f, &u, r) - theta).abs() < 1e-10);
            assert!(r <= r0 + 1e-10);
        }
        // θ = ρ(M): leftmost r achieving it
        let rho_m = f.apply(&|w: &[f64]| fh_upper(w));
        let r = rho_inverse_plus(&f, &u, rho_m, cfg).unwrap();
        assert!(r <= fh_upper(&u));
        assert!((rho_plus(&f, &u, r) - rho_m).abs() < 1e-10);
        assert!(rho_plus(&f, &u, r - 1e-6) < rho_m);
        assert!(matches!(
            rho_inverse_plus(&f, &u, rho_m + 1.0, cfg),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn functional_bounds_collapse_at_extremes() {
        for domain in [Domain::Primal, Domain::Survival] {
            let f: Arc<dyn Functional> = Arc::new(TwoPoint { domain, sign: 1.0 });
            let rho_m = f.apply(&|w: &[f64]| domain.fh_upper(w));
            let rho_w = f.apply(&|w: &[f64]| domain.fh_lower(w));
            let (_, hi) = functional_bounds(&FunctionalConstraint {
                functional: Arc::clone(&f),
                theta: rho_m,
            })
            .unwrap();
            let (lo, _) = functional_bounds(&FunctionalConstraint {
                functional: Arc::clone(&f),
                theta: rho_w,
            })
            .unwrap();
            for u in [[0.2, 0.9], [0.5, 0.5], [0.8, 0.1], [0.33, 0.61]] {
                assert!((hi.eval(&u) - domain.fh_upper(&u)).abs() < 1e-11);
                assert!((lo.eval(&u) - domain.fh_lower(&u)).abs() < 1e-11);
            }
            assert!(functional_bounds(&FunctionalConstraint {
                functional: f,
                theta: rho_m + 0.1,
            })
            .is_err());
        }
    }

    #[test]
    fn non_increasing_functional_bounds_sandwich() {
        for domain in [Domain::Primal, Domain::Survival] {
            let f: Arc<dyn Functional> = Arc::new(TwoPoint { domain, sign: -1.0 });
            let rho_m = f.apply(&|w: &[f64]| domain.fh_upper(w));
            let rho_w = f.apply(&|w: &[f64]| domain.fh_lower(w));
            let theta = 0.5 * (rho_m + rho_w);
            let (lo, hi) = functional_bounds(&FunctionalConstraint {
                functional: f,
                theta,
            })
            .unwrap();
            for i in 1..10 {
                for j in 1..10 {
                    let u = [i as f64 / 10.0, j as f64 / 10.0];
                    let (l, h) = (lo.eval(&u), hi.eval(&u));
                    assert!(domain.fh_lower(&u) <= l + 1e-12);
                    assert!(l <= h + 1e-12);
                    assert!(h <= domain.fh_upper(&u) + 1e-12);
                }
            }
        }
    }
}
