//! Risk-neutral marginal distributions of the terminal asset prices.
//!
//! Maturity is fixed at one year and rates are zero, so every marginal is
//! a martingale law: `E[S_1] = S_0`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};

use crate::error::{Error, Result};
use crate::root::bisect_predicate;
use crate::special::{adaptive_simpson, bessel_k1_scaled, norm_cdf};

/// Log-normal terminal price `S_1 = s0 exp(sigma Z - sigma^2 / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LognormalMarginal {
    s0: f64,
    sigma: f64,
}

impl LognormalMarginal {
    pub fn new(s0: f64, sigma: f64) -> Result<Self> {
        if !(s0.is_finite() && s0 > 0.0) {
            return Err(Error::Config(format!("lognormal s0 must be positive, got {s0}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Config(format!(
                "lognormal sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { s0, sigma })
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `P(S_1 <= x)`. Returns 0 for `x <= 0` since the support is `(0, inf)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = ((x / self.s0).ln() + 0.5 * self.sigma * self.sigma) / self.sigma;
        norm_cdf(z)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.s0 * (self.sigma * z - 0.5 * self.sigma * self.sigma).exp()
    }
}

/// Drift `mu` of a NIG log-return that makes `E[exp(X)] = 1`.
pub fn nig_martingale_mu(alpha: f64, beta: f64, delta: f64) -> Result<f64> {
    if !(alpha > beta.abs()) {
        return Err(Error::Config(format!(
            "nig requires |beta| < alpha, got beta = {beta}, alpha = {alpha}"
        )));
    }
    let alpha_sq = alpha * alpha;
    let shifted_beta_sq = (beta + 1.0) * (beta + 1.0);
    if alpha_sq < shifted_beta_sq {
        return Err(Error::NoMartingaleDrift {
            alpha_sq,
            shifted_beta_sq,
        });
    }
    Ok(delta * ((alpha_sq - shifted_beta_sq).sqrt() - (alpha_sq - beta * beta).sqrt()))
}

/// Terminal price `S_1 = s0 exp(X)` with `X ~ NIG(alpha, beta, delta, mu)`
/// and `mu` fixed by the martingale condition.
#[derive(Debug, Clone)]
pub struct NigMarginal {
    s0: f64,
    alpha: f64,
    beta: f64,
    delta: f64,
    mu: f64,
    gamma: f64,
    table: Arc<CdfTable>,
}

/// Cumulative mass of the log-return density at equally spaced nodes.
#[derive(Debug)]
struct CdfTable {
    lo: f64,
    step: f64,
    cum: Vec<f64>,
}

const NIG_TABLE_PANELS: usize = 4096;
const NIG_TAIL_MASS: f64 = 1e-10;

impl NigMarginal {
    pub fn new(s0: f64, alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        if !(s0.is_finite() && s0 > 0.0) {
            return Err(Error::Config(format!("nig s0 must be positive, got {s0}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Config(format!("nig alpha must be positive, got {alpha}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Config(format!("nig delta must be positive, got {delta}")));
        }
        if !(beta.is_finite() && beta.abs() < alpha) {
            return Err(Error::Config(format!(
                "nig requires |beta| < alpha, got beta = {beta}, alpha = {alpha}"
            )));
        }
        let mu = nig_martingale_mu(alpha, beta, delta)?;
        let gamma = (alpha * alpha - beta * beta).sqrt();
        let mut m = Self {
            s0,
            alpha,
            beta,
            delta,
            mu,
            gamma,
            table: Arc::new(CdfTable {
                lo: 0.0,
                step: 0.0,
                cum: Vec::new(),
            }),
        };
        m.table = Arc::new(m.build_table());
        Ok(m)
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Density of the log-return `X` at `y`.
    pub fn density(&self, y: f64) -> f64 {
        let dy = y - self.mu;
        let q = (self.delta * self.delta + dy * dy).sqrt();
        let arg = self.alpha * q;
        let log_scale = self.delta * self.gamma + self.beta * dy - arg;
        self.alpha * self.delta / (PI * q) * bessel_k1_scaled(arg) * log_scale.exp()
    }

    fn mean(&self) -> f64 {
        self.mu + self.delta * self.beta / self.gamma
    }

    fn std_dev(&self) -> f64 {
        (self.delta * self.alpha * self.alpha / self.gamma.powi(3)).sqrt()
    }

    /// Truncated support `[lo, hi]` of the log-return; the mass outside is
    /// below `NIG_TAIL_MASS` on each side.
    pub fn support(&self) -> (f64, f64) {
        (
            self.table.lo,
            self.table.lo + self.table.step * NIG_TABLE_PANELS as f64,
        )
    }

    fn build_table(&self) -> CdfTable {
        // Beyond the mode the density decays at least like exp(-(alpha -+ beta)|y|),
        // so f(y) / rate bounds the remaining tail mass.
        let center = self.mean();
        let spread = self.std_dev();
        let right_rate = self.alpha - self.beta;
        let left_rate = self.alpha + self.beta;
        let mut right = 5.0 * spread;
        while self.density(center + right) / right_rate > NIG_TAIL_MASS * 1e-2 {
            right *= 1.25;
        }
        let mut left = 5.0 * spread;
        while self.density(center - left) / left_rate > NIG_TAIL_MASS * 1e-2 {
            left *= 1.25;
        }
        let lo = center - left;
        let step = (left + right) / NIG_TABLE_PANELS as f64;
        let f = |y: f64| self.density(y);
        let mut cum = Vec::with_capacity(NIG_TABLE_PANELS + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for k in 0..NIG_TABLE_PANELS {
            let a = lo + step * k as f64;
            acc += adaptive_simpson(&f, a, a + step, 1e-15);
            cum.push(acc);
        }
        CdfTable { lo, step, cum }
    }

    /// Total mass of the density captured by the truncated support.
    pub fn captured_mass(&self) -> f64 {
        *self.table.cum.last().expect("table is non-empty")
    }

    /// `P(X <= y)` for the log-return.
    pub fn log_return_cdf(&self, y: f64) -> f64 {
        let t = &self.table;
        if y <= t.lo {
            return 0.0;
        }
        let pos = (y - t.lo) / t.step;
        if pos >= NIG_TABLE_PANELS as f64 {
            return 1.0;
        }
        let k = pos as usize;
        let a = t.lo + t.step * k as f64;
        let partial = adaptive_simpson(&|s| self.density(s), a, y, 1e-15);
        (t.cum[k] + partial).clamp(0.0, 1.0)
    }

    /// `P(S_1 <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.log_return_cdf((x / self.s0).ln())
    }

    /// Price bracket containing the `u`-quantile, read off the cumulative table.
    fn quantile_bracket(&self, u: f64) -> (f64, f64) {
        let t = &self.table;
        let k = t.cum.partition_point(|&c| c < u);
        let lo_node = k.saturating_sub(1);
        let hi_node = k.min(NIG_TABLE_PANELS);
        let y_lo = t.lo + t.step * lo_node as f64;
        let y_hi = t.lo + t.step * (hi_node + 1).min(NIG_TABLE_PANELS) as f64;
        (self.s0 * y_lo.exp(), self.s0 * y_hi.exp())
    }

    /// One draw of `S_1` through the normal variance-mean mixture
    /// `X = mu + beta V + sqrt(V) Z` with `V ~ IG(delta / gamma, delta^2)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let ig = InverseGaussian::new(self.delta / self.gamma, self.delta * self.delta)
            .expect("validated NIG parameters");
        let v: f64 = ig.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        self.s0 * (self.mu + self.beta * v + v.sqrt() * z).exp()
    }
}

/// A continuous risk-neutral marginal.
#[derive(Debug, Clone)]
pub enum Marginal {
    Lognormal(LognormalMarginal),
    Nig(NigMarginal),
}

/// Absolute price tolerance of [`Marginal::quantile`], relative to `s0`.
pub const QUANTILE_REL_TOL: f64 = 1e-8;

impl Marginal {
    pub fn lognormal(s0: f64, sigma: f64) -> Result<Self> {
        LognormalMarginal::new(s0, sigma).map(Marginal::Lognormal)
    }

    pub fn nig(s0: f64, alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        NigMarginal::new(s0, alpha, beta, delta).map(Marginal::Nig)
    }

    pub fn s0(&self) -> f64 {
        match self {
            Marginal::Lognormal(m) => m.s0(),
            Marginal::Nig(m) => m.s0(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Lognormal(m) => m.cdf(x),
            Marginal::Nig(m) => m.cdf(x),
        }
    }

    /// Generalized inverse `inf { x : F(x) >= u }` by bisection.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {u}")));
        }
        let s0 = self.s0();
        let (lo, mut hi) = match self {
            Marginal::Lognormal(_) => (0.0, s0),
            Marginal::Nig(m) => m.quantile_bracket(u),
        };
        let mut guard = 0;
        while self.cdf(hi) < u {
            hi *= 2.0;
            guard += 1;
            if guard > 2000 {
                return Err(Error::Numerical(format!("no quantile bracket for u = {u}")));
            }
        }
        let lo = if self.cdf(lo) >= u { 0.0 } else { lo };
        let b = bisect_predicate(|x| self.cdf(x) >= u, lo, hi, QUANTILE_REL_TOL * s0, 200);
        Ok(b.hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Marginal::Lognormal(m) => m.sample(rng),
            Marginal::Nig(m) => m.sample(rng),
        }
    }
}

/// Ordered marginals of the `d >= 2` risky assets.
#[derive(Debug, Clone)]
pub struct MarginalVector {
    margins: Vec<Marginal>,
}

impl MarginalVector {
    pub fn new(margins: Vec<Marginal>) -> Result<Self> {
        if margins.len() < 2 {
            return Err(Error::Config(format!(
                "at least two marginals are required, got {}",
                margins.len()
            )));
        }
        Ok(Self { margins })
    }

    pub fn dim(&self) -> usize {
        self.margins.len()
    }

    pub fn get(&self, i: usize) -> &Marginal {
        &self.margins[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Marginal> {
        self.margins.iter()
    }

    /// Restriction to the given asset indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let margins = indices
            .iter()
            .map(|&i| {
                self.margins
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("asset index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(margins)
    }

    /// Writes `(F_1(x), ..., F_d(x))` into `out`.
    pub fn cdfs_at(&self, x: f64, out: &mut [f64]) {
        for (o, m) in out.iter_mut().zip(&self.margins) {
            *o = m.cdf(x);
        }
    }

    /// Largest `u`-quantile over all assets.
    pub fn max_quantile(&self, u: f64) -> Result<f64> {
        self.margins
            .iter()
            .map(|m| m.quantile(u))
            .try_fold(0.0_f64, |acc, q| Ok(acc.max(q?)))
    }

    /// Smallest `u`-quantile over all assets.
    pub fn min_quantile(&self, u: f64) -> Result<f64> {
        self.margins
            .iter()
            .map(|m| m.quantile(u))
            .try_fold(f64::INFINITY, |acc, q| Ok(acc.min(q?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table1_nig() -> Vec<NigMarginal> {
        [
            (8.9932, -4.5176, 1.1528),
            (26.4502, -17.3990, 0.8872),
            (9.7278, -3.2261, 1.1524),
        ]
        .iter()
        .map(|&(a, b, d)| NigMarginal::new(100.0, a, b, d).unwrap())
        .collect()
    }

    #[test]
    fn lognormal_cdf_examples() {
        let m = LognormalMarginal::new(8.0, 1.5).unwrap();
        assert_eq!(m.cdf(0.0), 0.0);
        assert_eq!(m.cdf(-1.0), 0.0);
        assert!((m.cdf(8.0 * (-1.125_f64).exp()) - 0.5).abs() < 1e-15);
        let m = LognormalMarginal::new(10.0, 1.0).unwrap();
        // Phi(0.5)
        assert!((m.cdf(10.0) - 0.691_462_461_274_013_1).abs() < 1e-14);
    }

    #[test]
    fn lognormal_rejects_bad_parameters() {
        assert!(LognormalMarginal::new(0.0, 1.0).is_err());
        assert!(LognormalMarginal::new(1.0, -1.0).is_err());
    }

    #[test]
    fn martingale_mu_examples() {
        let mu = nig_martingale_mu(2.0, -1.0, 1.0).unwrap();
        assert!((mu - (2.0 - 3.0_f64.sqrt())).abs() < 1e-15);
        assert_eq!(nig_martingale_mu(3.7, -0.5, 0.4).unwrap(), 0.0);
        let err = nig_martingale_mu(1.0, 0.5, 1.0).unwrap_err();
        assert!(err.to_string().contains("no martingale drift exists"));
    }

    #[test]
    fn nig_symmetric_density_is_even() {
        let m = NigMarginal {
            s0: 1.0,
            alpha: 3.0,
            beta: 0.0,
            delta: 0.7,
            mu: 0.0,
            gamma: 3.0,
            table: Arc::new(CdfTable {
                lo: 0.0,
                step: 0.0,
                cum: vec![],
            }),
        };
        for y in [0.01, 0.3, 1.0, 2.5, 7.0] {
            assert!((m.density(y) - m.density(-y)).abs() <= 1e-15 * m.density(y).max(1e-300));
        }
    }

    #[test]
    fn nig_density_normalized_and_unimodal() {
        for m in table1_nig() {
            assert!((m.captured_mass() - 1.0).abs() < 1e-6, "mass {}", m.captured_mass());
            let (lo, hi) = m.support();
            let n = 10_000;
            let vals: Vec<f64> = (0..=n)
                .map(|k| m.density(lo + (hi - lo) * k as f64 / n as f64))
                .collect();
            assert!(vals.iter().all(|v| v.is_finite() && *v >= 0.0));
            let peak = vals
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert!(vals[..=peak].windows(2).all(|w| w[0] <= w[1]));
            assert!(vals[peak..].windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn nig_cdf_matches_density_by_finite_differences() {
        let m = &table1_nig()[0];
        for x in [70.0, 90.0, 100.0, 120.0, 150.0] {
            let h = 1e-3;
            let fd = (m.cdf(x + h) - m.cdf(x - h)) / (2.0 * h);
            let dens = m.density((x / 100.0).ln()) / x;
            assert!((fd - dens).abs() < 1e-4, "x = {x}: {fd} vs {dens}");
        }
    }

    #[test]
    fn nig_cdf_tails() {
        for m in table1_nig() {
            assert_eq!(m.cdf(0.0), 0.0);
            let (_, hi) = m.support();
            assert!(m.cdf(100.0 * hi.exp()) >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn quantile_round_trips() {
        let ms: Vec<Marginal> = vec![
            Marginal::lognormal(8.0, 1.5).unwrap(),
            Marginal::lognormal(12.0, 0.5).unwrap(),
        ]
        .into_iter()
        .chain(table1_nig().into_iter().map(Marginal::Nig))
        .collect();
        for m in &ms {
            for u in [1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-8] {
                let x = m.quantile(u).unwrap();
                assert!((m.cdf(x) - u).abs() < 1e-6, "u = {u}: F(q) = {}", m.cdf(x));
            }
        }
        let ln = Marginal::lognormal(8.0, 1.5).unwrap();
        let med = ln.quantile(0.5).unwrap();
        assert!((med - 8.0 * (-1.125_f64).exp()).abs() < 1e-7);
        assert!(ln.quantile(0.0).is_err());
        assert!(ln.quantile(1.0).is_err());
    }

    #[test]
    fn nig_median_positive_and_consistent_with_table() {
        let m = Marginal::Nig(table1_nig().remove(0));
        let med = m.quantile(0.5).unwrap();
        assert!(med.is_finite() && med > 0.0);
        // high-resolution CDF scan
        let xs: Vec<f64> = (0..200_000).map(|k| 50.0 + k as f64 * 5e-4).collect();
        let scan = xs.iter().find(|&&x| m.cdf(x) >= 0.5).copied().unwrap();
        assert!((scan - med).abs() < 1e-3);
    }

    #[test]
    fn martingale_mean_by_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let models: Vec<Marginal> = vec![Marginal::nig(100.0, 2.0, -1.0, 1.0).unwrap()]
            .into_iter()
            .chain(table1_nig().into_iter().map(Marginal::Nig))
            .chain([Marginal::lognormal(10.0, 1.0).unwrap()])
            .collect();
        for m in &models {
            let n = 1_000_000;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let x = m.sample(&mut rng);
                s += x;
                s2 += x * x;
            }
            let mean = s / n as f64;
            let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
            assert!((mean - m.s0()).abs() < 3.0 * se, "mean {mean} se {se}");
        }
    }
}
