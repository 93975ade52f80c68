//! Brute-force and Monte Carlo reference computations.
//!
//! Nothing here calls into the pricing quadrature or the bound inverses; the
//! only engine code used is the marginal CDF/quantile, which is what the
//! checks are conditioned on.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::marginals::{Marginal, MarginalVector};
use crate::pricing::PayoffSpec;

/// A copula with uniform mass on the `n^d` cells of a regular grid, atoms
/// placed at cell centres `(a + 1/2) / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCopula {
    n: usize,
    dim: usize,
    mass: Vec<f64>,
}

impl DiscreteCopula {
    /// Builds from an explicit mass table in row-major order (last axis fastest).
    pub fn new(n: usize, dim: usize, mass: Vec<f64>) -> Result<Self> {
        let c = Self { n, dim, mass };
        c.validate()?;
        Ok(c)
    }

    pub fn independence(n: usize, dim: usize) -> Self {
        let cells = n.pow(dim as u32);
        Self {
            n,
            dim,
            mass: vec![1.0 / cells as f64; cells],
        }
    }

    pub fn comonotone(n: usize, dim: usize) -> Self {
        let mut mass = vec![0.0; n.pow(dim as u32)];
        for a in 0..n {
            mass[Self::flat(n, &vec![a; dim])] = 1.0 / n as f64;
        }
        Self { n, dim, mass }
    }

    /// Equal-weight mixture of `k` random permutation copulas.
    pub fn random(n: usize, dim: usize, k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mass = vec![0.0; n.pow(dim as u32)];
        let w = 1.0 / (n * k) as f64;
        for _ in 0..k {
            let perms: Vec<Vec<usize>> = (1..dim)
                .map(|_| {
                    let mut p: Vec<usize> = (0..n).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect();
            for a in 0..n {
                let mut idx = vec![a];
                idx.extend(perms.iter().map(|p| p[a]));
                mass[Self::flat(n, &idx)] += w;
            }
        }
        Self { n, dim, mass }
    }

    fn flat(n: usize, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &a| acc * n + a)
    }

    fn unflat(&self, mut i: usize, out: &mut [usize]) {
        for j in (0..self.dim).rev() {
            out[j] = i % self.n;
            i /= self.n;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Non-negative masses summing to one with uniform axis marginals.
    pub fn validate(&self) -> Result<()> {
        if self.mass.len() != self.n.pow(self.dim as u32) {
            return Err(Error::Config("mass table has the wrong size".into()));
        }
        if self.mass.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::Config("negative cell mass".into()));
        }
        let total: f64 = self.mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("masses sum to {total}")));
        }
        let mut idx = vec![0; self.dim];
        for axis in 0..self.dim {
            let mut slab = vec![0.0; self.n];
            for (i, m) in self.mass.iter().enumerate() {
                self.unflat(i, &mut idx);
                slab[idx[axis]] += m;
            }
            if slab.iter().any(|s| (s - 1.0 / self.n as f64).abs() > 1e-12) {
                return Err(Error::Config(format!("axis {axis} marginal is not uniform")));
            }
        }
        Ok(())
    }

    fn atom(&self, a: usize) -> f64 {
        (a as f64 + 0.5) / self.n as f64
    }

    /// `P(U_i <= v_i for all i)`.
    pub fn cdf(&self, v: &[f64]) -> f64 {
        self.sum_where(|u| u.iter().zip(v).all(|(a, b)| a <= b))
    }

    /// `P(U_i > v_i for all i)`.
    pub fn survival(&self, v: &[f64]) -> f64 {
        self.sum_where(|u| u.iter().zip(v).all(|(a, b)| a > b))
    }

    fn sum_where<P: Fn(&[f64]) -> bool>(&self, pred: P) -> f64 {
        let mut idx = vec![0; self.dim];
        let mut u = vec![0.0; self.dim];
        let mut total = 0.0;
        for (i, &m) in self.mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            self.unflat(i, &mut idx);
            for (x, &a) in u.iter_mut().zip(&idx) {
                *x = self.atom(a);
            }
            if pred(&u) {
                total += m;
            }
        }
        total
    }
}

/// `E[f(X)]` with `X_i = F_i⁻¹(U_i)` and `U` distributed as `c`, summed cell by cell.
pub fn discrete_expectation(c: &DiscreteCopula, payoff: &PayoffSpec, margins: &MarginalVector) -> Result<f64> {
    if c.dim() != margins.dim() {
        return Err(Error::Config("copula and marginal dimensions differ".into()));
    }
    // quantiles per axis level, computed once
    let levels: Vec<Vec<f64>> = margins
        .iter()
        .map(|m| (0..c.n).map(|a| m.quantile(c.atom(a))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut idx = vec![0; c.dim];
    let mut x = vec![0.0; c.dim];
    let mut total = 0.0;
    for (i, &m) in c.mass.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        c.unflat(i, &mut idx);
        for (j, &a) in idx.iter().enumerate() {
            x[j] = levels[j][a];
        }
        total += m * payoff.value(&x);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
}

const MC_SHARDS: usize = 16;

fn shard_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Price under the comonotone copula `M`.
///
/// With only lognormal marginals every asset is driven by one shared normal
/// draw, i.e. `S^i = F_i⁻¹(Φ(Z))` in closed form. Otherwise each marginal is
/// sampled independently, the samples are sorted, and equal ranks are paired,
/// which couples the empirical quantile functions comonotonically.
pub fn comonotone_mc_price(
    payoff: &PayoffSpec,
    margins: &MarginalVector,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples < 10_000 {
        return Err(Error::Config(format!("at least 10^4 samples are required, got {n_samples}")));
    }
    let d = margins.dim();
    let all_lognormal = margins.iter().all(|m| matches!(m, Marginal::Lognormal(_)));
    let values: Vec<f64> = if all_lognormal {
        let params: Vec<(f64, f64)> = margins
            .iter()
            .map(|m| match m {
                Marginal::Lognormal(l) => (l.s0(), l.sigma()),
                Marginal::Nig(_) => unreachable!(),
            })
            .collect();
        sharded(n_samples, |shard, count| {
            let mut rng = shard_rng(seed, shard as u64);
            let mut x = vec![0.0; d];
            (0..count)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    for (xi, &(s0, s)) in x.iter_mut().zip(&params) {
                        *xi = s0 * (s * z - 0.5 * s * s).exp();
                    }
                    payoff.value(&x)
                })
                .collect()
        })
    } else {
        let columns: Vec<Vec<f64>> = margins
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let mut col = sharded(n_samples, |shard, count| {
                    let mut rng = shard_rng(seed, ((i + 1) * MC_SHARDS + shard) as u64);
                    (0..count).map(|_| sample_marginal(m, &mut rng)).collect()
                });
                col.par_sort_unstable_by(f64::total_cmp);
                col
            })
            .collect();
        (0..n_samples)
            .into_par_iter()
            .map(|j| {
                let x: Vec<f64> = columns.iter().map(|c| c[j]).collect();
                payoff.value(&x)
            })
            .collect()
    };
    Ok(mean_and_error(&values))
}

fn sharded<F: Fn(usize, usize) -> Vec<f64> + Sync>(n: usize, f: F) -> Vec<f64> {
    let per = n.div_ceil(MC_SHARDS);
    (0..MC_SHARDS)
        .into_par_iter()
        .map(|s| f(s, per.min(n.saturating_sub(s * per))))
        .flatten()
        .collect()
}

fn mean_and_error(values: &[f64]) -> McEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    McEstimate {
        price: mean,
        std_error: (var / n).sqrt(),
    }
}

/// Independent sampler for one marginal, written from the model definitions.
fn sample_marginal<R: Rng + ?Sized>(m: &Marginal, rng: &mut R) -> f64 {
    match m {
        Marginal::Lognormal(l) => {
            let z: f64 = StandardNormal.sample(rng);
            l.s0() * (l.sigma() * z - 0.5 * l.sigma() * l.sigma()).exp()
        }
        Marginal::Nig(g) => {
            let (a, b, dl) = (g.alpha(), g.beta(), g.delta());
            let gamma = (a * a - b * b).sqrt();
            let mu = -dl * (gamma - (a * a - (b + 1.0) * (b + 1.0)).sqrt());
            let ig = InverseGaussian::new(dl / gamma, dl * dl).expect("valid NIG parameters");
            let v: f64 = ig.sample(rng);
            let z: f64 = StandardNormal.sample(rng);
            g.s0() * (mu + b * v + v.sqrt() * z).exp()
        }
    }
}

/// Monte Carlo estimate of `E[S^i_1]` for every asset.
pub fn martingale_check(margins: &MarginalVector, n_samples: usize, seed: u64) -> Vec<McEstimate> {
    margins
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let values = sharded(n_samples, |shard, count| {
                let mut rng = shard_rng(seed, ((i + 1) * MC_SHARDS + shard) as u64);
                (0..count).map(|_| sample_marginal(m, &mut rng)).collect()
            });
            mean_and_error(&values)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationVariable {
    /// Uniform nodes in `x`.
    Linear,
    /// Uniform nodes in `ln x` (requires `lo > 0`).
    Log,
}

/// A one-dimensional integral `∫_lo^hi g(x) dx` for refinement checks.
pub struct IntegralSpec<'a> {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
    pub variable: IntegrationVariable,
    pub integrand: &'a (dyn Fn(f64) -> f64 + Sync),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementCheck {
    pub coarse: f64,
    pub fine: f64,
    pub delta: f64,
}

fn simpson(spec: &IntegralSpec<'_>, n: usize) -> f64 {
    let n = n.max(2).div_ceil(2) * 2;
    if spec.hi <= spec.lo {
        return 0.0;
    }
    let (a, b) = match spec.variable {
        IntegrationVariable::Linear => (spec.lo, spec.hi),
        IntegrationVariable::Log => (spec.lo.ln(), spec.hi.ln()),
    };
    let h = (b - a) / n as f64;
    let g = |t: f64| match spec.variable {
        IntegrationVariable::Linear => (spec.integrand)(t),
        IntegrationVariable::Log => {
            let x = t.exp();
            (spec.integrand)(x) * x
        }
    };
    let mut s = g(a) + g(b);
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(a + h * j as f64);
    }
    s * h / 3.0
}

/// Simpson's rule at `N` and `2N` nodes.
pub fn quadrature_refinement_check(spec: &IntegralSpec<'_>) -> RefinementCheck {
    let coarse = simpson(spec, spec.nodes);
    let fine = simpson(spec, 2 * spec.nodes);
    RefinementCheck {
        coarse,
        fine,
        delta: (fine - coarse).abs(),
    }
}
