#![allow(dead_code)]

use std::path::PathBuf;

use fhbounds::arbitrage::{Market, MarketSpec, PriceVector};
use fhbounds::marginals::{Marginal, MarginalVector};
use fhbounds::pricing::PayoffSpec;

pub fn spec_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs").join(name)
}

pub fn setting1_margins() -> MarginalVector {
    MarginalVector::new(vec![
        Marginal::lognormal(8.0, 1.5).unwrap(),
        Marginal::lognormal(10.0, 1.0).unwrap(),
        Marginal::lognormal(12.0, 0.5).unwrap(),
    ])
    .unwrap()
}

pub fn setting2_margins() -> MarginalVector {
    MarginalVector::new(vec![
        Marginal::nig(100.0, 8.9932, -4.5176, 1.1528).unwrap(),
        Marginal::nig(100.0, 26.4502, -17.3990, 0.8872).unwrap(),
        Marginal::nig(100.0, 9.7278, -3.2261, 1.1524).unwrap(),
    ])
    .unwrap()
}

pub fn setting1() -> Market {
    let payoffs = vec![PayoffSpec::min_call(3.0).unwrap(), PayoffSpec::min_put(8.0).unwrap()];
    Market::new(MarketSpec::new(setting1_margins(), payoffs).unwrap()).unwrap()
}

pub fn setting2() -> Market {
    let payoffs = vec![PayoffSpec::min_call(60.0).unwrap(), PayoffSpec::min_put(140.0).unwrap()];
    Market::new(MarketSpec::new(setting2_margins(), payoffs).unwrap()).unwrap()
}

pub fn prices(p: &[f64]) -> PriceVector {
    PriceVector::new(p.to_vec()).unwrap()
}

/// Runs the CLI in-process and returns (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["fhbounds"];
    argv.extend_from_slice(args);
    let code = fhbounds::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Checks the quasi-copula axioms on `q` (primal orientation) at random
/// points. Returns the first violation.
pub fn quasi_copula_violation(
    q: &dyn Fn(&[f64]) -> f64,
    dim: usize,
    samples: usize,
    tol: f64,
    rng: &mut impl rand::Rng,
) -> Option<String> {
    for _ in 0..samples {
        let u: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let i = rng.random_range(0..dim);

        let mut grounded = u.clone();
        grounded[i] = 0.0;
        if q(&grounded).abs() > tol {
            return Some(format!("not grounded at {grounded:?}: {}", q(&grounded)));
        }
        let mut margin = vec![1.0; dim];
        margin[i] = u[i];
        if (q(&margin) - u[i]).abs() > tol {
            return Some(format!("margin {i} at {margin:?}: {}", q(&margin)));
        }
        let mut up = u.clone();
        up[i] = u[i] + (1.0 - u[i]) * rng.random::<f64>();
        if q(&up) < q(&u) - tol {
            return Some(format!("decreasing in coordinate {i} between {u:?} and {up:?}"));
        }
        let l1: f64 = u.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        if (q(&u) - q(&v)).abs() > l1 + tol {
            return Some(format!("Lipschitz violated between {u:?} and {v:?}"));
        }
    }
    None
}

/// Survival surfaces are checked through `u ↦ Q̂(1 - u)`.
pub fn reflected(q: &dyn Fn(&[f64]) -> f64) -> impl Fn(&[f64]) -> f64 + '_ {
    move |u: &[f64]| {
        let r: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
        q(&r)
    }
}

pub fn parse_csv(text: &str) -> Vec<[f64; 3]> {
    text.lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}
