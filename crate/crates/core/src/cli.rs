//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::arbitrage::{DetectConfig, DetectionReport, Verdict};
use crate::error::{Error, Result};
use crate::marginals::Marginal;
use crate::oracle::martingale_check;
use crate::pricing::{price_interval, PriceInterval, QuadratureConfig};
use crate::spec_file::LoadedSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ARBITRAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fhbounds", version, about = "Model-free bounds and joint arbitrage detection for min-options")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the no-arbitrage price interval of every derivative.
    Bounds {
        spec: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Search for a point where the price-constrained bounds cross.
    Detect {
        spec: PathBuf,
        #[arg(long, default_value_t = 11)]
        grid: usize,
        /// Polish the best grid point with Nelder-Mead.
        #[arg(long)]
        refine: bool,
        /// Evaluate the objective at a single point instead, e.g. 0.7,0.5,0.1.
        #[arg(long, value_delimiter = ',')]
        point: Option<Vec<f64>>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        /// Arbitrage threshold on the objective.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Price-interval endpoints of one derivative across a strike range.
    Sweep {
        spec: PathBuf,
        /// 0-based derivative index.
        #[arg(long)]
        derivative: usize,
        /// lo:hi:step
        #[arg(long)]
        strikes: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sanity checks on the marginals.
    Check {
        spec: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
}

/// Parses `args` and runs the command, writing to `out`/`err`. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let is_check = matches!(cli.command, Command::Check { .. });
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if is_check && matches!(e, Error::NoMartingaleDrift { .. }) {
                EXIT_CHECK_FAILED
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("i/o: {e}"))
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Bounds { spec, json } => cmd_bounds(&spec, json, out),
        Command::Detect {
            spec,
            grid,
            refine,
            point,
            out: path,
            json,
            tol,
        } => cmd_detect(&spec, grid, refine, point, path.as_deref(), json, tol, out),
        Command::Sweep {
            spec,
            derivative,
            strikes,
            out: path,
        } => cmd_sweep(&spec, derivative, &strikes, path.as_deref(), out),
        Command::Check { spec, seed, samples } => cmd_check(&spec, seed, samples, out),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsRow {
    pub index: usize,
    pub kind: &'static str,
    pub strike: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Single-derivative intervals for every derivative in the spec.
pub fn bounds_report(spec: &LoadedSpec) -> Result<Vec<BoundsRow>> {
    spec.file
        .derivatives
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let iv = derivative_interval(spec, k, d.strike)?;
            Ok(BoundsRow {
                index: k,
                kind: d.kind.name(),
                strike: d.strike,
                lower: iv.lower,
                upper: iv.upper,
            })
        })
        .collect()
}

fn derivative_interval(spec: &LoadedSpec, k: usize, strike: f64) -> Result<PriceInterval> {
    let d = &spec.file.derivatives[k];
    let margins = match &d.indices {
        Some(ix) => spec.margins.select(ix)?,
        None => spec.margins.clone(),
    };
    price_interval(&d.kind.payoff(strike)?, &margins, &QuadratureConfig::default())
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("serialization: {e}")))
}

pub fn cmd_bounds(path: &Path, json: bool, out: &mut dyn Write) -> Result<i32> {
    let spec = LoadedSpec::read(path)?;
    let rows = bounds_report(&spec)?;
    if json {
        writeln!(out, "{}", json_line(&serde_json::json!({ "derivatives": rows }))?).map_err(io_err)?;
    } else {
        for r in &rows {
            writeln!(out, "{} {} K={}: [{:.6}, {:.6}]", r.index, r.kind, r.strike, r.lower, r.upper)
                .map_err(io_err)?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub verdict: Verdict,
    pub point: Vec<f64>,
    pub value: f64,
    pub upper: f64,
    pub lower: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_detect(
    path: &Path,
    grid: usize,
    refine: bool,
    point: Option<Vec<f64>>,
    report_path: Option<&Path>,
    json: bool,
    tol: f64,
    out: &mut dyn Write,
) -> Result<i32> {
    let spec = LoadedSpec::read(path)?;
    let prices = spec.require_prices()?.clone();
    let market = spec.market()?;

    if let Some(u) = point {
        // a single-derivative violation short-circuits just like the search
        let infeasible = prices
            .as_slice()
            .iter()
            .zip(market.intervals())
            .any(|(p, iv)| !iv.contains(*p));
        if infeasible {
            // the search stops before touching the grid in this case
            let cfg = DetectConfig {
                grid_n: 3,
                refine: false,
                ..DetectConfig::default()
            };
            let r = market.detect_margins(&prices, &cfg)?;
            return emit_detection(&r, report_path, json, out);
        }
        let env = market.envelopes(&prices)?;
        if u.len() != env.dim() || u.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config(format!("--point needs {} coordinates in [0, 1]", env.dim())));
        }
        let (upper, lower) = (env.upper(&u), env.lower(&u));
        let value = upper - lower;
        let verdict = if value < -tol { Verdict::Arbitrage } else { Verdict::NoDecision };
        let r = PointReport {
            verdict,
            point: u,
            value,
            upper,
            lower,
        };
        let text = json_line(&r)?;
        if let Some(p) = report_path {
            std::fs::write(p, format!("{text}\n")).map_err(io_err)?;
        }
        if json {
            writeln!(out, "{text}").map_err(io_err)?;
        } else {
            writeln!(out, "verdict: {}", verdict_name(verdict)).map_err(io_err)?;
            writeln!(out, "f_obj({}) = {:.6}", fmt_point(&r.point), value).map_err(io_err)?;
            writeln!(out, "upper envelope {upper:.6}, lower envelope {lower:.6}").map_err(io_err)?;
        }
        return Ok(exit_for(verdict));
    }

    let cfg = DetectConfig {
        grid_n: grid,
        refine,
        tolerance: tol,
        ..DetectConfig::default()
    };
    // covers the all-assets case too, and rejects unequal subsets
    let report = market.detect_margins(&prices, &cfg)?;
    emit_detection(&report, report_path, json, out)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Arbitrage => "arbitrage",
        Verdict::NoDecision => "no-decision",
    }
}

fn exit_for(v: Verdict) -> i32 {
    match v {
        Verdict::Arbitrage => EXIT_ARBITRAGE,
        Verdict::NoDecision => EXIT_OK,
    }
}

fn fmt_point(u: &[f64]) -> String {
    u.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
}

fn emit_detection(r: &DetectionReport, path: Option<&Path>, json: bool, out: &mut dyn Write) -> Result<i32> {
    let text = json_line(r)?;
    if let Some(p) = path {
        std::fs::write(p, format!("{text}\n")).map_err(io_err)?;
    }
    if json {
        writeln!(out, "{text}").map_err(io_err)?;
    } else {
        writeln!(out, "verdict: {}", verdict_name(r.verdict)).map_err(io_err)?;
        if let Some(k) = r.infeasible_derivative {
            let iv = r.intervals[k];
            writeln!(
                out,
                "derivative {k} is priced outside its no-arbitrage interval [{:.6}, {:.6}]",
                iv.lower, iv.upper
            )
            .map_err(io_err)?;
        }
        if let (Some(m), Some(x)) = (r.grid_minimum, &r.grid_argmin) {
            writeln!(out, "grid {}: minimum {:.6} at ({})", r.grid_n, m, fmt_point(x)).map_err(io_err)?;
        }
        if r.refinement_iterations > 0 {
            writeln!(out, "refined in {} iterations", r.refinement_iterations).map_err(io_err)?;
        }
        if let (Some(w), Some(v)) = (&r.witness, r.objective) {
            writeln!(out, "witness ({}) with f_obj = {:.6}", fmt_point(w), v).map_err(io_err)?;
        }
    }
    Ok(exit_for(r.verdict))
}

/// Parses `lo:hi:step` into the inclusive strike list.
pub fn parse_strikes(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Config(format!("strike range must be lo:hi:step, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (v[0], v[1], v[2]);
    if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo || lo < 0.0 {
        return Err(Error::Config(format!(
            "strike range needs 0 <= lo <= hi and step > 0, got {s:?}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|j| lo + step * j as f64).collect())
}

pub fn sweep_csv(spec: &LoadedSpec, derivative: usize, strikes: &[f64]) -> Result<String> {
    if derivative >= spec.file.derivatives.len() {
        return Err(Error::Config(format!("no derivative with index {derivative}")));
    }
    let mut csv = String::from("strike,lower,upper\n");
    for &k in strikes {
        let iv = derivative_interval(spec, derivative, k)?;
        csv.push_str(&format!("{k},{:.10},{:.10}\n", iv.lower, iv.upper));
    }
    Ok(csv)
}

pub fn cmd_sweep(path: &Path, derivative: usize, strikes: &str, csv_path: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let strikes = parse_strikes(strikes)?;
    let spec = LoadedSpec::read(path)?;
    let csv = sweep_csv(&spec, derivative, &strikes)?;
    match csv_path {
        Some(p) => std::fs::write(p, csv).map_err(io_err)?,
        None => write!(out, "{csv}").map_err(io_err)?,
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Martingale, CDF round-trip and normalization checks on every marginal.
pub fn check_marginals(spec: &LoadedSpec, seed: u64, samples: usize) -> Vec<CheckLine> {
    let mut lines = Vec::new();
    let mc = martingale_check(&spec.margins, samples, seed);
    for (i, (m, e)) in spec.margins.iter().zip(&mc).enumerate() {
        let s0 = m.s0();
        let dev = (e.price - s0).abs();
        lines.push(CheckLine {
            name: format!("asset {i}: martingale"),
            passed: dev <= 4.0 * e.std_error + 1e-9 * s0,
            detail: format!("E[S] = {:.6} +- {:.6}, S0 = {s0}", e.price, e.std_error),
        });

        let mut worst: f64 = 0.0;
        let mut failure = None;
        for u in [1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999] {
            match m.quantile(u) {
                Ok(x) => worst = worst.max((m.cdf(x) - u).abs()),
                Err(e) => failure = Some(e.to_string()),
            }
        }
        lines.push(CheckLine {
            name: format!("asset {i}: cdf round trip"),
            passed: failure.is_none() && worst < 1e-6,
            detail: failure.unwrap_or_else(|| format!("max |F(F^-1(u)) - u| = {worst:.2e}")),
        });

        let xs: Vec<f64> = (0..=400).map(|j| s0 * 0.025 * j as f64).collect();
        let monotone = xs.windows(2).all(|w| m.cdf(w[0]) <= m.cdf(w[1]));
        let limits = m.cdf(0.0) == 0.0 && m.cdf(1e6 * s0) > 1.0 - 1e-8;
        lines.push(CheckLine {
            name: format!("asset {i}: cdf shape"),
            passed: monotone && limits,
            detail: format!("monotone {monotone}, limits {limits}"),
        });

        if let Marginal::Nig(n) = m {
            let mass = n.captured_mass();
            lines.push(CheckLine {
                name: format!("asset {i}: density mass"),
                passed: (mass - 1.0).abs() < 1e-8,
                detail: format!("integrated density {mass:.12}"),
            });
        }
    }
    lines
}

pub fn cmd_check(path: &Path, seed: u64, samples: usize, out: &mut dyn Write) -> Result<i32> {
    let spec = LoadedSpec::read(path)?;
    let lines = check_marginals(&spec, seed, samples);
    for l in &lines {
        let tag = if l.passed { "ok  " } else { "FAIL" };
        writeln!(out, "{tag} {}: {}", l.name, l.detail).map_err(io_err)?;
    }
    Ok(if lines.iter().all(|l| l.passed) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}
