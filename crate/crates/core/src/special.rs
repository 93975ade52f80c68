//! Special functions and one-dimensional numerical primitives.

use libm::erfc;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Exponentially scaled modified Bessel function of the second kind of
/// order one, `e^x K_1(x)`, for `x > 0`.
pub fn bessel_k1_scaled(x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k1_scaled requires a positive argument");
    if x <= 2.0 {
        x.exp() * k1_series(x)
    } else if x < 25.0 {
        k1_scaled_integral(x)
    } else {
        k1_scaled_asymptotic(x)
    }
}

/// Modified Bessel function of the second kind of order one.
pub fn bessel_k1(x: f64) -> f64 {
    if x <= 2.0 {
        k1_series(x)
    } else {
        bessel_k1_scaled(x) * (-x).exp()
    }
}

// K_1(x) = 1/x + ln(x/2) I_1(x) - (x/4) sum_k (psi(k+1) + psi(k+2)) (x^2/4)^k / (k! (k+1)!)
fn k1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0; // (x^2/4)^k / (k! (k+1)!)
    let mut psi_k1 = -EULER_GAMMA; // psi(k+1)
    let mut i1 = 0.0;
    let mut tail = 0.0;
    for k in 0..60 {
        let kf = k as f64;
        let psi_k2 = psi_k1 + 1.0 / (kf + 1.0);
        i1 += term;
        tail += (psi_k1 + psi_k2) * term;
        let next = term * q / ((kf + 1.0) * (kf + 2.0));
        psi_k1 = psi_k2;
        term = next;
        if term < 1e-18 * i1 {
            break;
        }
    }
    let i1 = 0.5 * x * i1;
    1.0 / x + (0.5 * x).ln() * i1 - 0.25 * x * tail
}

// e^x K_1(x) = int_0^inf exp(-x (cosh t - 1)) cosh t dt; the trapezoid rule on an
// entire integrand converges geometrically in the step.
fn k1_scaled_integral(x: f64) -> f64 {
    let h = 0.05;
    let mut sum = 0.5;
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let c = t.cosh();
        let term = (-x * (c - 1.0)).exp() * c;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    h * sum
}

fn k1_scaled_asymptotic(x: f64) -> f64 {
    // mu = 4 nu^2 = 4
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        let odd = (2 * k - 1) as f64;
        let next = term * (4.0 - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * sum
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values: Abramowitz & Stegun table 9.8 / mpmath besselk(1, x).
    #[test]
    fn k1_matches_reference_values() {
        let cases = [
            (0.1, 9.853_844_780_870_606),
            (0.5, 1.656_441_120_003_301),
            (1.0, 0.601_907_230_197_234_6),
            (2.0, 0.139_865_881_816_522_4),
            (3.0, 0.040_156_431_128_194_18),
            (5.0, 0.004_044_613_445_452_164),
            (10.0, 1.864_877_345_382_558e-5),
            (30.0, 2.167_732_001_891_549_4e-14),
        ];
        for (x, want) in cases {
            let got = bessel_k1(x);
            assert!(
                ((got - want) / want).abs() < 1e-12,
                "K1({x}) = {got}, expected {want}"
            );
        }
    }

    #[test]
    fn k1_branches_agree_at_the_seams() {
        for x in [2.0_f64, 25.0] {
            let lo = bessel_k1_scaled(x - 1e-9);
            let hi = bessel_k1_scaled(x + 1e-9);
            assert!(((lo - hi) / lo).abs() < 1e-9);
        }
        let a = k1_scaled_integral(25.0);
        let b = k1_scaled_asymptotic(25.0);
        assert!(((a - b) / a).abs() < 1e-13);
    }

    #[test]
    fn norm_cdf_known_points() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(0.5) - 0.691_462_461_274_013_1).abs() < 1e-15);
        let r = norm_cdf(-3.0);
        assert!((r / 0.001_349_898_031_630_094_5 - 1.0).abs() < 1e-14, "{r:e}");
    }

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-11);
        assert_eq!(adaptive_simpson(&|_| 1.0, 1.0, 1.0, 1e-12), 0.0);
    }
}
