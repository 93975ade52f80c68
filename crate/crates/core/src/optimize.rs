//! Box-clamped Nelder-Mead for the detection refinement step.

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    pub max_iter: usize,
    /// Stop once every vertex lies within this distance (max-norm) of the best.
    pub tol: f64,
    /// Initial simplex edge length.
    pub step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            step: 0.05,
        }
    }
}

fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` over `[0,1]^d` starting from `x0`. Every trial point is
/// clamped into the cube before evaluation.
pub fn nelder_mead_unit_cube<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], cfg: NelderMeadConfig) -> NelderMeadResult {
    let d = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut start = x0.to_vec();
    clamp_unit(&mut start);
    simplex.push(start.clone());
    for i in 0..d {
        let mut v = start.clone();
        // step away from the nearer face so the vertex stays distinct
        v[i] += if v[i] + cfg.step <= 1.0 { cfg.step } else { -cfg.step };
        clamp_unit(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread < cfg.tol {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64)
            .collect();
        let toward = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[d])
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            clamp_unit(&mut p);
            p
        };

        let xr = toward(1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = toward(2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
            continue;
        }
        if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[d] {
            let x = toward(0.5);
            let v = f(&x);
            (x, v)
        } else {
            let x = toward(-0.5);
            let v = f(&x);
            (x, v)
        };
        if fc < values[d].min(fr) {
            simplex[d] = xc;
            values[d] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=d {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(v, b)| b + 0.5 * (v - b))
                .collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=d)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    NelderMeadResult {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
    }
}
