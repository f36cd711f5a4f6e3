//! Small deterministic optimizers: Nelder–Mead simplex, three-point parabolic
//! refinement, and sinusoid fitting.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

/// Reflection, expansion, contraction and shrink coefficients.
const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once `(f_worst − f_best) ≤ rel_tol · |f_best|` (or the absolute floor).
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            rel_tol: 1e-8,
            abs_tol: 1e-30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimizes `f` starting from a simplex of `x0` plus one step per axis.
pub fn nelder_mead<F>(f: F, x0: &[f64], steps: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut iterations = 0;
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect()
    };
    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let (best, worst) = (values[0], values[n]);
        if worst - best <= opts.rel_tol * best.abs() + opts.abs_tol {
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
            .collect();
        let reflected = combine(&centroid, &simplex[n], -ALPHA);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = combine(&centroid, &simplex[n], -GAMMA);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let (target, ft) = if fr < values[n] {
                (reflected.clone(), fr)
            } else {
                (simplex[n].clone(), values[n])
            };
            let contracted = combine(&centroid, &target, RHO);
            let fc = f(&contracted);
            if fc < ft {
                simplex[n] = contracted;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = combine(&simplex[0], &simplex[i], SIGMA);
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
    }
}

/// Abscissa of the vertex of the parabola through three points, or `None`
/// when the points are collinear.
pub fn parabolic_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d1 = (x[1] - x[0]) * (y[1] - y[2]);
    let d2 = (x[1] - x[2]) * (y[1] - y[0]);
    let denom = d1 - d2;
    if denom.abs() < f64::EPSILON * (d1.abs() + d2.abs()).max(f64::MIN_POSITIVE) {
        return None;
    }
    let num = (x[1] - x[0]) * d1 - (x[1] - x[2]) * d2;
    Some(x[1] - 0.5 * num / denom)
}

/// `y ≈ offset + amplitude·cos(2π·frequency·x + phase)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub frequency: f64,
    pub residual: f64,
}

/// Linear least squares for offset, cosine and sine weights at a fixed frequency.
pub fn fit_sinusoid_at(x: &[f64], y: &[f64], frequency: f64) -> SinusoidFit {
    let n = x.len();
    let design = DMatrix::from_fn(n, 3, |r, c| {
        let arg = 2.0 * PI * frequency * x[r];
        match c {
            0 => 1.0,
            1 => arg.cos(),
            _ => arg.sin(),
        }
    });
    let rhs = DVector::from_column_slice(y);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(3));
    let residual = (design * &coef - rhs).norm_squared();
    let (a, b) = (coef[1], coef[2]);
    SinusoidFit {
        offset: coef[0],
        amplitude: a.hypot(b),
        // a·cos + b·sin = A·cos(arg + phase) with phase = atan2(−b, a)
        phase: (-b).atan2(a),
        frequency,
        residual,
    }
}

/// Frequency, amplitude, phase and offset of a sampled sinusoid. The frequency
/// is seeded by the best point of a dense periodogram scan between zero and the
/// Nyquist limit of the mean spacing, then refined by golden-section search.
pub fn fit_sinusoid(x: &[f64], y: &[f64]) -> Option<SinusoidFit> {
    let n = x.len();
    if n < 4 || y.len() != n {
        return None;
    }
    let span = x[n - 1] - x[0];
    if !(span > 0.0) {
        return None;
    }
    let nyquist = 0.5 * (n - 1) as f64 / span;
    let df = 1.0 / (8.0 * span);
    let steps = (nyquist / df).ceil() as usize;
    let mut best = fit_sinusoid_at(x, y, df);
    for k in 2..=steps {
        let cand = fit_sinusoid_at(x, y, k as f64 * df);
        if cand.residual < best.residual {
            best = cand;
        }
    }
    let (mut lo, mut hi) = ((best.frequency - df).max(0.0), best.frequency + df);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let mut fc = fit_sinusoid_at(x, y, c).residual;
    let mut fd = fit_sinusoid_at(x, y, d).residual;
    for _ in 0..200 {
        if (hi - lo) <= 1e-13 * hi.abs().max(1e-300) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = fit_sinusoid_at(x, y, c).residual;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = fit_sinusoid_at(x, y, d).residual;
        }
    }
    let refined = fit_sinusoid_at(x, y, 0.5 * (lo + hi));
    Some(if refined.residual <= best.residual { refined } else { best })
}
