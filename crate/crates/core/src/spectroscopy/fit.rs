use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::system::HyperfineCoupling;

use super::spectrum::{check_grid, check_pulses, xy8_p_down, SpectrumPoint};

pub const COARSE_POINTS_PER_AXIS: usize = 20;
pub const REFINED_CANDIDATES: usize = 5;
const FLAT_RESIDUAL_FLOOR: f64 = 1e-16;

/// Search box for a single-spin fit, MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub a_par: (f64, f64),
    pub a_perp: (f64, f64),
    pub f_larmor: (f64, f64),
    /// Preferred Larmor frequency (typically γ·B) used to break ties between
    /// equally good solutions.
    pub reference_f_larmor: Option<f64>,
}

impl Default for FitBounds {
    fn default() -> Self {
        Self {
            a_par: (0.02, 0.25),
            a_perp: (0.05, 0.6),
            f_larmor: (1.39, 1.44),
            reference_f_larmor: None,
        }
    }
}

impl FitBounds {
    fn axes(&self) -> [(f64, f64); 3] {
        [self.a_par, self.a_perp, self.f_larmor]
    }

    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in ["a_par", "a_perp", "f_larmor"].into_iter().zip(self.axes()) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid("bounds", format!("{name} range [{lo}, {hi}] is not a finite interval")));
            }
        }
        if self.a_perp.0 < 0.0 {
            return Err(invalid("bounds", "a_perp lower bound must be non-negative"));
        }
        if self.f_larmor.0 <= 0.0 {
            return Err(invalid("bounds", "f_larmor lower bound must be positive"));
        }
        Ok(())
    }

    fn clamp(&self, v: &[f64]) -> ([f64; 3], f64) {
        let mut out = [0.0; 3];
        let mut excess = 0.0;
        for (k, (lo, hi)) in self.axes().into_iter().enumerate() {
            out[k] = v[k].clamp(lo, hi);
            let width = (hi - lo).max(f64::MIN_POSITIVE);
            excess += ((v[k] - out[k]) / width).powi(2);
        }
        (out, excess)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a_par: f64,
    pub a_perp: f64,
    pub f_larmor: f64,
    /// Weighted sum of squared errors at the optimum.
    pub residual: f64,
    /// Residual of the best constant model.
    pub flat_residual: f64,
    pub iterations: usize,
    /// One-sigma uncertainties from the local curvature of the objective;
    /// noise variance is taken from the residual when no σ is supplied.
    pub std_errors: Option<[f64; 3]>,
    /// Number of refined candidates tied with the optimum.
    pub tied_candidates: usize,
    pub reference_f_larmor: Option<f64>,
}

struct Objective<'a> {
    taus: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    n_pulses: usize,
    bounds: &'a FitBounds,
}

impl Objective<'_> {
    fn model(&self, p: &[f64; 3], tau: f64) -> f64 {
        let hf = HyperfineCoupling {
            a_par: p[0],
            a_perp: p[1],
        };
        xy8_p_down(p[2], [&hf], self.n_pulses, tau)
    }

    fn sse(&self, p: &[f64; 3]) -> f64 {
        self.taus
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
            .map(|((&t, &y), &w)| w * (self.model(p, t) - y).powi(2))
            .sum()
    }

    fn penalized(&self, v: &[f64]) -> f64 {
        let (p, excess) = self.bounds.clamp(v);
        let base = self.sse(&p);
        base + excess * (1.0 + base)
    }
}

/// Least-squares fit of `{A∥, A⊥, f_L}` to an XY8 spectrum: exhaustive coarse
/// grid over the box, then Nelder–Mead from the best few grid cells.
pub fn fit_hyperfine(points: &[SpectrumPoint], bounds: &FitBounds, n_pulses: usize) -> Result<FitResult> {
    check_pulses(n_pulses)?;
    bounds.validate()?;
    if points.len() < 4 {
        return Err(invalid("points", "need at least 4 spectrum points"));
    }
    let taus: Vec<f64> = points.iter().map(|p| p.tau_us).collect();
    check_grid(&taus)?;
    let values: Vec<f64> = points.iter().map(|p| p.p_down).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("points", "non-finite signal"));
    }
    let weighted = points.iter().all(|p| matches!(p.sigma, Some(s) if s > 0.0 && s.is_finite()));
    let weights: Vec<f64> = if weighted {
        points.iter().map(|p| p.sigma.map_or(1.0, |s| 1.0 / (s * s))).collect()
    } else {
        vec![1.0; points.len()]
    };
    let obj = Objective {
        taus,
        values,
        weights,
        n_pulses,
        bounds,
    };

    let wsum: f64 = obj.weights.iter().sum();
    let mean = obj.values.iter().zip(&obj.weights).map(|(y, w)| w * y).sum::<f64>() / wsum;
    let flat_residual: f64 = obj.values.iter().zip(&obj.weights).map(|(y, w)| w * (y - mean).powi(2)).sum();

    let g = COARSE_POINTS_PER_AXIS;
    let axes = bounds.axes();
    let cell = |k: usize, i: usize| axes[k].0 + (axes[k].1 - axes[k].0) * (i as f64 + 0.5) / g as f64;
    let mut coarse: Vec<([f64; 3], f64)> = (0..g * g * g)
        .into_par_iter()
        .map(|idx| {
            let p = [cell(0, idx / (g * g)), cell(1, (idx / g) % g), cell(2, idx % g)];
            (p, obj.sse(&p))
        })
        .collect();
    coarse.sort_by(|a, b| a.1.total_cmp(&b.1));

    let steps: Vec<f64> = axes.iter().map(|(lo, hi)| 0.5 * (hi - lo) / g as f64).collect();
    // Noiseless data drive the residual to zero, where a purely relative
    // stopping rule never fires; the floor is scaled to the data instead.
    let opts = NelderMeadOptions {
        abs_tol: FLAT_RESIDUAL_FLOOR * flat_residual,
        ..NelderMeadOptions::default()
    };
    let refined: Vec<([f64; 3], f64, usize)> = coarse
        .iter()
        .take(REFINED_CANDIDATES)
        .map(|(start, _)| {
            let m = nelder_mead(|v| obj.penalized(v), start, &steps, opts);
            let (p, _) = bounds.clamp(&m.x);
            (p, obj.sse(&p), m.iterations)
        })
        .collect();

    let best_residual = refined.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let tol = 1e-6 * best_residual + 1e-15 * wsum;
    let tied: Vec<&([f64; 3], f64, usize)> = refined.iter().filter(|r| r.1 <= best_residual + tol).collect();
    let reference = bounds.reference_f_larmor;
    let chosen = tied
        .iter()
        .min_by(|a, b| match reference {
            Some(f) => (a.0[2] - f).abs().total_cmp(&(b.0[2] - f).abs()).then(a.1.total_cmp(&b.1)),
            None => a.1.total_cmp(&b.1),
        })
        .copied()
        .ok_or_else(|| Error::NonIdentifiable("no candidate converged".into()))?;

    if !(chosen.1 < flat_residual) {
        return Err(Error::NonIdentifiable(format!(
            "best residual {:.3e} does not improve on the flat model {:.3e}",
            chosen.1, flat_residual
        )));
    }

    let dof = obj.taus.len().saturating_sub(3).max(1) as f64;
    let noise_scale = if weighted { 1.0 } else { chosen.1 / dof };
    let std_errors = covariance(&obj, &chosen.0).map(|cov| {
        [0, 1, 2].map(|k| (cov[(k, k)] * noise_scale).max(0.0).sqrt())
    });

    Ok(FitResult {
        a_par: chosen.0[0],
        a_perp: chosen.0[1],
        f_larmor: chosen.0[2],
        residual: chosen.1,
        flat_residual,
        iterations: chosen.2,
        std_errors,
        tied_candidates: tied.len(),
        reference_f_larmor: reference,
    })
}

/// `(JᵀWJ)⁻¹` with a central-difference Jacobian of the model.
fn covariance(obj: &Objective<'_>, p: &[f64; 3]) -> Option<Matrix3<f64>> {
    let h = [1e-6, 1e-6, 1e-7];
    let mut info = Matrix3::zeros();
    for (&t, &w) in obj.taus.iter().zip(&obj.weights) {
        let mut grad = Vector3::zeros();
        for k in 0..3 {
            let (mut hi, mut lo) = (*p, *p);
            hi[k] += h[k];
            lo[k] -= h[k];
            grad[k] = (obj.model(&hi, t) - obj.model(&lo, t)) / (2.0 * h[k]);
        }
        info += grad * grad.transpose() * w;
    }
    info.try_inverse()
}
