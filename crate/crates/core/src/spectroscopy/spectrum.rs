use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::toggling::{dd_signal, xy8_pair};
use crate::error::{invalid, Result};
use crate::optim::parabolic_vertex;
use crate::system::{HyperfineCoupling, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub tau_us: f64,
    /// Electron |↓⟩ population.
    pub p_down: f64,
    pub sigma: Option<f64>,
}

impl SpectrumPoint {
    pub fn new(tau_us: f64, p_down: f64) -> Self {
        Self {
            tau_us,
            p_down,
            sigma: None,
        }
    }
}

pub(crate) fn check_pulses(n_pulses: usize) -> Result<()> {
    if n_pulses == 0 || !n_pulses.is_multiple_of(8) {
        return Err(invalid("n_pulses", format!("must be a positive multiple of 8, got {n_pulses}")));
    }
    Ok(())
}

/// Spectroscopy readout `(1 + ∏_i M_i)/2` for independent spins, where `M_i`
/// is the single-spin [`dd_signal`] of the XY8 block. The XY8 phase pattern
/// gives both electron branches the same π-pulse amplitude, so no extra
/// electron phase enters.
pub fn xy8_p_down<'a>(
    f_larmor: f64,
    spins: impl IntoIterator<Item = &'a HyperfineCoupling>,
    n_pulses: usize,
    tau: f64,
) -> f64 {
    let m: f64 = spins
        .into_iter()
        .map(|hf| dd_signal(&xy8_pair(f_larmor, hf, n_pulses, tau)))
        .product();
    0.5 * (1.0 + m)
}

pub(crate) fn check_grid(tau_grid: &[f64]) -> Result<()> {
    if let Some(bad) = tau_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(invalid("tau_grid", format!("values must be positive, found {bad}")));
    }
    if let Some(i) = tau_grid.windows(2).position(|w| w[1] < w[0]) {
        return Err(invalid("tau_grid", format!("not sorted at index {}", i + 1)));
    }
    Ok(())
}

/// XY8 spectrum over a sorted τ grid, evaluated on the conditional-unitary path.
pub fn simulate_spectrum(tau_grid: &[f64], system: &SystemModel, n_pulses: usize) -> Result<Vec<SpectrumPoint>> {
    check_pulses(n_pulses)?;
    check_grid(tau_grid)?;
    let couplings: Vec<HyperfineCoupling> = system.spins().iter().map(|s| s.hyperfine).collect();
    Ok(tau_grid
        .par_iter()
        .map(|&tau| SpectrumPoint::new(tau, xy8_p_down(system.f_larmor, &couplings, n_pulses, tau)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dip {
    pub tau_center_us: f64,
    /// Prominence of the minimum below its lower surrounding shoulder.
    pub depth: f64,
    /// Signal at the sampled minimum.
    pub p_down_min: f64,
}

/// Local minima with prominence at least `prominence`, centers refined by a
/// parabola through the minimum and its neighbours.
pub fn find_dips(points: &[SpectrumPoint], prominence: f64) -> Result<Vec<Dip>> {
    if points.len() < 3 {
        return Err(invalid("points", format!("need at least 3 points, got {}", points.len())));
    }
    if !(prominence.is_finite() && prominence >= 0.0) {
        return Err(invalid("prominence", "must be finite and non-negative"));
    }
    let y: Vec<f64> = points.iter().map(|p| p.p_down).collect();
    let x: Vec<f64> = points.iter().map(|p| p.tau_us).collect();
    if y.iter().chain(&x).any(|v| !v.is_finite()) {
        return Err(invalid("points", "non-finite values"));
    }
    let n = y.len();
    let mut dips = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if !(y[i] < y[i - 1]) {
            i += 1;
            continue;
        }
        // walk across a flat bottom
        let mut j = i;
        while j + 1 < n && y[j + 1] == y[i] {
            j += 1;
        }
        if j + 1 >= n || !(y[j + 1] > y[i]) {
            i = j + 1;
            continue;
        }
        let mut left_max = y[i];
        for k in (0..i).rev() {
            if y[k] < y[i] {
                break;
            }
            left_max = left_max.max(y[k]);
        }
        let mut right_max = y[i];
        for &v in &y[j + 1..] {
            if v < y[i] {
                break;
            }
            right_max = right_max.max(v);
        }
        let depth = left_max.min(right_max) - y[i];
        if depth >= prominence && depth > 0.0 {
            let c = (i + j) / 2;
            let center = if i == j {
                parabolic_vertex([x[c - 1], x[c], x[c + 1]], [y[c - 1], y[c], y[c + 1]])
                    .map(|v| v.clamp(x[c - 1], x[c + 1]))
                    .unwrap_or(x[c])
            } else {
                0.5 * (x[i] + x[j])
            };
            dips.push(Dip {
                tau_center_us: center,
                depth,
                p_down_min: y[i],
            });
        }
        i = j + 1;
    }
    Ok(dips)
}
