//! Quasi-static detuning noise averaged over Gaussian realizations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::program::PulseProgram;
use crate::system::{Branch, SystemModel};

use super::density::{evolve_density_detuned, initial_state, Detuning};

/// Which spin the static detuning acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseTarget {
    /// Extra electron phase `2π·δ·t·Sz_e` accumulated during delays.
    #[default]
    Electron,
    /// Shift `δ` of every nuclear Larmor frequency.
    Nucleus,
}

/// Readouts of `program` averaged over `samples` static detunings drawn from
/// `N(0, detuning_sigma²)` (MHz). Starts from the electron in |↑⟩ and mixed
/// nuclei. `detuning_sigma = 0` runs a single noiseless evaluation.
pub fn quasistatic_dephasing_scan(
    program: &PulseProgram,
    system: &SystemModel,
    target: NoiseTarget,
    detuning_sigma: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(detuning_sigma.is_finite() && detuning_sigma >= 0.0) {
        return Err(invalid("detuning_sigma", "must be finite and non-negative"));
    }
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    let rho0 = initial_state(system, Branch::Up);
    if detuning_sigma == 0.0 {
        return Ok(evolve_density_detuned(program, &rho0, system, Detuning::default())?.readouts);
    }
    let normal = Normal::new(0.0, detuning_sigma).map_err(|e| invalid("detuning_sigma", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..samples).map(|_| normal.sample(&mut rng)).collect();
    let runs = draws
        .par_iter()
        .map(|&delta| {
            let detuning = match target {
                NoiseTarget::Electron => Detuning {
                    electron_mhz: delta,
                    nucleus_mhz: 0.0,
                },
                NoiseTarget::Nucleus => Detuning {
                    electron_mhz: 0.0,
                    nucleus_mhz: delta,
                },
            };
            evolve_density_detuned(program, &rho0, system, detuning).map(|o| o.readouts)
        })
        .collect::<Result<Vec<_>>>()?;
    let width = runs.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; width];
    for run in &runs {
        for (m, r) in mean.iter_mut().zip(run) {
            *m += r;
        }
    }
    mean.iter_mut().for_each(|m| *m /= samples as f64);
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{build_xy8_block, PulseElement, PHASE_X};
    use crate::system::{HyperfineCoupling, NuclearSpin};
    use std::f64::consts::PI;

    fn uncoupled() -> SystemModel {
        SystemModel::new(1.4, vec![NuclearSpin::new("n", HyperfineCoupling::new(0.0, 0.0).unwrap())]).unwrap()
    }

    fn free_precession(t: f64) -> PulseProgram {
        let mut p = PulseProgram::new("fid");
        p.push(PulseElement::ElectronReset { target: Branch::Up })
            .push(PulseElement::half_pi(PHASE_X))
            .push(PulseElement::delay(t))
            .push(PulseElement::half_pi(PHASE_X))
            .push(PulseElement::ReadoutMarker);
        p
    }

    fn decoupled(n: usize, t: f64) -> PulseProgram {
        let mut p = PulseProgram::new("dd");
        p.push(PulseElement::ElectronReset { target: Branch::Up })
            .push(PulseElement::half_pi(PHASE_X))
            .append(&build_xy8_block(n, t / (2.0 * n as f64)).unwrap())
            .push(PulseElement::half_pi(PHASE_X))
            .push(PulseElement::ReadoutMarker);
        p
    }

    #[test]
    fn zero_sigma_is_noiseless() {
        let sys = SystemModel::reference(1.4158);
        let p = decoupled(16, 40.0);
        let a = quasistatic_dephasing_scan(&p, &sys, NoiseTarget::Electron, 0.0, 5, 1).unwrap();
        let b = crate::engine::density::evolve_density(&p, &initial_state(&sys, Branch::Up), &sys)
            .unwrap()
            .readouts;
        assert_eq!(a, b);
    }

    #[test]
    fn free_precession_follows_gaussian_decay() {
        let sys = uncoupled();
        let sigma = 0.05;
        for t in [2.0, 4.0, 6.0] {
            let got = quasistatic_dephasing_scan(&free_precession(t), &sys, NoiseTarget::Electron, sigma, 4000, 5).unwrap()[0];
            let expected = 0.5 * (1.0 + (-(2.0 * PI * sigma * t).powi(2) / 2.0).exp());
            assert!((got - expected).abs() < 0.02, "t={t}: {got} vs {expected}");
        }
    }

    #[test]
    fn decoupling_beats_free_precession() {
        let sys = uncoupled();
        let (sigma, t) = (0.05, 6.0);
        let fid = quasistatic_dephasing_scan(&free_precession(t), &sys, NoiseTarget::Electron, sigma, 400, 9).unwrap()[0];
        let dd = quasistatic_dephasing_scan(&decoupled(16, t), &sys, NoiseTarget::Electron, sigma, 400, 9).unwrap()[0];
        // both start from a noiseless value of 1
        assert!((1.0 - dd).abs() < (1.0 - fid).abs());
        assert!((1.0 - dd).abs() < 1e-6);
    }

    #[test]
    fn rejects_negative_sigma() {
        assert!(quasistatic_dephasing_scan(&free_precession(1.0), &uncoupled(), NoiseTarget::Electron, -1.0, 1, 0).is_err());
    }
}
