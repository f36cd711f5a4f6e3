//! Brute-force joint density-matrix evolution.
//!
//! Delays propagate with `exp(−i·H·t)` of the full electron + nuclei
//! Hamiltonian, computed by a generic matrix exponential; nothing here relies
//! on the branch structure used by the toggling path.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::algebra::{embed, kron, BlochVector, ComplexMatrix2, ComplexMatrixN, VALIDATION_TOL};
use crate::error::{invalid, Error, Result};
use crate::program::{validate_program, PulseElement, PulseProgram};
use crate::system::{Branch, SystemModel};

use super::toggling::electron_rotation;

/// Static detunings in MHz added to the rotating-frame Hamiltonian as
/// `2π·δ_e·Sz_e + 2π·δ_n·Σ Sz_i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Detuning {
    pub electron_mhz: f64,
    pub nucleus_mhz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOutcome {
    pub rho: ComplexMatrixN,
    /// Electron |↓⟩ population at each readout marker, in program order.
    pub readouts: Vec<f64>,
}

fn half(m: ComplexMatrix2) -> ComplexMatrix2 {
    m.scale(0.5)
}

/// Joint Hamiltonian in rad/µs.
pub fn joint_hamiltonian(system: &SystemModel, detuning: Detuning) -> ComplexMatrixN {
    let n = system.n_spins();
    let q = n + 1;
    let sz = half(ComplexMatrix2::pauli_z());
    let sx = half(ComplexMatrix2::pauli_x());
    let sz_e = embed(&sz, 0, q);
    let dim = 1 << q;
    let mut h = sz_e.0.clone() * Complex64::new(detuning.electron_mhz, 0.0);
    for (i, spin) in system.spins().iter().enumerate() {
        let sz_i = embed(&sz, i + 1, q);
        let sx_i = embed(&sx, i + 1, q);
        let hf = spin.hyperfine;
        let coupling = &sz_i.0 * Complex64::new(hf.a_par, 0.0) + &sx_i.0 * Complex64::new(hf.a_perp, 0.0);
        h += &sz_i.0 * Complex64::new(system.f_larmor + detuning.nucleus_mhz, 0.0);
        h += &sz_e.0 * coupling;
    }
    debug_assert_eq!(h.nrows(), dim);
    ComplexMatrixN(h * Complex64::new(2.0 * PI, 0.0))
}

/// Electron in `electron`, every nucleus maximally mixed.
pub fn initial_state(system: &SystemModel, electron: Branch) -> ComplexMatrixN {
    let d = 1usize << system.n_spins();
    let nuclei = ComplexMatrixN::identity(d).scale(Complex64::new(1.0 / d as f64, 0.0));
    kron(&ComplexMatrix2::projector(electron.index()), &nuclei)
}

/// Electron in `electron`, nucleus `i` in the state with Bloch vector `nuclei[i]`.
pub fn product_state(system: &SystemModel, electron: Branch, nuclei: &[BlochVector]) -> Result<ComplexMatrixN> {
    if nuclei.len() != system.n_spins() {
        return Err(Error::DimensionMismatch {
            expected: system.n_spins(),
            found: nuclei.len(),
        });
    }
    let mut rho = ComplexMatrixN::identity(1);
    for r in nuclei {
        if r.norm() > 1.0 + VALIDATION_TOL {
            return Err(invalid("nuclei", format!("Bloch vector norm {} exceeds 1", r.norm())));
        }
        rho = crate::algebra::kron_n(&rho, &ComplexMatrixN::from_2x2(&ComplexMatrix2::from_bloch(r)));
    }
    Ok(kron(&ComplexMatrix2::projector(electron.index()), &rho))
}

/// Bloch vector of nuclear spin `spin_index` in a joint state.
pub fn nuclear_bloch(rho: &ComplexMatrixN, spin_index: usize) -> BlochVector {
    crate::algebra::bloch_unchecked(&rho.reduced_qubit(spin_index + 1))
}

/// Electron |↓⟩ population of a joint state.
pub fn electron_p_down(rho: &ComplexMatrixN) -> f64 {
    let d = rho.dim();
    (d / 2..d).map(|k| rho.0[(k, k)].re).sum()
}

pub fn evolve_density(program: &PulseProgram, rho0: &ComplexMatrixN, system: &SystemModel) -> Result<DensityOutcome> {
    evolve_density_detuned(program, rho0, system, Detuning::default())
}

pub fn evolve_density_detuned(
    program: &PulseProgram,
    rho0: &ComplexMatrixN,
    system: &SystemModel,
    detuning: Detuning,
) -> Result<DensityOutcome> {
    let dim = 2usize << system.n_spins();
    if rho0.dim() != dim || rho0.0.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho0.dim(),
        });
    }
    rho0.validate_density(VALIDATION_TOL)?;
    validate_program(program)?;

    let h = joint_hamiltonian(system, detuning);
    let nuclei_identity = ComplexMatrixN::identity(dim / 2);
    let mut delays: HashMap<u64, ComplexMatrixN> = HashMap::new();
    let mut rotations: HashMap<(u64, u64), ComplexMatrixN> = HashMap::new();
    let mut rho = rho0.clone();
    let mut readouts = Vec::new();
    for element in &program.elements {
        match *element {
            PulseElement::Delay { duration_us } => {
                if duration_us == 0.0 {
                    continue;
                }
                let u = delays
                    .entry(duration_us.to_bits())
                    .or_insert_with(|| h.scale(Complex64::new(0.0, -duration_us)).exp());
                rho = u.conjugate(&rho);
            }
            PulseElement::ElectronRotation { phase, angle } => {
                let u = rotations
                    .entry((phase.to_bits(), angle.to_bits()))
                    .or_insert_with(|| kron(&electron_rotation(phase, angle), &nuclei_identity));
                rho = u.conjugate(&rho);
            }
            PulseElement::ElectronReset { target } => {
                let nuclei = rho.partial_trace_outer(2);
                rho = kron(&ComplexMatrix2::projector(target.index()), &nuclei);
            }
            PulseElement::ReadoutMarker => readouts.push(electron_p_down(&rho)),
        }
    }
    Ok(DensityOutcome { rho, readouts })
}
