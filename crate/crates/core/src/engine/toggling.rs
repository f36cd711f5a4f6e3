//! Conditional-unitary evaluation of π-pulse-only blocks.
//!
//! Between pulses the electron sits in |↑⟩ or |↓⟩ and the nucleus precesses
//! about the matching conditional field. Every π-pulse swaps the branch, so a
//! block reduces to one nuclear SU(2) unitary per initial electron branch plus
//! a scalar electron amplitude for each.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{axis_angle_from_su2, precession, rotation_unchecked, ComplexMatrix2, Vec3};
use crate::error::{Error, Result};
use crate::program::{PulseElement, PHASE_X};
use crate::system::{Branch, HyperfineCoupling, SystemModel};

/// Nuclear unitaries for the electron starting in |↑⟩ (`v_up`) or |↓⟩ (`v_dn`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalPair {
    pub v_up: ComplexMatrix2,
    pub v_dn: ComplexMatrix2,
}

impl ConditionalPair {
    pub fn identity() -> Self {
        Self {
            v_up: ComplexMatrix2::identity(),
            v_dn: ComplexMatrix2::identity(),
        }
    }

    pub fn branch(&self, b: Branch) -> &ComplexMatrix2 {
        match b {
            Branch::Up => &self.v_up,
            Branch::Down => &self.v_dn,
        }
    }

    /// `self` applied `k` times.
    pub fn power(&self, k: usize) -> Self {
        let mut out = Self::identity();
        for _ in 0..k {
            out = Self {
                v_up: self.v_up * out.v_up,
                v_dn: self.v_dn * out.v_dn,
            };
        }
        out
    }
}

/// Axis-angle summary of a [`ConditionalPair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalGate {
    pub n_up: [f64; 3],
    pub n_dn: [f64; 3],
    /// Common rotation angle in `[0, π]`.
    pub phi: f64,
}

impl ConditionalGate {
    pub fn axis_dot(&self) -> f64 {
        Vec3::from(self.n_up).dot(&Vec3::from(self.n_dn))
    }

    /// `1 − (1 − n_up·n_dn)·sin²(φ/2)`
    pub fn closed_form_signal(&self) -> f64 {
        1.0 - (1.0 - self.axis_dot()) * (0.5 * self.phi).sin().powi(2)
    }
}

/// Per-spin conditional pairs of a block together with the electron amplitude
/// each initial branch picks up from the π-pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct ToggledBlock {
    pub pairs: Vec<ConditionalPair>,
    pub amp_up: Complex64,
    pub amp_dn: Complex64,
    pub flips: usize,
}

impl ToggledBlock {
    /// Final electron branch for the given initial branch.
    pub fn final_branch(&self, start: Branch) -> Branch {
        if self.flips.is_multiple_of(2) {
            start
        } else {
            start.flipped()
        }
    }

    /// `∏_i Re Tr(v_up,i · v_dn,i†)/2`
    pub fn coherence_product(&self) -> f64 {
        self.pairs.iter().map(dd_signal).product()
    }

    /// Electron |↓⟩ population after `reset(up) · first · block · last`, with
    /// every nucleus initially maximally mixed.
    pub fn p_down(&self, first: &ComplexMatrix2, last: &ComplexMatrix2) -> f64 {
        let w = |start: Branch, amp: Complex64| {
            let end = self.final_branch(start);
            first.m[start.index()][0] * amp * last.m[1][end.index()]
        };
        let w_up = w(Branch::Up, self.amp_up);
        let w_dn = w(Branch::Down, self.amp_dn);
        let cross = 2.0 * (w_up * w_dn.conj()).re * self.coherence_product();
        (w_up.norm_sqr() + w_dn.norm_sqr() + cross).clamp(0.0, 1.0)
    }

    /// Spectroscopy readout with π/2 pulses about X on both sides.
    pub fn spectroscopy_p_down(&self) -> f64 {
        let half = electron_rotation(PHASE_X, std::f64::consts::FRAC_PI_2);
        self.p_down(&half, &half)
    }
}

/// Electron rotation `exp(−i·angle/2·(cos φ·σx + sin φ·σy))`.
pub fn electron_rotation(phase: f64, angle: f64) -> ComplexMatrix2 {
    rotation_unchecked(&Vec3::new(phase.cos(), phase.sin(), 0.0), angle)
}

const PI_PULSE_TOL: f64 = 1e-12;

struct PropagatorCache {
    entries: Vec<(u64, Vec<[ComplexMatrix2; 2]>)>,
}

impl PropagatorCache {
    fn get(&mut self, system: &SystemModel, duration: f64) -> &[[ComplexMatrix2; 2]] {
        let key = duration.to_bits();
        let pos = match self.entries.iter().position(|(k, _)| *k == key) {
            Some(p) => p,
            None => {
                let per_spin = system
                    .spins()
                    .iter()
                    .map(|s| {
                        [Branch::Up, Branch::Down]
                            .map(|b| precession(&s.hyperfine.field(system.f_larmor, b).0, duration))
                    })
                    .collect();
                self.entries.push((key, per_spin));
                self.entries.len() - 1
            }
        };
        &self.entries[pos].1
    }
}

/// Toggling-frame evaluation of a block of π electron rotations and delays.
pub fn toggle_block(elements: &[PulseElement], system: &SystemModel) -> Result<ToggledBlock> {
    let n = system.n_spins();
    let mut pairs = vec![ConditionalPair::identity(); n];
    let mut amp_up = Complex64::new(1.0, 0.0);
    let mut amp_dn = Complex64::new(1.0, 0.0);
    let mut flips = 0usize;
    let mut cache = PropagatorCache { entries: Vec::new() };
    for (index, element) in elements.iter().enumerate() {
        match *element {
            PulseElement::Delay { duration_us } => {
                if !(duration_us.is_finite() && duration_us >= 0.0) {
                    return Err(Error::FastPathUnsupported {
                        index,
                        reason: format!("invalid delay {duration_us}"),
                    });
                }
                let up_branch = if flips.is_multiple_of(2) { Branch::Up } else { Branch::Down };
                let props = cache.get(system, duration_us);
                for (pair, p) in pairs.iter_mut().zip(props) {
                    pair.v_up = p[up_branch.index()] * pair.v_up;
                    pair.v_dn = p[up_branch.flipped().index()] * pair.v_dn;
                }
            }
            PulseElement::ElectronRotation { phase, angle } => {
                let r = electron_rotation(phase, angle);
                if r.m[0][0].norm() > PI_PULSE_TOL {
                    return Err(Error::FastPathUnsupported {
                        index,
                        reason: format!("rotation angle {angle} is not a π-pulse"),
                    });
                }
                let up_now = if flips.is_multiple_of(2) { Branch::Up } else { Branch::Down };
                let dn_now = up_now.flipped();
                amp_up *= r.m[dn_now.index()][up_now.index()];
                amp_dn *= r.m[up_now.index()][dn_now.index()];
                flips += 1;
            }
            PulseElement::ElectronReset { .. } => {
                return Err(Error::FastPathUnsupported {
                    index,
                    reason: "electron reset".into(),
                })
            }
            PulseElement::ReadoutMarker => {
                return Err(Error::FastPathUnsupported {
                    index,
                    reason: "readout marker".into(),
                })
            }
        }
    }
    Ok(ToggledBlock {
        pairs,
        amp_up,
        amp_dn,
        flips,
    })
}

/// Conditional nuclear unitaries of `block` for spin `label`.
pub fn conditional_unitaries(
    block: &crate::program::PulseProgram,
    system: &SystemModel,
    label: &str,
) -> Result<ConditionalPair> {
    let index = system.spin_index(label)?;
    let toggled = toggle_block(&block.elements, system)?;
    Ok(toggled.pairs[index])
}

/// Conditional pair of an `n_pulses` XY8 block for one spin, built from one
/// eight-pulse unit raised to the `n_pulses/8` power.
pub fn xy8_pair(f_larmor: f64, hf: &HyperfineCoupling, n_pulses: usize, tau: f64) -> ConditionalPair {
    let field_up = hf.field(f_larmor, Branch::Up).0;
    let field_dn = hf.field(f_larmor, Branch::Down).0;
    let (up_half, dn_half) = (precession(&field_up, tau), precession(&field_dn, tau));
    let (up_full, dn_full) = (up_half * up_half, dn_half * dn_half);
    // up-start toggles U D U D U D U D U; the inner 2τ segments alternate
    let inner = |first: &ComplexMatrix2, second: &ComplexMatrix2, edge: &ComplexMatrix2| {
        let mut v = *edge;
        for k in 0..7usize {
            let seg = if k.is_multiple_of(2) { first } else { second };
            v = *seg * v;
        }
        *edge * v
    };
    let unit = ConditionalPair {
        v_up: inner(&dn_full, &up_full, &up_half),
        v_dn: inner(&up_full, &dn_full, &dn_half),
    };
    unit.power(n_pulses / 8)
}

/// `Re Tr(v_up · v_dn†) / 2`
pub fn dd_signal(pair: &ConditionalPair) -> f64 {
    0.5 * (pair.v_up * pair.v_dn.adjoint()).trace().re
}

const ANGLE_AGREEMENT_TOL: f64 = 1e-6;

pub fn effective_gate(pair: &ConditionalPair) -> Result<ConditionalGate> {
    let up = axis_angle_from_su2(&pair.v_up)?;
    let dn = axis_angle_from_su2(&pair.v_dn)?;
    if (up.angle - dn.angle).abs() > ANGLE_AGREEMENT_TOL {
        return Err(Error::AngleMismatch {
            up: up.angle,
            down: dn.angle,
        });
    }
    Ok(ConditionalGate {
        n_up: up.axis,
        n_dn: dn.axis,
        phi: up.angle,
    })
}
