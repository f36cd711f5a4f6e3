//! Electron–nuclear register model in the electron rotating frame.
//!
//! Each nuclear spin sees the Hamiltonian (in units of 2π·MHz)
//!
//! ```text
//! H = f_L·Sz_nuc + Sz_e·(A∥·Sz_nuc + A⊥·Sx_nuc)
//! ```
//!
//! so, with the electron in a definite branch, the nucleus precesses about the
//! frequency vector `(±A⊥/2, 0, f_L ± A∥/2)`. The `+` sign belongs to the
//! electron |↑⟩ branch (m_s = +1/2).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::algebra::Vec3;
use crate::error::{invalid, Error, Result};

/// ¹³C gyromagnetic ratio in MHz/T.
pub const C13_GYROMAGNETIC_MHZ_PER_T: f64 = 10.7084;
/// Static field of the reference experiment.
pub const REFERENCE_B_FIELD_T: f64 = 0.13;
/// Electron spin splitting of the reference experiment (informational).
pub const REFERENCE_ELECTRON_SPLITTING_GHZ: f64 = 3.42;
/// Larmor frequency placing the k = 4 resonance at τ′ = 1.578 µs.
pub const REFERENCE_F_LARMOR_MHZ: f64 = 1.4158;
/// Hyperfine couplings of the target ¹³C spin.
pub const TARGET_COUPLING: HyperfineCoupling = HyperfineCoupling {
    a_par: 0.11,
    a_perp: 0.33,
};
/// Placeholder second spin with weaker couplings. Its true values are not
/// known; any result that includes it is model-dependent.
pub const PARASITIC_PLACEHOLDER: HyperfineCoupling = HyperfineCoupling {
    a_par: 0.05,
    a_perp: 0.15,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Up,
    Down,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Up => 1.0,
            Branch::Down => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Branch::Up => Branch::Down,
            Branch::Down => Branch::Up,
        }
    }

    /// Basis index: |↑⟩ = 0, |↓⟩ = 1.
    pub fn index(self) -> usize {
        match self {
            Branch::Up => 0,
            Branch::Down => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Up => "up",
            Branch::Down => "down",
        }
    }
}

/// Parallel and perpendicular hyperfine components in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperfineCoupling {
    pub a_par: f64,
    pub a_perp: f64,
}

impl HyperfineCoupling {
    pub fn new(a_par: f64, a_perp: f64) -> Result<Self> {
        if !a_par.is_finite() {
            return Err(invalid("a_par", "must be finite"));
        }
        if !a_perp.is_finite() || a_perp < 0.0 {
            return Err(invalid("a_perp", "must be finite and non-negative"));
        }
        Ok(Self { a_par, a_perp })
    }

    /// Nuclear precession vector for the given electron branch.
    pub fn field(&self, f_larmor: f64, branch: Branch) -> PrecessionField {
        let s = branch.sign();
        PrecessionField(Vec3::new(
            s * 0.5 * self.a_perp,
            0.0,
            f_larmor + s * 0.5 * self.a_par,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearSpin {
    pub label: String,
    pub hyperfine: HyperfineCoupling,
}

impl NuclearSpin {
    pub fn new(label: impl Into<String>, hyperfine: HyperfineCoupling) -> Self {
        Self {
            label: label.into(),
            hyperfine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    /// Nuclear Larmor frequency, MHz.
    pub f_larmor: f64,
    /// Electron splitting in GHz; carried for provenance, unused by the dynamics.
    pub electron_splitting_ghz: f64,
    pub b_field_t: f64,
    pub gyromagnetic_mhz_per_t: f64,
    spins: Vec<NuclearSpin>,
}

impl SystemModel {
    pub fn new(f_larmor: f64, spins: Vec<NuclearSpin>) -> Result<Self> {
        if !(f_larmor.is_finite() && f_larmor > 0.0) {
            return Err(invalid("f_larmor", format!("must be positive, got {f_larmor}")));
        }
        let mut seen = HashSet::new();
        for spin in &spins {
            if !seen.insert(spin.label.as_str()) {
                return Err(invalid("spins", format!("duplicate label `{}`", spin.label)));
            }
            HyperfineCoupling::new(spin.hyperfine.a_par, spin.hyperfine.a_perp)?;
        }
        Ok(Self {
            f_larmor,
            electron_splitting_ghz: REFERENCE_ELECTRON_SPLITTING_GHZ,
            b_field_t: REFERENCE_B_FIELD_T,
            gyromagnetic_mhz_per_t: C13_GYROMAGNETIC_MHZ_PER_T,
            spins,
        })
    }

    /// Builds the model with `f_L = γ·B`.
    pub fn from_field(b_field_t: f64, gyromagnetic: f64, spins: Vec<NuclearSpin>) -> Result<Self> {
        let f_larmor = larmor_frequency(b_field_t, gyromagnetic)?;
        let mut model = Self::new(f_larmor, spins)?;
        model.b_field_t = b_field_t;
        model.gyromagnetic_mhz_per_t = gyromagnetic;
        Ok(model)
    }

    /// Single target spin with the reference couplings at `f_larmor`.
    pub fn reference(f_larmor: f64) -> Self {
        Self::new(f_larmor, vec![NuclearSpin::new("target", TARGET_COUPLING)])
            .expect("reference parameters are valid")
    }

    /// Target spin plus the placeholder parasitic spin.
    pub fn reference_with_parasitic(f_larmor: f64) -> Self {
        Self::reference(f_larmor)
            .with_spin(NuclearSpin::new("parasitic", PARASITIC_PLACEHOLDER))
            .expect("labels are distinct")
    }

    pub fn with_spin(mut self, spin: NuclearSpin) -> Result<Self> {
        let mut spins = std::mem::take(&mut self.spins);
        spins.push(spin);
        let mut out = Self::new(self.f_larmor, spins)?;
        out.electron_splitting_ghz = self.electron_splitting_ghz;
        out.b_field_t = self.b_field_t;
        out.gyromagnetic_mhz_per_t = self.gyromagnetic_mhz_per_t;
        Ok(out)
    }

    pub fn with_f_larmor(&self, f_larmor: f64) -> Result<Self> {
        let mut out = Self::new(f_larmor, self.spins.clone())?;
        out.electron_splitting_ghz = self.electron_splitting_ghz;
        out.b_field_t = self.b_field_t;
        out.gyromagnetic_mhz_per_t = self.gyromagnetic_mhz_per_t;
        Ok(out)
    }

    pub fn spins(&self) -> &[NuclearSpin] {
        &self.spins
    }

    pub fn n_spins(&self) -> usize {
        self.spins.len()
    }

    pub fn spin_index(&self, label: &str) -> Result<usize> {
        self.spins
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownSpin(label.to_string()))
    }

    pub fn spin(&self, label: &str) -> Result<&NuclearSpin> {
        self.spin_index(label).map(|i| &self.spins[i])
    }

    /// `γ·B` for this model's field, used to disambiguate fits.
    pub fn field_larmor(&self) -> f64 {
        self.gyromagnetic_mhz_per_t * self.b_field_t
    }
}

/// Frequency vector (MHz) about which the nucleus precesses at rate `2π|f|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecessionField(pub Vec3);

impl PrecessionField {
    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }
}

/// `f_L = γ·B` in MHz.
pub fn larmor_frequency(b_field_t: f64, gyromagnetic_mhz_per_t: f64) -> Result<f64> {
    if !(b_field_t.is_finite() && b_field_t >= 0.0) {
        return Err(invalid("b_field", format!("must be non-negative, got {b_field_t}")));
    }
    if !gyromagnetic_mhz_per_t.is_finite() {
        return Err(invalid("gyromagnetic", "must be finite"));
    }
    Ok(b_field_t * gyromagnetic_mhz_per_t)
}

pub fn conditional_field(system: &SystemModel, label: &str, branch: Branch) -> Result<PrecessionField> {
    let spin = system.spin(label)?;
    Ok(spin.hyperfine.field(system.f_larmor, branch))
}

/// Inter-pulse time (µs) of the k-th resonance,
/// `τ = (2k+1)/(4 f_L) · [1 − A⊥²/(8 f_L²)]`.
pub fn resonance_tau(k: u32, f_larmor: f64, a_perp: f64) -> Result<f64> {
    if !(f_larmor.is_finite() && f_larmor > 0.0) {
        return Err(invalid("f_larmor", format!("must be positive, got {f_larmor}")));
    }
    let order = (2 * k + 1) as f64;
    Ok(order / (4.0 * f_larmor) * (1.0 - a_perp * a_perp / (8.0 * f_larmor * f_larmor)))
}

/// Inverts [`resonance_tau`] for `f_L` by bisection.
///
/// The formula is monotone only for `f_L > √(3/8)·A⊥`; the root is searched
/// above that bound.
pub fn larmor_from_resonance(tau: f64, k: u32, a_perp: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid("tau", format!("must be positive, got {tau}")));
    }
    let floor = (3.0f64 / 8.0).sqrt() * a_perp;
    let mut lo = floor.max(1e-9) * (1.0 + 1e-12);
    let mut hi = lo.max(1.0);
    let f = |x: f64| resonance_tau(k, x, a_perp).map(|t| t - tau);
    if f(lo)? < 0.0 {
        return Err(invalid("tau", "longer than any reachable resonance for this A⊥"));
    }
    while f(hi)? > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Free-precession frequencies `√((f_L ± A∥/2)² + (A⊥/2)²)` for the
/// up and down electron branches.
pub fn ramsey_frequencies(f_larmor: f64, hf: &HyperfineCoupling) -> Result<(f64, f64)> {
    if !(f_larmor.is_finite() && f_larmor > 0.0) {
        return Err(invalid("f_larmor", format!("must be positive, got {f_larmor}")));
    }
    let up = hf.field(f_larmor, Branch::Up).magnitude();
    let down = hf.field(f_larmor, Branch::Down).magnitude();
    Ok((up, down))
}
