//! Pulse timelines: XY8 blocks and the composite sequences built from them.
//!
//! Timing follows the `τ, π, 2τ, π, …, π, τ` convention, so consecutive
//! π-pulses are `2τ` apart and an `N`-pulse block lasts `2Nτ`. Pulses are
//! instantaneous.
//!
//! Nuclear initialization uses two conditional XY8 blocks separated by an
//! electron π/2 pulse:
//!
//! ```text
//! reset(prep) · π/2(X) · XY8(N, τ) · π/2(±Y) · XY8(N, τ) · reset(up)
//! ```
//!
//! A single conditional block sandwiched by electron rotations and followed by
//! an electron reset is a unital map on the nucleus and cannot polarize it, so
//! the second block is required. The sign of the middle pulse
//! ([`Handedness`]) selects which side of the resonance the transfer works on.
//! Readout is the element-wise reverse of initialization, with the trailing
//! reset replaced by a readout marker.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Diagnostic, Error, Result};
use crate::system::Branch;

/// Electron rotation phase for an X pulse.
pub const PHASE_X: f64 = 0.0;
/// Electron rotation phase for a Y pulse.
pub const PHASE_Y: f64 = FRAC_PI_2;

const XY8_PHASES: [f64; 8] = [PHASE_X, PHASE_Y, PHASE_X, PHASE_Y, PHASE_Y, PHASE_X, PHASE_Y, PHASE_X];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseElement {
    /// Instantaneous rotation about the equatorial axis at `phase` from +X.
    ElectronRotation { phase: f64, angle: f64 },
    Delay { duration_us: f64 },
    /// Trace out the electron and re-prepare it in `target`.
    ElectronReset { target: Branch },
    /// Record the electron |↓⟩ population.
    ReadoutMarker,
}

impl PulseElement {
    pub fn pi(phase: f64) -> Self {
        PulseElement::ElectronRotation { phase, angle: PI }
    }

    pub fn half_pi(phase: f64) -> Self {
        PulseElement::ElectronRotation {
            phase,
            angle: FRAC_PI_2,
        }
    }

    pub fn delay(duration_us: f64) -> Self {
        PulseElement::Delay { duration_us }
    }

    pub fn duration(&self) -> f64 {
        match self {
            PulseElement::Delay { duration_us } => *duration_us,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    /// Middle π/2 pulse about +Y.
    #[default]
    Positive,
    /// Middle π/2 pulse about −Y.
    Negative,
}

impl Handedness {
    pub fn middle_phase(self) -> f64 {
        match self {
            Handedness::Positive => PHASE_Y,
            Handedness::Negative => -PHASE_Y,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Handedness::Positive => "positive",
            Handedness::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseProgram {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub elements: Vec<PulseElement>,
}

impl PulseProgram {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn with_parameter(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn push(&mut self, element: PulseElement) -> &mut Self {
        self.elements.push(element);
        self
    }

    pub fn append(&mut self, other: &PulseProgram) -> &mut Self {
        self.elements.extend_from_slice(&other.elements);
        self
    }

    /// Sum of delay durations, µs.
    pub fn duration(&self) -> f64 {
        self.elements.iter().map(PulseElement::duration).sum()
    }

    /// Number of electron rotations of any angle.
    pub fn rotation_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, PulseElement::ElectronRotation { .. }))
            .count()
    }

    /// Number of electron rotations by π.
    pub fn pi_pulse_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, PulseElement::ElectronRotation { angle, .. } if (angle - PI).abs() < 1e-12))
            .count()
    }

    pub fn readout_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, PulseElement::ReadoutMarker))
            .count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(invalid("tau", format!("must be finite and non-negative, got {tau}")));
    }
    Ok(())
}

fn check_xy8_count(n_pulses: usize) -> Result<()> {
    if n_pulses == 0 || !n_pulses.is_multiple_of(8) {
        return Err(invalid(
            "n_pulses",
            format!("must be a positive multiple of 8, got {n_pulses}"),
        ));
    }
    Ok(())
}

fn xy8_elements(n_pulses: usize, tau: f64) -> Vec<PulseElement> {
    let mut out = Vec::with_capacity(2 * n_pulses + 1);
    out.push(PulseElement::delay(tau));
    for i in 0..n_pulses {
        out.push(PulseElement::pi(XY8_PHASES[i % 8]));
        let gap = if i + 1 == n_pulses { tau } else { 2.0 * tau };
        out.push(PulseElement::delay(gap));
    }
    out
}

pub fn build_xy8_block(n_pulses: usize, tau: f64) -> Result<PulseProgram> {
    check_xy8_count(n_pulses)?;
    check_tau(tau)?;
    let mut p = PulseProgram::new("xy8")
        .with_parameter("n_pulses", n_pulses as f64)
        .with_parameter("tau_us", tau);
    p.elements = xy8_elements(n_pulses, tau);
    Ok(p)
}

/// `reset(up) · π/2(X) · XY8(N, τ) · π/2(X) · readout`
pub fn build_spectroscopy(n_pulses: usize, tau: f64) -> Result<PulseProgram> {
    let block = build_xy8_block(n_pulses, tau)?;
    let mut p = PulseProgram::new("spectroscopy")
        .with_parameter("n_pulses", n_pulses as f64)
        .with_parameter("tau_us", tau);
    p.push(PulseElement::ElectronReset { target: Branch::Up })
        .push(PulseElement::half_pi(PHASE_X))
        .append(&block)
        .push(PulseElement::half_pi(PHASE_X))
        .push(PulseElement::ReadoutMarker);
    Ok(p)
}

/// Polarization transfer leaving the nucleus in |↓⟩ for `electron_prep = Up`
/// and |↑⟩ for `Down`, with the electron re-initialized in |↑⟩.
pub fn build_nuclear_init(
    tau: f64,
    n_pulses: usize,
    electron_prep: Branch,
    handedness: Handedness,
) -> Result<PulseProgram> {
    let block = build_xy8_block(n_pulses, tau)?;
    let mut p = PulseProgram::new("nuclear_init")
        .with_parameter("tau_us", tau)
        .with_parameter("n_pulses", n_pulses as f64);
    p.push(PulseElement::ElectronReset {
        target: electron_prep,
    })
    .push(PulseElement::half_pi(PHASE_X))
    .append(&block)
    .push(PulseElement::half_pi(handedness.middle_phase()))
    .append(&block)
    .push(PulseElement::ElectronReset { target: Branch::Up });
    Ok(p)
}

/// Maps the nuclear |↓⟩ (|↑⟩) population onto a high (low) electron |↓⟩
/// population at the readout marker.
pub fn build_nuclear_readout(tau: f64, n_pulses: usize, handedness: Handedness) -> Result<PulseProgram> {
    let init = build_nuclear_init(tau, n_pulses, Branch::Up, handedness)?;
    let mut elements: Vec<PulseElement> = init.elements.into_iter().rev().collect();
    if let Some(last) = elements.last_mut() {
        *last = PulseElement::ReadoutMarker;
    }
    Ok(PulseProgram {
        name: "nuclear_readout".into(),
        parameters: init.parameters,
        elements,
    })
}

/// Timing parameters shared by the Rabi, Ramsey and echo experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub tau_init_us: f64,
    pub n_init: usize,
    pub tau_prime_us: f64,
    pub handedness: Handedness,
}

impl Default for Timings {
    fn default() -> Self {
        Self {
            tau_init_us: 1.569,
            n_init: 16,
            tau_prime_us: 1.578,
            handedness: Handedness::Positive,
        }
    }
}

fn wrap_with_init_readout(name: &str, t: &Timings, body: &PulseProgram) -> Result<PulseProgram> {
    let init = build_nuclear_init(t.tau_init_us, t.n_init, Branch::Up, t.handedness)?;
    let read = build_nuclear_readout(t.tau_init_us, t.n_init, t.handedness)?;
    let mut p = PulseProgram::new(name)
        .with_parameter("tau_init_us", t.tau_init_us)
        .with_parameter("n_init", t.n_init as f64)
        .with_parameter("tau_prime_us", t.tau_prime_us);
    p.append(&init).append(body).append(&read);
    Ok(p)
}

/// `init · XY8(N′, τ′) · read`; `n_prime = 0` gives init directly followed by read.
pub fn build_rabi(n_prime: usize, timings: &Timings) -> Result<PulseProgram> {
    let body = if n_prime == 0 {
        check_tau(timings.tau_prime_us)?;
        PulseProgram::default()
    } else {
        build_xy8_block(n_prime, timings.tau_prime_us)?
    };
    let p = wrap_with_init_readout("rabi", timings, &body)?;
    Ok(p.with_parameter("n_prime", n_prime as f64))
}

/// `init · XY8(8, τ′) · reset(branch) · delay(T) · XY8(8, τ′) · read`
pub fn build_ramsey(t_wait: f64, branch: Branch, timings: &Timings) -> Result<PulseProgram> {
    if !(t_wait.is_finite() && t_wait >= 0.0) {
        return Err(invalid("t_wait", format!("must be non-negative, got {t_wait}")));
    }
    let half = build_xy8_block(8, timings.tau_prime_us)?;
    let mut body = PulseProgram::default();
    body.append(&half)
        .push(PulseElement::ElectronReset { target: branch })
        .push(PulseElement::delay(t_wait))
        .append(&half);
    let p = wrap_with_init_readout("ramsey", timings, &body)?;
    Ok(p.with_parameter("t_wait_us", t_wait))
}

/// `init · XY8(8, τ′) · delay(T/2) · XY8(16, τ′) · delay(T/2) · XY8(8, τ′) · read`
pub fn build_echo(t_total: f64, timings: &Timings) -> Result<PulseProgram> {
    if !(t_total.is_finite() && t_total >= 0.0) {
        return Err(invalid("t_total", format!("must be non-negative, got {t_total}")));
    }
    let half = build_xy8_block(8, timings.tau_prime_us)?;
    let full = build_xy8_block(16, timings.tau_prime_us)?;
    let mut body = PulseProgram::default();
    body.append(&half)
        .push(PulseElement::delay(0.5 * t_total))
        .append(&full)
        .push(PulseElement::delay(0.5 * t_total))
        .append(&half);
    let p = wrap_with_init_readout("echo", timings, &body)?;
    Ok(p.with_parameter("t_total_us", t_total))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgramSummary {
    pub duration_us: f64,
    pub pulse_count: usize,
    pub readout_count: usize,
}

/// Checks delays are finite and non-negative, rotations finite, and that each
/// readout marker is either last or followed (after any delays) by a reset.
pub fn validate_program(p: &PulseProgram) -> Result<ProgramSummary> {
    let mut diagnostics = Vec::new();
    let mut open_marker: Option<usize> = None;
    for (index, element) in p.elements.iter().enumerate() {
        match *element {
            PulseElement::Delay { duration_us } => {
                if !duration_us.is_finite() {
                    diagnostics.push(Diagnostic {
                        index,
                        message: "delay duration is not finite".into(),
                    });
                } else if duration_us < 0.0 {
                    diagnostics.push(Diagnostic {
                        index,
                        message: format!("negative delay {duration_us} µs"),
                    });
                }
            }
            PulseElement::ElectronRotation { phase, angle } => {
                if !(phase.is_finite() && angle.is_finite()) {
                    diagnostics.push(Diagnostic {
                        index,
                        message: "rotation phase or angle is not finite".into(),
                    });
                }
                if let Some(marker) = open_marker.take() {
                    diagnostics.push(Diagnostic {
                        index: marker,
                        message: "readout marker is followed by a rotation before any reset".into(),
                    });
                }
            }
            PulseElement::ElectronReset { .. } => open_marker = None,
            PulseElement::ReadoutMarker => {
                if let Some(marker) = open_marker.replace(index) {
                    diagnostics.push(Diagnostic {
                        index: marker,
                        message: "consecutive readout markers without a reset".into(),
                    });
                }
            }
        }
    }
    if diagnostics.is_empty() {
        Ok(ProgramSummary {
            duration_us: p.duration(),
            pulse_count: p.rotation_count(),
            readout_count: p.readout_count(),
        })
    } else {
        Err(Error::InvalidProgram(diagnostics))
    }
}
