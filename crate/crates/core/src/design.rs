//! Timing searches and figure-level curves: initialization fidelity scans,
//! Rabi, Ramsey and echo experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::density::{evolve_density, initial_state};
use crate::engine::toggling::{conditional_unitaries, effective_gate, ConditionalGate};
use crate::error::{invalid, Result};
use crate::optim::parabolic_vertex;
use crate::program::{
    build_echo, build_nuclear_init, build_nuclear_readout, build_rabi, build_ramsey, build_xy8_block, Handedness,
    PulseProgram, Timings,
};
use crate::system::{Branch, SystemModel};

fn target_label(system: &SystemModel) -> Result<&str> {
    system
        .spins()
        .first()
        .map(|s| s.label.as_str())
        .ok_or_else(|| invalid("system", "needs at least one nuclear spin"))
}

/// Population of the intended nuclear state of the first (target) spin after
/// the initialization sequence: |↓⟩ for `electron_prep = Up`, |↑⟩ for `Down`.
pub fn init_fidelity(
    tau: f64,
    n_pulses: usize,
    system: &SystemModel,
    electron_prep: Branch,
    handedness: Handedness,
) -> Result<f64> {
    target_label(system)?;
    let program = build_nuclear_init(tau, n_pulses, electron_prep, handedness)?;
    let out = evolve_density(&program, &initial_state(system, Branch::Up), system)?;
    let nuc = out.rho.reduced_qubit(1);
    let wanted = electron_prep.flipped().index();
    Ok(nuc.m[wanted][wanted].re.clamp(0.0, 1.0))
}

/// Electron |↓⟩ population after initialization immediately followed by readout.
pub fn init_readout_p_down(
    tau: f64,
    n_pulses: usize,
    system: &SystemModel,
    electron_prep: Branch,
    handedness: Handedness,
) -> Result<f64> {
    let mut program = build_nuclear_init(tau, n_pulses, electron_prep, handedness)?;
    program.append(&build_nuclear_readout(tau, n_pulses, handedness)?);
    single_readout(&program, system)
}

fn single_readout(program: &PulseProgram, system: &SystemModel) -> Result<f64> {
    let out = evolve_density(program, &initial_state(system, Branch::Up), system)?;
    out.readouts
        .first()
        .copied()
        .ok_or_else(|| invalid("program", "contains no readout marker"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityPair {
    /// Fidelity of preparing nuclear |↓⟩ (electron prepared in |↑⟩).
    pub down: f64,
    /// Fidelity of preparing nuclear |↑⟩ (electron prepared in |↓⟩).
    pub up: f64,
}

impl FidelityPair {
    pub fn worst(&self) -> f64 {
        self.down.min(self.up)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub tau_us: f64,
    pub positive: FidelityPair,
    pub negative: FidelityPair,
}

impl ScanPoint {
    /// Better handedness at this τ; ties go to `Positive`.
    pub fn best(&self) -> (Handedness, FidelityPair) {
        if self.negative.worst() > self.positive.worst() {
            (Handedness::Negative, self.negative)
        } else {
            (Handedness::Positive, self.positive)
        }
    }

    pub fn score(&self) -> f64 {
        self.best().1.worst()
    }

    fn pair(&self, h: Handedness) -> FidelityPair {
        match h {
            Handedness::Positive => self.positive,
            Handedness::Negative => self.negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub tau_opt_us: f64,
    pub handedness: Handedness,
    pub fidelity_down: f64,
    pub fidelity_up: f64,
    /// Conditional gate of one XY8 block at `tau_opt_us` on the target spin.
    pub gate: ConditionalGate,
    pub scan: Vec<ScanPoint>,
}

fn fidelity_pair(tau: f64, n_pulses: usize, system: &SystemModel, h: Handedness) -> Result<FidelityPair> {
    Ok(FidelityPair {
        down: init_fidelity(tau, n_pulses, system, Branch::Up, h)?,
        up: init_fidelity(tau, n_pulses, system, Branch::Down, h)?,
    })
}

fn scan_point(tau: f64, n_pulses: usize, system: &SystemModel) -> Result<ScanPoint> {
    Ok(ScanPoint {
        tau_us: tau,
        positive: fidelity_pair(tau, n_pulses, system, Handedness::Positive)?,
        negative: fidelity_pair(tau, n_pulses, system, Handedness::Negative)?,
    })
}

/// Evaluates both electron preparations and both handednesses on an even τ
/// grid and picks the τ maximizing the worse of the two preparation
/// fidelities (lowest τ on ties), refined by a parabola through the best
/// grid point and its neighbours.
pub fn scan_init_tau(window: (f64, f64), steps: usize, n_pulses: usize, system: &SystemModel) -> Result<DesignReport> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
        return Err(invalid("window", format!("[{lo}, {hi}] must be a positive interval")));
    }
    let label = target_label(system)?;
    let taus: Vec<f64> = if hi == lo {
        vec![lo]
    } else {
        if steps < 3 {
            return Err(invalid("steps", format!("must be at least 3, got {steps}")));
        }
        (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect()
    };
    let scan = taus
        .par_iter()
        .map(|&tau| scan_point(tau, n_pulses, system))
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, p) in scan.iter().enumerate() {
        if p.score() > scan[best].score() {
            best = i;
        }
    }
    let (handedness, mut pair) = scan[best].best();
    let mut tau_opt = scan[best].tau_us;
    if best > 0 && best + 1 < scan.len() {
        let xs = [scan[best - 1].tau_us, scan[best].tau_us, scan[best + 1].tau_us];
        let ys = [best - 1, best, best + 1].map(|i| scan[i].pair(handedness).worst());
        if let Some(v) = parabolic_vertex(xs, ys) {
            let v = v.clamp(xs[0], xs[2]);
            let refined = fidelity_pair(v, n_pulses, system, handedness)?;
            if refined.worst() > pair.worst() {
                tau_opt = v;
                pair = refined;
            }
        }
    }
    let block = build_xy8_block(n_pulses, tau_opt)?;
    let gate = effective_gate(&conditional_unitaries(&block, system, label)?)?;
    Ok(DesignReport {
        tau_opt_us: tau_opt,
        handedness,
        fidelity_down: pair.down,
        fidelity_up: pair.up,
        gate,
        scan,
    })
}

/// Gate of one eight-pulse XY8 unit at τ′ on the target spin.
pub fn per_block_gate(tau_prime: f64, system: &SystemModel) -> Result<ConditionalGate> {
    let label = target_label(system)?;
    effective_gate(&conditional_unitaries(&build_xy8_block(8, tau_prime)?, system, label)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiPoint {
    pub n_prime: usize,
    pub p_down: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t_us: f64,
    pub p_down: f64,
}

pub fn rabi_curve(n_primes: &[usize], timings: &Timings, system: &SystemModel) -> Result<Vec<RabiPoint>> {
    n_primes
        .par_iter()
        .map(|&n| {
            Ok(RabiPoint {
                n_prime: n,
                p_down: single_readout(&build_rabi(n, timings)?, system)?,
            })
        })
        .collect()
}

fn check_times(t_grid: &[f64]) -> Result<()> {
    if let Some(bad) = t_grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(invalid("t_grid", format!("values must be non-negative, found {bad}")));
    }
    if let Some(i) = t_grid.windows(2).position(|w| w[1] < w[0]) {
        return Err(invalid("t_grid", format!("not sorted at index {}", i + 1)));
    }
    Ok(())
}

pub fn ramsey_curve(t_grid: &[f64], branch: Branch, system: &SystemModel, timings: &Timings) -> Result<Vec<CurvePoint>> {
    check_times(t_grid)?;
    t_grid
        .par_iter()
        .map(|&t| {
            Ok(CurvePoint {
                t_us: t,
                p_down: single_readout(&build_ramsey(t, branch, timings)?, system)?,
            })
        })
        .collect()
}

pub fn echo_curve(t_grid: &[f64], system: &SystemModel, timings: &Timings) -> Result<Vec<CurvePoint>> {
    check_times(t_grid)?;
    t_grid
        .par_iter()
        .map(|&t| {
            Ok(CurvePoint {
                t_us: t,
                p_down: single_readout(&build_echo(t, timings)?, system)?,
            })
        })
        .collect()
}
