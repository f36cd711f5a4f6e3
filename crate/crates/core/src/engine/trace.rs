//! Nuclear Bloch-sphere trajectories through a π-pulse block.

use serde::{Deserialize, Serialize};

use crate::algebra::{bloch_unchecked, precession, BlochVector, ComplexMatrix2, VALIDATION_TOL};
use crate::error::{invalid, Error, Result};
use crate::program::{PulseElement, PulseProgram};
use crate::system::{Branch, SystemModel};

use super::toggling::electron_rotation;

pub const DEFAULT_SAMPLES_PER_DELAY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub time_us: f64,
    /// Electron branch during the segment ending at this point.
    pub branch: Branch,
    pub bloch: BlochVector,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }
}

/// Trajectories for the electron starting in |↑⟩ and in |↓⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTrajectories {
    pub up: Trajectory,
    pub down: Trajectory,
}

/// Samples the Bloch vector of spin `label` at `samples_per_delay` evenly
/// spaced instants inside every non-empty delay, plus the initial point.
/// Points at pulse boundaries coincide with the end of the preceding delay.
pub fn bloch_trace(
    program: &PulseProgram,
    system: &SystemModel,
    label: &str,
    initial: BlochVector,
    samples_per_delay: usize,
) -> Result<BranchTrajectories> {
    if samples_per_delay == 0 {
        return Err(invalid("samples_per_delay", "must be at least 1"));
    }
    if initial.norm() > 1.0 + VALIDATION_TOL {
        return Err(invalid("initial", "Bloch vector norm exceeds 1"));
    }
    let spin = system.spin(label)?;
    for (index, element) in program.elements.iter().enumerate() {
        match *element {
            PulseElement::ElectronRotation { phase, angle } => {
                if electron_rotation(phase, angle).m[0][0].norm() > 1e-12 {
                    return Err(Error::FastPathUnsupported {
                        index,
                        reason: "only π rotations are allowed in a traced block".into(),
                    });
                }
            }
            PulseElement::Delay { duration_us } if !(duration_us.is_finite() && duration_us >= 0.0) => {
                return Err(Error::FastPathUnsupported {
                    index,
                    reason: format!("invalid delay {duration_us}"),
                });
            }
            PulseElement::Delay { .. } => {}
            _ => {
                return Err(Error::FastPathUnsupported {
                    index,
                    reason: "resets and readouts cannot be traced".into(),
                })
            }
        }
    }
    let rho0 = ComplexMatrix2::from_bloch(&initial);
    let run = |start: Branch| {
        let mut branch = start;
        let mut t = 0.0;
        let mut rho = rho0;
        let mut points = vec![TrajectoryPoint {
            time_us: 0.0,
            branch,
            bloch: initial,
        }];
        for element in &program.elements {
            match *element {
                PulseElement::Delay { duration_us } if duration_us > 0.0 => {
                    let field = spin.hyperfine.field(system.f_larmor, branch).0;
                    let dt = duration_us / samples_per_delay as f64;
                    let step = precession(&field, dt);
                    for k in 1..=samples_per_delay {
                        rho = step.conjugate(&rho);
                        points.push(TrajectoryPoint {
                            time_us: t + k as f64 * dt,
                            branch,
                            bloch: bloch_unchecked(&rho),
                        });
                    }
                    t += duration_us;
                }
                PulseElement::ElectronRotation { .. } => branch = branch.flipped(),
                _ => {}
            }
        }
        Trajectory { points }
    };
    Ok(BranchTrajectories {
        up: run(Branch::Up),
        down: run(Branch::Down),
    })
}
