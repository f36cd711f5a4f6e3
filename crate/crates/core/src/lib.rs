//! Simulation and design toolkit for electron-mediated control of a nuclear
//! spin register with periodic π-pulse (XY8) sequences.
//!
//! The electron is treated as a two-level spin in its rotating frame and each
//! nuclear spin couples to it through a parallel and a perpendicular hyperfine
//! term. Two evolution paths are provided: a fast conditional-unitary path for
//! π-pulse-only blocks ([`engine::toggling`]) and a brute-force joint
//! density-matrix propagator ([`engine::density`]) used as the reference.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod design;
pub mod engine;
pub mod error;
pub mod io;
pub mod optim;
pub mod program;
pub mod spectroscopy;
pub mod system;

pub use algebra::{AxisAngle, BlochVector, ComplexMatrix2, ComplexMatrixN, Vec3};
pub use error::{Error, Result};
pub use program::{Handedness, PulseElement, PulseProgram};
pub use system::{Branch, HyperfineCoupling, NuclearSpin, PrecessionField, SystemModel};
