//! Exact small-dimension spin algebra: SU(2) rotations and their axis-angle
//! form, tensor products, and density-operator helpers.

mod dense;
mod su2;

pub use dense::{embed, kron, kron_n, ComplexMatrixN};
pub use su2::{
    axis_angle_from_su2, bloch_from_density, precession, su2_from_axis_angle, AxisAngle,
    BlochVector, ComplexMatrix2, Vec3, IDENTITY_ANGLE_TOL, VALIDATION_TOL,
};

pub(crate) use su2::{bloch_unchecked, rotation_unchecked};
