use std::ops::{Add, Mul, Sub};

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance used when validating caller-supplied operators and axes.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Below this rotation angle the axis is undefined and reported as +z.
pub const IDENTITY_ANGLE_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2x2 complex matrix acting on a single spin-1/2.
///
/// Basis order is index 0 = |↑⟩, index 1 = |↓⟩, so `σz|↑⟩ = +|↑⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2 {
    pub m: [[Complex64; 2]; 2],
}

impl ComplexMatrix2 {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub const fn identity() -> Self {
        Self::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn zero() -> Self {
        Self::new([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn pauli_x() -> Self {
        Self::new([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Self::new([[ZERO, -I], [I, ZERO]])
    }

    pub const fn pauli_z() -> Self {
        Self::new([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]])
    }

    pub fn paulis() -> [Self; 3] {
        [Self::pauli_x(), Self::pauli_y(), Self::pauli_z()]
    }

    /// Projector onto |↑⟩ (index 0) or |↓⟩ (index 1).
    pub fn projector(index: usize) -> Self {
        let mut out = Self::zero();
        out.m[index][index] = ONE;
        out
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Self::new([[a, ZERO], [ZERO, d]])
    }

    /// Density operator of the pure state `alpha|↑⟩ + beta|↓⟩`.
    pub fn pure_state(alpha: Complex64, beta: Complex64) -> Self {
        let amps = [alpha, beta];
        let mut out = Self::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] = amps[r] * amps[c].conj();
            }
        }
        out
    }

    /// Density operator with the given Bloch vector, `(I + r·σ)/2`.
    pub fn from_bloch(r: &BlochVector) -> Self {
        let [sx, sy, sz] = Self::paulis();
        (Self::identity() + sx.scale(r.x) + sy.scale(r.y) + sz.scale(r.z)).scale(0.5)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_c(Complex64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `self · rho · self†`
    pub fn conjugate(&self, rho: &Self) -> Self {
        *self * *rho * self.adjoint()
    }

    /// Distance to `other` after removing the best global phase.
    pub fn phase_insensitive_distance(&self, other: &Self) -> f64 {
        let overlap = (other.adjoint() * *self).trace();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        self.max_abs_diff(&other.scale_c(phase))
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] += rhs.m[r][c];
            }
        }
        out
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(-1.0)
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Self::new([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Canonical axis-angle form of a 2x2 unitary,
/// `U = e^{i·global_phase} · exp(−i·angle·(axis·σ)/2)` with `angle ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle {
    pub axis: [f64; 3],
    pub angle: f64,
    pub global_phase: f64,
}

impl AxisAngle {
    pub fn axis_vec(&self) -> Vec3 {
        Vec3::from(self.axis)
    }
}

/// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of a spin-1/2 state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const UP: Self = Self::new(0.0, 0.0, 1.0);
    pub const DOWN: Self = Self::new(0.0, 0.0, -1.0);
    pub const MIXED: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        self.as_vec().norm()
    }

    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }
}

fn check_unit(axis: &Vec3) -> Result<()> {
    let norm = axis.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > VALIDATION_TOL {
        return Err(Error::NonUnitAxis { norm });
    }
    Ok(())
}

/// `exp(−i·angle·(axis·σ)/2)` in closed (Rodrigues) form.
pub fn su2_from_axis_angle(axis: &Vec3, angle: f64) -> Result<ComplexMatrix2> {
    check_unit(axis)?;
    if !angle.is_finite() {
        return Err(crate::error::invalid("angle", "must be finite"));
    }
    Ok(rotation_unchecked(axis, angle))
}

pub(crate) fn rotation_unchecked(n: &Vec3, angle: f64) -> ComplexMatrix2 {
    let (s, c) = (0.5 * angle).sin_cos();
    // c·I − i·s·(n·σ)
    ComplexMatrix2::new([
        [Complex64::new(c, -s * n.z), Complex64::new(-s * n.y, -s * n.x)],
        [Complex64::new(s * n.y, -s * n.x), Complex64::new(c, s * n.z)],
    ])
}

/// Free precession for `t_us` microseconds in a frequency field `field_mhz`:
/// `exp(−i·2π·t·(f·σ)/2)`. A zero field gives the identity.
pub fn precession(field_mhz: &Vec3, t_us: f64) -> ComplexMatrix2 {
    let magnitude = field_mhz.norm();
    if magnitude == 0.0 {
        return ComplexMatrix2::identity();
    }
    rotation_unchecked(
        &(field_mhz / magnitude),
        2.0 * std::f64::consts::PI * magnitude * t_us,
    )
}

/// Inverse of [`su2_from_axis_angle`], up to a global phase.
pub fn axis_angle_from_su2(u: &ComplexMatrix2) -> Result<AxisAngle> {
    let deviation = u.unitarity_error();
    if !(deviation <= VALIDATION_TOL) {
        return Err(Error::NotUnitary { deviation });
    }
    let mut phase = 0.5 * u.det().arg();
    let v = u.scale_c(Complex64::from_polar(1.0, -phase));
    let mut a = 0.5 * v.trace().re;
    let mut b = Vec3::from_fn(|k, _| -0.5 * (v * ComplexMatrix2::paulis()[k]).trace().im);
    if a < 0.0 {
        a = -a;
        b = -b;
        phase += std::f64::consts::PI;
    }
    let s = b.norm();
    let angle = 2.0 * s.atan2(a);
    let axis = if angle < IDENTITY_ANGLE_TOL {
        Vec3::z()
    } else {
        b / s
    };
    Ok(AxisAngle {
        axis: [axis.x, axis.y, axis.z],
        angle,
        global_phase: wrap_phase(phase),
    })
}

fn wrap_phase(phase: f64) -> f64 {
    use std::f64::consts::PI;
    let wrapped = (phase + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

/// Bloch vector `Tr(ρσ_i)` of a single-spin density operator.
pub fn bloch_from_density(rho: &ComplexMatrix2) -> Result<BlochVector> {
    let deviation = rho.hermiticity_error();
    if !(deviation <= VALIDATION_TOL) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(bloch_unchecked(rho))
}

pub(crate) fn bloch_unchecked(rho: &ComplexMatrix2) -> BlochVector {
    let [sx, sy, sz] = ComplexMatrix2::paulis();
    BlochVector::new(
        (*rho * sx).trace().re,
        (*rho * sy).trace().re,
        (*rho * sz).trace().re,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Truncated Taylor series of `exp(M)`; independent of the closed form.
    fn taylor_exp(m: &ComplexMatrix2, terms: usize) -> ComplexMatrix2 {
        let mut sum = ComplexMatrix2::identity();
        let mut term = ComplexMatrix2::identity();
        for k in 1..terms {
            term = (term * *m).scale(1.0 / k as f64);
            sum = sum + term;
        }
        sum
    }

    fn unit(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z).normalize()
    }

    #[test]
    fn z_pi_rotation() {
        let u = su2_from_axis_angle(&Vec3::z(), PI).unwrap();
        let expected = ComplexMatrix2::diag(-I, I);
        assert!(u.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn two_pi_is_minus_identity() {
        let u = su2_from_axis_angle(&Vec3::x(), 2.0 * PI).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix2::identity().scale(-1.0)) < 1e-12);
    }

    #[test]
    fn matches_series_exponential() {
        let n = unit(0.77, 0.0, 0.64);
        let angle = 0.62 * PI;
        let [sx, sy, sz] = ComplexMatrix2::paulis();
        let generator = (sx.scale(n.x) + sy.scale(n.y) + sz.scale(n.z)).scale_c(Complex64::new(0.0, -0.5 * angle));
        let oracle = taylor_exp(&generator, 40);
        let u = su2_from_axis_angle(&n, angle).unwrap();
        assert!(u.max_abs_diff(&oracle) < 1e-10);
    }

    #[test]
    fn rejects_non_unit_axis() {
        let err = su2_from_axis_angle(&Vec3::new(1.0, 1.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::NonUnitAxis { .. }));
    }

    #[test]
    fn identity_decomposes_to_z() {
        let aa = axis_angle_from_su2(&ComplexMatrix2::identity()).unwrap();
        assert_eq!(aa.axis, [0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(aa.angle, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn z_pi_decomposes() {
        let aa = axis_angle_from_su2(&ComplexMatrix2::diag(-I, I)).unwrap();
        assert_abs_diff_eq!(aa.angle, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(aa.axis[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn global_phase_is_recovered() {
        let n = unit(0.3, -0.2, 0.9);
        let u = su2_from_axis_angle(&n, 1.1).unwrap().scale_c(Complex64::from_polar(1.0, 0.4));
        let aa = axis_angle_from_su2(&u).unwrap();
        assert_abs_diff_eq!(aa.global_phase, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(aa.angle, 1.1, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_unitary() {
        let err = axis_angle_from_su2(&ComplexMatrix2::identity().scale(2.0)).unwrap_err();
        assert!(matches!(err, Error::NotUnitary { .. }));
    }

    #[test]
    fn bloch_of_basis_states() {
        let up = ComplexMatrix2::projector(0);
        let down = ComplexMatrix2::projector(1);
        assert_eq!(bloch_from_density(&up).unwrap(), BlochVector::UP);
        assert_eq!(bloch_from_density(&down).unwrap(), BlochVector::DOWN);
        let mixed = ComplexMatrix2::identity().scale(0.5);
        assert_eq!(bloch_from_density(&mixed).unwrap(), BlochVector::MIXED);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexMatrix2::pure_state(Complex64::new(h, 0.0), Complex64::new(h, 0.0));
        let b = bloch_from_density(&plus).unwrap();
        assert_abs_diff_eq!(b.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bloch_rejects_non_hermitian() {
        let mut rho = ComplexMatrix2::projector(0);
        rho.m[0][1] = Complex64::new(0.1, 0.0);
        assert!(matches!(bloch_from_density(&rho), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn zero_field_precession_is_identity() {
        assert_eq!(precession(&Vec3::zeros(), 3.0), ComplexMatrix2::identity());
    }

    fn axis_strategy() -> impl Strategy<Value = Vec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| unit(x, y, z))
    }

    proptest! {
        #[test]
        fn roundtrip(axis in axis_strategy(), angle in 1e-6f64..(PI - 1e-6)) {
            let u = su2_from_axis_angle(&axis, angle).unwrap();
            let aa = axis_angle_from_su2(&u).unwrap();
            prop_assert!((aa.angle - angle).abs() < 1e-9);
            prop_assert!((aa.axis_vec() - axis).norm() < 1e-9);
            let back = su2_from_axis_angle(&aa.axis_vec(), aa.angle).unwrap();
            prop_assert!(back.phase_insensitive_distance(&u) < 1e-9);
        }

        #[test]
        fn roundtrip_any_angle(axis in axis_strategy(), angle in -20.0f64..20.0) {
            let u = su2_from_axis_angle(&axis, angle).unwrap();
            let aa = axis_angle_from_su2(&u).unwrap();
            prop_assert!((0.0..=PI + 1e-12).contains(&aa.angle));
            let back = su2_from_axis_angle(&aa.axis_vec(), aa.angle).unwrap();
            prop_assert!(back.phase_insensitive_distance(&u) < 1e-9);
        }

        #[test]
        fn z_composition(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let z = Vec3::z();
            let lhs = su2_from_axis_angle(&z, a).unwrap() * su2_from_axis_angle(&z, b).unwrap();
            let rhs = su2_from_axis_angle(&z, a + b).unwrap();
            prop_assert!(lhs.phase_insensitive_distance(&rhs) < 1e-12);
        }

        #[test]
        fn trace_identity(axis in axis_strategy(), angle in -10.0f64..10.0) {
            let u = su2_from_axis_angle(&axis, angle).unwrap();
            prop_assert!((u.trace().re - 2.0 * (angle / 2.0).cos()).abs() < 1e-12);
            prop_assert!(u.trace().im.abs() < 1e-12);
            prop_assert!(u.unitarity_error() < 1e-12);
        }

        #[test]
        fn conjugation_preserves_trace(axis in axis_strategy(), angle in -10.0f64..10.0,
                                       bx in -0.5f64..0.5, by in -0.5f64..0.5, bz in -0.5f64..0.5) {
            let rho = ComplexMatrix2::from_bloch(&BlochVector::new(bx, by, bz));
            let u = su2_from_axis_angle(&axis, angle).unwrap();
            let out = u.conjugate(&rho);
            prop_assert!((out.trace() - ONE).norm() < 1e-12);
            prop_assert!(out.hermiticity_error() < 1e-12);
            let r_in = bloch_unchecked(&rho).norm();
            let r_out = bloch_unchecked(&out).norm();
            prop_assert!((r_in - r_out).abs() < 1e-12);
        }
    }
}
