use std::ops::Mul;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::su2::ComplexMatrix2;
use crate::error::{Error, Result};

/// Square complex matrix on the joint electron + nuclei space.
///
/// The joint basis is ordered |electron⟩ ⊗ |nucleus₁⟩ ⊗ …, so the electron is
/// the most significant index.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrixN(pub DMatrix<Complex64>);

impl ComplexMatrixN {
    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn from_2x2(m: &ComplexMatrix2) -> Self {
        Self(DMatrix::from_fn(2, 2, |r, c| m.m[r][c]))
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(&self.0 * s)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn unitarity_error(&self) -> f64 {
        (self.adjoint() * self).max_abs_diff(&Self::identity(self.dim()))
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `self · rho · self†`
    pub fn conjugate(&self, rho: &Self) -> Self {
        Self(&self.0 * &rho.0 * self.0.adjoint())
    }

    /// `exp(self)` via nalgebra's Padé approximant.
    pub fn exp(&self) -> Self {
        Self(self.0.exp())
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = Self((&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0));
        herm.0
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity, unit trace, and positivity down to `-tol`.
    pub fn validate_density(&self, tol: f64) -> Result<()> {
        let deviation = self.hermiticity_error();
        if !(deviation <= tol) {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(crate::error::invalid(
                "rho",
                format!("trace is {tr}, expected 1"),
            ));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -tol {
            return Err(crate::error::invalid(
                "rho",
                format!("negative eigenvalue {min_eig:e}"),
            ));
        }
        Ok(())
    }

    /// Trace over the leading factor of dimension `outer`, keeping the rest.
    pub fn partial_trace_outer(&self, outer: usize) -> Self {
        let inner = self.dim() / outer;
        Self(DMatrix::from_fn(inner, inner, |r, c| {
            (0..outer).map(|k| self.0[(k * inner + r, k * inner + c)]).sum()
        }))
    }

    /// Reduced density operator of tensor factor `factor` (each factor a qubit).
    pub fn reduced_qubit(&self, factor: usize) -> ComplexMatrix2 {
        let n = self.dim().trailing_zeros() as usize;
        let shift = n - 1 - factor;
        let mut out = ComplexMatrix2::zero();
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                // other factors must match for a trace contribution
                if (r ^ c) & !(1 << shift) != 0 {
                    continue;
                }
                let br = (r >> shift) & 1;
                let bc = (c >> shift) & 1;
                out.m[br][bc] += self.0[(r, c)];
            }
        }
        out
    }
}

impl Mul<&ComplexMatrixN> for ComplexMatrixN {
    type Output = ComplexMatrixN;
    fn mul(self, rhs: &ComplexMatrixN) -> ComplexMatrixN {
        ComplexMatrixN(self.0 * &rhs.0)
    }
}

impl Mul<&ComplexMatrixN> for &ComplexMatrixN {
    type Output = ComplexMatrixN;
    fn mul(self, rhs: &ComplexMatrixN) -> ComplexMatrixN {
        ComplexMatrixN(&self.0 * &rhs.0)
    }
}

/// Tensor product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix2, b: &ComplexMatrixN) -> ComplexMatrixN {
    kron_n(&ComplexMatrixN::from_2x2(a), b)
}

pub fn kron_n(a: &ComplexMatrixN, b: &ComplexMatrixN) -> ComplexMatrixN {
    ComplexMatrixN(a.0.kronecker(&b.0))
}

/// `op` acting on qubit `factor` of an `n_qubits` register, identity elsewhere.
pub fn embed(op: &ComplexMatrix2, factor: usize, n_qubits: usize) -> ComplexMatrixN {
    (0..n_qubits).fold(ComplexMatrixN::identity(1), |acc, k| {
        let m = if k == factor {
            *op
        } else {
            ComplexMatrix2::identity()
        };
        kron_n(&acc, &ComplexMatrixN::from_2x2(&m))
    })
}
