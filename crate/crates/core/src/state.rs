//! Validated two-qubit density matrices.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix, C64};

pub const TRACE_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Unit-trace, Hermitian, positive-semidefinite 4×4 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: rho.dim(),
            });
        }
        let defect = rho.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("Hermiticity defect {defect:e}")));
        }
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = hermitian_eigen(&rho.hermitian_part(), f64::INFINITY)?.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { rho })
    }

    /// Wraps a matrix without validation. Callers own the invariants.
    pub fn new_unchecked(rho: ComplexMatrix) -> Self {
        debug_assert_eq!(rho.dim(), 4);
        Self { rho }
    }

    /// |ψ⟩⟨ψ| for a normalized 4-vector.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("state norm² {norm}")));
        }
        Ok(Self::new_unchecked(ComplexMatrix::outer(psi, psi)?))
    }

    pub fn maximally_mixed() -> Self {
        Self::new_unchecked(ComplexMatrix::identity(4).scale_real(0.25))
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.rho
    }

    /// ρ_{ij} with zero-based indices into |00⟩, |01⟩, |10⟩, |11⟩.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.rho[(i, j)]
    }

    pub fn population(&self, i: usize) -> f64 {
        self.rho[(i, i)].re
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.rho.entries().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigen(&self.rho.hermitian_part(), f64::INFINITY)?.min_eigenvalue())
    }

    /// Largest modulus outside the diagonal and anti-diagonal.
    pub fn off_x_max(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j && i + j != 3 {
                    worst = worst.max(self.rho[(i, j)].norm());
                }
            }
        }
        worst
    }
}
