//! Small dense complex linear algebra for 2×2 and 4×4 operators.
//!
//! Everything lives on the stack in a fixed 16-slot buffer, so matrices are
//! `Copy` and the hot loops of the integrators never allocate. Basis order for
//! two-qubit operators is |00⟩, |01⟩, |10⟩, |11⟩.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Jacobi convergence threshold on the off-diagonal Frobenius mass, relative
/// to the matrix scale.
pub const JACOBI_TOL: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Row-major complex matrix of dimension 2 or 4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: [C64; 16],
}

impl ComplexMatrix {
    fn check_dim(dim: usize) -> Result<()> {
        if dim == 2 || dim == 4 {
            Ok(())
        } else {
            Err(Error::UnsupportedDimension(dim))
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4, "unsupported dimension {dim}");
        Self { dim, data: [ZERO; 16] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from `dim²` row-major entries.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        Self::check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        let mut m = Self::zeros(dim);
        m.data[..dim * dim].copy_from_slice(entries);
        Ok(m)
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_row_major(dim, &c)
    }

    pub fn from_diag(values: &[C64]) -> Result<Self> {
        let dim = values.len();
        Self::check_dim(dim)?;
        let mut m = Self::zeros(dim);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        Ok(m)
    }

    pub fn from_real_diag(values: &[f64]) -> Result<Self> {
        let c: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&c)
    }

    /// Outer product |a⟩⟨b|.
    pub fn outer(a: &[C64], b: &[C64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        let dim = a.len();
        Self::check_dim(dim)?;
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = a[i] * b[j].conj();
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data[..self.dim * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        let mut m = *self;
        for z in m.data.iter_mut() {
            *z = z.conj();
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        for z in m.data.iter_mut() {
            *z *= s;
        }
        m
    }

    pub fn scale_real(&self, s: f64) -> Self {
        let mut m = *self;
        for z in m.data.iter_mut() {
            *z *= s;
        }
        m
    }

    /// `‖m − m†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Largest modulus among off-diagonal entries.
    pub fn off_diagonal_max(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    worst = worst.max(self[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// (m + m†)/2
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale_real(0.5)
    }

    /// `m − tr(m)/dim · 𝟙`
    pub fn traceless_part(&self) -> Self {
        let shift = self.trace() / self.dim as f64;
        let mut m = *self;
        for i in 0..self.dim {
            m[(i, i)] -= shift;
        }
        m
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Frobenius inner product Tr(a† b).
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim);
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.off_diagonal_max() <= tol
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.data[i * self.dim + j]
    }
}

impl Add for ComplexMatrix {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a += b;
        }
        self
    }
}

impl AddAssign for ComplexMatrix {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for ComplexMatrix {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a -= b;
        }
        self
    }
}

impl Neg for ComplexMatrix {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_real(-1.0)
    }
}

impl Mul for ComplexMatrix {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in mul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Mul<C64> for ComplexMatrix {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

impl Mul<f64> for ComplexMatrix {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale_real(rhs)
    }
}

pub fn identity2() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, &[ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO])
        .unwrap()
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
}

/// Kronecker product of two 2×2 matrices, `(a ⊗ b)[2i+k, 2j+l] = a[i,j]·b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    for m in [a, b] {
        if m.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: m.dim(),
            });
        }
    }
    let mut out = ComplexMatrix::zeros(4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Spectral decomposition `m = V Λ V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// `V f(Λ) V†` for a complex-valued spectral function.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.dim();
        let fl: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for (k, fk) in fl.iter().enumerate() {
                    acc += v[(i, k)] * fk * v[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| C64::new(l, 0.0))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of the pivot `m[p,q]` and then applies
/// a real Givens rotation that annihilates it.
pub fn hermitian_eigen(m: &ComplexMatrix, tol: f64) -> Result<HermitianEigen> {
    let defect = m.hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect, tol });
    }
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    let off_mass = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_mass(&a) <= JACOBI_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE || mag <= 1e-300 * scale {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = P R with P = diag(.., 1 @ p, conj(phase) @ q, ..):
                // G_pp = c, G_pq = s, G_qp = -s·conj(phase), G_qq = c·conj(phase)
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;

                // A ← A G (columns p, q)
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                }
                // A ← G† A (rows p, q)
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                // V ← V G
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }
    if !converged && off_mass(&a) > JACOBI_TOL * scale {
        return Err(Error::EigenNotConverged(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Raises a diagonal matrix with nonnegative real entries to a real power.
pub fn diag_power(d: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let tol = 1e-12 * d.max_abs().max(1.0);
    if !d.is_diagonal(tol) {
        return Err(Error::NotDiagonal);
    }
    let mut out = ComplexMatrix::zeros(d.dim());
    for i in 0..d.dim() {
        let z = d[(i, i)];
        if z.im.abs() > tol || z.re < 0.0 {
            return Err(Error::KineticNotPositive);
        }
        out[(i, i)] = C64::new(z.re.powf(s), 0.0);
    }
    Ok(out)
}

/// Hermitian square root of a positive-semidefinite matrix; tiny negative
/// eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(m, 1e-9)?;
    Ok(eig.map_spectrum(|l| C64::new(l.max(0.0).sqrt(), 0.0)))
}

/// `exp(-i·h)` for Hermitian `h`.
pub fn unitary_exp(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(h, 1e-9 * h.max_abs().max(1.0))?;
    Ok(eig.map_spectrum(|l| C64::from_polar(1.0, -l)))
}

/// Half the trace norm of `a − b`.
///
/// Operands are put in a canonical order first so the result is bitwise
/// symmetric.
pub fn trace_distance(a: &crate::state::DensityMatrix, b: &crate::state::DensityMatrix) -> f64 {
    let key = |m: &ComplexMatrix| m.entries().iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>();
    let (ka, kb) = (key(a.matrix()), key(b.matrix()));
    let swap = ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()) == Some(std::cmp::Ordering::Less);
    let (a, b) = if swap { (b, a) } else { (a, b) };
    let diff = *a.matrix() - *b.matrix();
    // both inputs are validated Hermitian; the difference inherits it
    let eig = hermitian_eigen(&diff.hermitian_part(), f64::INFINITY)
        .expect("Hermitian difference is always diagonalizable");
    0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}
