//! Entanglement and population observables.

use crate::dispersion::PhysicalConstants;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, kron, sigma_y, C64};
use crate::state::DensityMatrix;

/// Entries outside the X pattern above this modulus disqualify the fast path.
pub const X_STATE_TOL: f64 = 1e-10;
/// Concurrence values this far below zero are rounding and get clamped.
pub const CLAMP_TOL: f64 = 1e-12;

/// Concurrence of an X-state,
/// `C = 2 max{|ρ₂₃| − √(ρ₁₁ρ₄₄), |ρ₁₄| − √(ρ₂₂ρ₃₃), 0}`.
pub fn concurrence_x(rho: &DensityMatrix) -> Result<f64> {
    let off = rho.off_x_max();
    if off > X_STATE_TOL {
        return Err(Error::NotXState(off));
    }
    Ok(concurrence_x_unchecked(rho))
}

fn concurrence_x_unchecked(rho: &DensityMatrix) -> f64 {
    x_raw(rho).max(0.0)
}

fn x_raw(rho: &DensityMatrix) -> f64 {
    let p = |i| rho.population(i).max(0.0);
    let a = rho.get(1, 2).norm() - (p(0) * p(3)).sqrt();
    let b = rho.get(0, 3).norm() - (p(1) * p(2)).sqrt();
    2.0 * a.max(b)
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`, with λᵢ the decreasing
/// square roots of the spectrum of `ρ ρ̃`, `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
///
/// The spectrum is taken from the Hermitian matrix `√ρ ρ̃ √ρ`, which is
/// similar to `ρ ρ̃`.
pub fn concurrence_wootters(rho: &DensityMatrix) -> Result<f64> {
    Ok(wootters_raw(rho)?.max(0.0))
}

fn wootters_raw(rho: &DensityMatrix) -> Result<f64> {
    let yy = kron(&sigma_y(), &sigma_y())?;
    let flipped = yy * rho.matrix().conj() * yy;
    let spectrum = hermitian_eigen(&rho.matrix().hermitian_part(), f64::INFINITY)?;
    if spectrum.min_eigenvalue() < -1e-9 {
        return Err(Error::InvalidState(format!(
            "ρ has negative eigenvalue {:e}",
            spectrum.min_eigenvalue()
        )));
    }
    // eigenvalues at rounding level are exact zeros for rank-deficient states
    let floor = 64.0 * f64::EPSILON * spectrum.eigenvalues[3].max(1.0);
    let root = spectrum.map_spectrum(|l| C64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0));
    let r = (root * flipped * root).hermitian_part();
    let eig = hermitian_eigen(&r, f64::INFINITY)?;
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
    let mut lambdas = Vec::with_capacity(4);
    for &mu in &eig.eigenvalues {
        if mu < -1e-9 * scale {
            return Err(Error::InvalidState(format!(
                "ρρ̃ has negative eigenvalue {mu:e}"
            )));
        }
        // same rounding floor as for ρ: √μ would promote ~1e-17 noise to ~1e-8
        lambdas.push(if mu > 64.0 * f64::EPSILON * scale { mu.sqrt() } else { 0.0 });
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok(lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3])
}

/// Closed-form concurrence for θ = 0 under unitary evolution,
/// `2 |Ω| |sin(t/τ_E)| √(ε² + Ω² cos²(t/τ_E)) / (Ω² + ε²)`.
pub fn concurrence_theta0(t: f64, omega: f64, epsilon: f64, k: &PhysicalConstants) -> f64 {
    let w2 = omega * omega + epsilon * epsilon;
    let x = t * w2.sqrt() / k.hbar;
    let (s, c) = x.sin_cos();
    2.0 * omega.abs() * s.abs() * (epsilon * epsilon + omega * omega * c * c).sqrt() / w2
}

/// One CSV-ready row of observables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableRecord {
    pub t: f64,
    pub concurrence: f64,
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho44: f64,
    pub purity: f64,
    pub abs_rho14: f64,
    /// Concurrence was slightly negative from rounding and clamped to 0.
    pub clamped: bool,
    /// Fast X-state path was used.
    pub x_state: bool,
}

pub fn record(rho: &DensityMatrix, t: f64) -> Result<ObservableRecord> {
    let x_state = rho.off_x_max() <= X_STATE_TOL;
    let raw = if x_state { x_raw(rho) } else { wootters_raw(rho)? };
    let clamped = raw < 0.0 && raw >= -CLAMP_TOL;
    let concurrence = raw.clamp(0.0, 1.0);
    Ok(ObservableRecord {
        t,
        concurrence,
        rho11: rho.population(0),
        rho22: rho.population(1),
        rho33: rho.population(2),
        rho44: rho.population(3),
        purity: rho.purity(),
        abs_rho14: rho.get(0, 3).norm(),
        clamped,
        x_state,
    })
}
