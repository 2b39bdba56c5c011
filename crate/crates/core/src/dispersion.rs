//! Modified-dispersion kinematics and the decoherence timescales that follow
//! from it.
//!
//! The correction term of the nonrelativistic dispersion relation is
//! `(ℓ/2M) ξ (Mc)^{3−n} p^n`. Quantizing it deforms the kinetic operator by
//! `−σ_n K̂^{n/2}` with `σ_n = ℓ (Mc)^{3−n} (2M)^{(n−2)/2}`, and letting `ξ`
//! fluctuate as white noise turns that deformation into a double-commutator
//! dissipator with rate `σ_n² t_QG / ħ²`.

use crate::error::{Error, Result};

/// Joules per GeV.
pub const JOULE_PER_GEV: f64 = 1.602_176_634e-10;
/// Joules per electronvolt.
pub const JOULE_PER_EV: f64 = 1.602_176_634e-19;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnitSystem {
    Si,
    /// ħ = c = 1.
    Natural,
}

/// Fundamental constants in the active unit system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub units: UnitSystem,
    /// Newton's constant (m³ kg⁻¹ s⁻²).
    pub g: f64,
    pub hbar: f64,
    pub c: f64,
    /// Planck energy (J).
    pub e_planck: f64,
    /// Planck time ħ/E_P (s).
    pub t_planck: f64,
    /// Planck length c·t_P (m).
    pub l_planck: f64,
    /// Inverse quantum-gravity momentum scale, c/E_P by default (s kg⁻¹ m⁻¹).
    pub ell: f64,
}

impl PhysicalConstants {
    /// CODATA-2018 ħ, c, G with E_P = 1.22×10¹⁹ GeV.
    pub fn si() -> Self {
        let hbar = 1.054_571_817e-34;
        let c = 299_792_458.0;
        let e_planck = 1.22e19 * JOULE_PER_GEV;
        let t_planck = hbar / e_planck;
        Self {
            units: UnitSystem::Si,
            g: 6.674_30e-11,
            hbar,
            c,
            e_planck,
            t_planck,
            l_planck: c * t_planck,
            ell: c / e_planck,
        }
    }

    /// ħ = c = 1 with a user-chosen Planck energy; G = 1/E_P².
    pub fn natural(e_planck: f64) -> Self {
        Self {
            units: UnitSystem::Natural,
            g: 1.0 / (e_planck * e_planck),
            hbar: 1.0,
            c: 1.0,
            e_planck,
            t_planck: 1.0 / e_planck,
            l_planck: 1.0 / e_planck,
            ell: 1.0 / e_planck,
        }
    }

    pub fn for_units(units: UnitSystem) -> Self {
        match units {
            UnitSystem::Si => Self::si(),
            UnitSystem::Natural => Self::natural(1.0),
        }
    }

    pub fn with_ell(mut self, ell: f64) -> Self {
        self.ell = ell;
        self
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::si()
    }
}

/// Parameters of the modified dispersion relation for a single particle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MdrParams {
    /// Correction power.
    pub n: u32,
    pub mass: f64,
    /// ⟨ξ_n⟩.
    pub xi_mean: f64,
    /// Noise-strength timescale.
    pub t_qg: f64,
}

impl MdrParams {
    pub fn new(n: u32, mass: f64, t_qg: f64) -> Result<Self> {
        let p = Self {
            n,
            mass,
            xi_mean: 1.0,
            t_qg,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter("n must be ≥ 1".into()));
        }
        if !(self.mass > 0.0) {
            return Err(Error::InvalidParameter("mass must be positive".into()));
        }
        if !(self.t_qg >= 0.0) {
            return Err(Error::InvalidParameter("t_QG must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// `E(p) = p²/2M + (ℓ/2M) ξ̄ (Mc)^{3−n} p^n`.
pub fn mdr_energy(p: f64, params: &MdrParams, k: &PhysicalConstants) -> f64 {
    let m = params.mass;
    let n = params.n as i32;
    p * p / (2.0 * m) + k.ell / (2.0 * m) * params.xi_mean * (m * k.c).powi(3 - n) * p.powi(n)
}

/// `σ_n = ℓ (Mc)^{3−n} (2M)^{(n−2)/2}`.
pub fn sigma_n(params: &MdrParams, k: &PhysicalConstants) -> f64 {
    sigma_for(params.n, params.mass, k)
}

pub(crate) fn sigma_for(n: u32, mass: f64, k: &PhysicalConstants) -> f64 {
    let n = n as i32;
    k.ell * (mass * k.c).powi(3 - n) * (2.0 * mass).powf(f64::from(n - 2) / 2.0)
}

/// Decoherence time of a free-particle momentum coherence,
/// `2^{2−n} ħ² E_P² / ((Mc²)^{4−n} (ΔE^{n/2})² t_QG)`.
///
/// Returns `+∞` when `t_QG = 0`.
pub fn free_decoherence_time(
    params: &MdrParams,
    delta_e_half_sq: f64,
    k: &PhysicalConstants,
) -> f64 {
    if params.t_qg == 0.0 {
        return f64::INFINITY;
    }
    let n = params.n as i32;
    let rest = params.mass * k.c * k.c;
    2f64.powi(2 - n) * k.hbar * k.hbar * k.e_planck * k.e_planck
        / (rest.powi(4 - n) * delta_e_half_sq * params.t_qg)
}

/// `ħ E_P³ / E⁴`, the n-independent scaling obtained with M = E/c² and t_QG = t_P.
/// Only the scaling is meaningful; the proportionality constant is set to one.
pub fn relativistic_scaling_time(energy: f64, k: &PhysicalConstants) -> f64 {
    k.hbar * k.e_planck.powi(3) / energy.powi(4)
}

/// Energy at which the fixed-mass LIV decoherence time
/// `2^{2−n} ħ E_P³ / ((Mc²)^{4−n} E^n)` equals `tau_target`.
pub fn critical_energy(n: u32, mass: f64, tau_target: f64, k: &PhysicalConstants) -> Result<f64> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "critical energy defined for n ∈ {{1,2,3}}, got {n}"
        )));
    }
    if !(mass > 0.0 && tau_target > 0.0) {
        return Err(Error::InvalidParameter(
            "mass and target time must be positive".into(),
        ));
    }
    let ni = n as i32;
    let rest = mass * k.c * k.c;
    let en = 2f64.powi(2 - ni) * k.hbar * k.e_planck.powi(3) / (rest.powi(4 - ni) * tau_target);
    Ok(en.powf(1.0 / f64::from(n)))
}

/// Coupling of the alternative ΔE²-noise model, `16 M² ℓ_P⁴ t_P / ħ⁶` (J⁻⁴ s⁻¹).
pub fn pi_sigma(mass: f64, k: &PhysicalConstants) -> f64 {
    16.0 * mass * mass * k.l_planck.powi(4) * k.t_planck / k.hbar.powi(6)
}

/// `1 / (σ_PI (ΔE²)²)`.
pub fn pi_decoherence_time(mass: f64, delta_e_sq: f64, k: &PhysicalConstants) -> f64 {
    1.0 / (pi_sigma(mass, k) * delta_e_sq * delta_e_sq)
}
