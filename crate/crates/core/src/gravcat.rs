//! Two-qubit gravitational cat model.
//!
//! Each particle is a two-level system in a double well; the pair couples
//! through the Newtonian interaction, giving
//!
//! ```text
//! H₀ = (E − Γ) 𝟙⊗𝟙 + (ε/2)(𝟙⊗σ_z + σ_z⊗𝟙) − Ω σ_x⊗σ_x
//! K̂  = E 𝟙⊗𝟙 + (ε/2)(𝟙⊗σ_z + σ_z⊗𝟙)
//! ```
//!
//! The LIV deformation replaces `H₀` by `H₀ − ξ̄ σ_n K̂^{n/2}` and, when the
//! deformation fluctuates, adds the dissipator `−(σ_n² t_QG/ħ²)[K̂^{n/2},[K̂^{n/2}, ρ]]`.

use crate::dispersion::{sigma_for, PhysicalConstants, UnitSystem};
use crate::error::{Error, Result};
use crate::linalg::{diag_power, identity2, kron, sigma_x, sigma_z, ComplexMatrix, C64};
use crate::state::DensityMatrix;

const GENERATOR_HERMITIAN_TOL: f64 = 1e-12;

/// Full physical parameter set of a gravcat run.
#[derive(Clone, Debug, PartialEq)]
pub struct GravcatParams {
    pub mass: f64,
    /// Separation when both particles sit in the same-side minima.
    pub d: f64,
    /// Separation when they sit in different minima.
    pub d_prime: f64,
    /// Well spacing L, metadata only.
    pub well_spacing: f64,
    pub epsilon: f64,
    pub e_ref: f64,
    pub n: u32,
    pub t_qg: f64,
    pub theta: f64,
    pub units: UnitSystem,
    /// ⟨ξ_n⟩; its sign selects the direction of the systematic gap shift.
    pub xi_mean: f64,
    /// Direct σ_n, bypassing `ℓ (Mc)^{3−n} (2M)^{(n−2)/2}`.
    pub sigma: Option<f64>,
    /// Direct Ω, bypassing the geometric formula.
    pub omega: Option<f64>,
    /// Direct Γ; defaults to |Ω| when only Ω is given.
    pub gamma: Option<f64>,
}

impl GravcatParams {
    /// Two-level system aligned with the mesoscopic proposal:
    /// d = 200 μm, L = 100 μm, d′ = d + L, M = 10⁻¹⁴ kg, ε = ħ·1 Hz,
    /// E = 10ε, t_QG = t_P, n = 1, θ = 0.
    pub fn mesoscopic() -> Self {
        let k = PhysicalConstants::si();
        let epsilon = k.hbar * 1.0;
        let d = 200e-6;
        let l = 100e-6;
        Self {
            mass: 1e-14,
            d,
            d_prime: d + l,
            well_spacing: l,
            epsilon,
            e_ref: 10.0 * epsilon,
            n: 1,
            t_qg: k.t_planck,
            theta: 0.0,
            units: UnitSystem::Si,
            xi_mean: 1.0,
            sigma: None,
            omega: None,
            gamma: None,
        }
    }

    /// Natural-unit parameters chosen to show the qualitative structure of
    /// the concurrence figure: ε = 1, E = 2, Ω = 0.5, n = 2, σ = 0.1,
    /// t_QG = 1, θ = 0. These are repository choices, not published values.
    pub fn fig2() -> Self {
        Self {
            mass: 1.0,
            d: 1.0,
            d_prime: 1.0,
            well_spacing: 0.0,
            epsilon: 1.0,
            e_ref: 2.0,
            n: 2,
            t_qg: 1.0,
            theta: 0.0,
            units: UnitSystem::Natural,
            xi_mean: 1.0,
            sigma: Some(0.1),
            omega: Some(0.5),
            gamma: Some(0.5),
        }
    }

    pub fn constants(&self) -> PhysicalConstants {
        PhysicalConstants::for_units(self.units)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.e_ref > self.epsilon) {
            return Err(Error::KineticNotPositive);
        }
        if !(self.mass > 0.0) {
            return bad("mass must be positive");
        }
        if self.omega.is_none() && !(self.d > 0.0 && self.d_prime > 0.0) {
            return bad("separations d and d' must be positive");
        }
        if self.n < 1 {
            return bad("n must be ≥ 1");
        }
        if !(self.t_qg >= 0.0) {
            return bad("t_QG must be ≥ 0");
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.theta) {
            return bad("theta must lie in [0, π/2]");
        }
        if !self.xi_mean.is_finite() {
            return bad("xi_mean must be finite");
        }
        Ok(())
    }

    pub fn couplings(&self, k: &PhysicalConstants) -> CouplingConstants {
        let geometric = coupling_constants(self.mass, self.d, self.d_prime, k);
        match self.omega {
            None => geometric,
            Some(omega) => CouplingConstants {
                alpha: geometric.alpha,
                omega,
                gamma: self.gamma.unwrap_or(omega.abs()),
            },
        }
    }

    /// σ_n: the override when present, else the dispersion formula.
    pub fn sigma_n(&self, k: &PhysicalConstants) -> f64 {
        self.sigma.unwrap_or_else(|| sigma_for(self.n, self.mass, k))
    }

    /// Coefficient of `−K̂^{n/2}` in the effective Hamiltonian.
    pub fn drift(&self, k: &PhysicalConstants) -> f64 {
        self.xi_mean * self.sigma_n(k)
    }

    pub fn attenuation(&self, k: &PhysicalConstants) -> Result<f64> {
        attenuation_a_n(self.e_ref, self.epsilon, self.n, self.drift(k))
    }

    pub fn entanglement_time(&self, k: &PhysicalConstants) -> Result<f64> {
        entanglement_time(self.couplings(k).omega, self.epsilon, k)
    }
}

/// Newtonian coupling constants of the two-particle geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingConstants {
    /// G M²
    pub alpha: f64,
    pub gamma: f64,
    pub omega: f64,
}

pub fn coupling_constants(mass: f64, d: f64, d_prime: f64, k: &PhysicalConstants) -> CouplingConstants {
    let alpha = k.g * mass * mass;
    CouplingConstants {
        alpha,
        gamma: 0.5 * alpha * (1.0 / d + 1.0 / d_prime),
        omega: 0.5 * alpha * (1.0 / d - 1.0 / d_prime),
    }
}

fn local_z_sum() -> ComplexMatrix {
    let id = identity2();
    let z = sigma_z();
    kron(&id, &z).unwrap() + kron(&z, &id).unwrap()
}

/// Undeformed Hamiltonian; diagonal (E−Γ+ε, E−Γ, E−Γ, E−Γ−ε) with −Ω on the
/// anti-diagonal.
pub fn build_h0(e_ref: f64, epsilon: f64, omega: f64, gamma: f64) -> ComplexMatrix {
    let xx = kron(&sigma_x(), &sigma_x()).unwrap();
    ComplexMatrix::identity(4).scale_real(e_ref - gamma) + local_z_sum().scale_real(0.5 * epsilon)
        - xx.scale_real(omega)
}

/// Kinetic operator diag(E+ε, E, E, E−ε).
pub fn build_kinetic(e_ref: f64, epsilon: f64) -> Result<ComplexMatrix> {
    if !(e_ref > epsilon) {
        return Err(Error::KineticNotPositive);
    }
    Ok(ComplexMatrix::identity(4).scale_real(e_ref) + local_z_sum().scale_real(0.5 * epsilon))
}

/// Signed attenuation `A_n = drift · [(E−ε)^{n/2} − (E+ε)^{n/2}]`.
///
/// `drift` is the coefficient of `−K̂^{n/2}` in `h_eff` (ξ̄·σ_n). With this
/// sign the {|00⟩,|11⟩} splitting is exactly `2ε + A_n`, so the systematic
/// solution is the unitary one with `ε ↦ ε + A_n/2`; the dephasing rate is
/// `σ_n² [(E−ε)^{n/2} − (E+ε)^{n/2}]² t_QG/ħ²`, which equals `A_n² t_QG/ħ²`
/// when |ξ̄| = 1. A positive drift lowers the splitting (A_n < 0).
pub fn attenuation_a_n(e_ref: f64, epsilon: f64, n: u32, drift: f64) -> Result<f64> {
    if !(e_ref > epsilon) {
        return Err(Error::KineticNotPositive);
    }
    let h = f64::from(n) / 2.0;
    Ok(drift * ((e_ref - epsilon).powf(h) - (e_ref + epsilon).powf(h)))
}

/// `ρ(0)` for `|ψ₀⟩ = cos θ |00⟩ + sin θ |11⟩`.
pub fn initial_state(theta: f64) -> DensityMatrix {
    let (s, c) = theta.sin_cos();
    let psi = [C64::new(c, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)];
    DensityMatrix::from_pure(&psi).expect("cos²θ + sin²θ = 1")
}

/// Lindblad generator `ρ̇ = −(i/ħ)[h_eff, ρ] − rate·[L, [L, ρ]]` with Hermitian `L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LindbladGenerator {
    pub h_eff: ComplexMatrix,
    pub lindblad_op: ComplexMatrix,
    pub rate: f64,
    pub hbar: f64,
}

impl LindbladGenerator {
    pub fn rhs(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let unitary = self.h_eff.commutator(rho).scale(C64::new(0.0, -1.0 / self.hbar));
        if self.rate == 0.0 {
            return unitary;
        }
        let inner = self.lindblad_op.commutator(rho);
        unitary - self.lindblad_op.commutator(&inner).scale_real(self.rate)
    }

    pub fn is_unitary(&self) -> bool {
        self.rate == 0.0
    }
}

pub fn make_generator(p: &GravcatParams, k: &PhysicalConstants) -> Result<LindbladGenerator> {
    p.validate()?;
    let c = p.couplings(k);
    let h0 = build_h0(p.e_ref, p.epsilon, c.omega, c.gamma);
    let kinetic = build_kinetic(p.e_ref, p.epsilon)?;
    let lindblad_op = diag_power(&kinetic, f64::from(p.n) / 2.0)?;
    let sigma = p.sigma_n(k);
    let h_eff = h0 - lindblad_op.scale_real(p.xi_mean * sigma);
    let rate = sigma * sigma * p.t_qg / (k.hbar * k.hbar);
    check_generator(&h_eff, &lindblad_op, rate)?;
    Ok(LindbladGenerator {
        h_eff,
        lindblad_op,
        rate,
        hbar: k.hbar,
    })
}

/// Generic form `ρ̇ = −(i/ħ)[H₀, ρ] − rate·[L,[L,ρ]]` with no drift term.
pub fn make_generic_generator(
    h0: ComplexMatrix,
    lindblad_op: ComplexMatrix,
    rate: f64,
    hbar: f64,
) -> Result<LindbladGenerator> {
    check_generator(&h0, &lindblad_op, rate)?;
    Ok(LindbladGenerator {
        h_eff: h0,
        lindblad_op,
        rate,
        hbar,
    })
}

fn check_generator(h: &ComplexMatrix, l: &ComplexMatrix, rate: f64) -> Result<()> {
    for m in [h, l] {
        if m.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: m.dim(),
            });
        }
        let tol = GENERATOR_HERMITIAN_TOL * m.max_abs().max(1.0);
        let defect = m.hermiticity_defect();
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
    }
    if !(rate >= 0.0) {
        return Err(Error::InvalidParameter("dissipation rate must be ≥ 0".into()));
    }
    Ok(())
}

/// Gravcat coherence decay time `ħ² / (σ_n² B² t_QG)` with
/// `B = (E−ε)^{n/2} − (E+ε)^{n/2}`. Without a σ override this is evaluated
/// in the Planck-energy form `2^{2−n} ħ² E_P² / (B² (Mc²)^{4−n} t_QG)`.
pub fn gravcat_decoherence_time(p: &GravcatParams, k: &PhysicalConstants) -> Result<f64> {
    if p.t_qg == 0.0 {
        return Ok(f64::INFINITY);
    }
    let bracket = attenuation_a_n(p.e_ref, p.epsilon, p.n, 1.0)?;
    let b2 = bracket * bracket;
    if b2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(match p.sigma {
        Some(s) => k.hbar * k.hbar / (s * s * b2 * p.t_qg),
        None => {
            let n = p.n as i32;
            let rest = p.mass * k.c * k.c;
            2f64.powi(2 - n) * k.hbar * k.hbar * k.e_planck * k.e_planck
                / (b2 * rest.powi(4 - n) * p.t_qg)
        }
    })
}

/// `τ_E = ħ / √(Ω² + ε²)`.
pub fn entanglement_time(omega: f64, epsilon: f64, k: &PhysicalConstants) -> Result<f64> {
    let w = omega.hypot(epsilon);
    if w == 0.0 {
        return Err(Error::DegenerateModel);
    }
    Ok(k.hbar / w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{free_decoherence_time, MdrParams};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn symmetric_geometry_has_no_exchange() {
        let k = PhysicalConstants::si();
        let c = coupling_constants(1e-14, 1e-4, 1e-4, &k);
        assert_eq!(c.omega, 0.0);
        assert!(rel(c.gamma, c.alpha / 1e-4) < 1e-15);
    }

    #[test]
    fn mesoscopic_couplings() {
        let k = PhysicalConstants::si();
        let c = coupling_constants(1e-14, 200e-6, 300e-6, &k);
        assert!(rel(c.alpha, 6.6743e-39) < 1e-12);
        // (α/2)(1/d − 1/d′) = 3.33715e-39 × 1666.67
        assert!(rel(c.omega.abs(), 5.5619e-36) < 1e-4, "{}", c.omega);
        assert!(c.omega.abs() <= c.gamma);
        let c2 = coupling_constants(2f64.sqrt() * 1e-14, 200e-6, 300e-6, &k);
        assert!(rel(c2.alpha, 2.0 * c.alpha) < 1e-14);
    }

    #[test]
    fn h0_examples() {
        let h = build_h0(3.0, 0.0, 0.0, 1.0);
        assert_eq!(h, ComplexMatrix::identity(4).scale_real(2.0));

        let h = build_h0(1.0, 2.0, 0.0, 1.0);
        assert_eq!(h, ComplexMatrix::from_real_diag(&[2.0, 0.0, 0.0, -2.0]).unwrap());

        let h = build_h0(2.0, 1.0, 0.3, 0.5);
        assert_eq!(h[(0, 3)].re, -0.3);
        assert_eq!(h[(1, 2)].re, -0.3);
        assert_eq!(h[(2, 1)].re, -0.3);
        assert_eq!(h[(3, 0)].re, -0.3);
    }

    #[test]
    fn h0_outer_block_spectrum() {
        let (e, eps, om, g) = (2.0, 0.8, 0.35, 0.4);
        let h = build_h0(e, eps, om, g);
        let block = ComplexMatrix::from_row_major(2, &[h[(0, 0)], h[(0, 3)], h[(3, 0)], h[(3, 3)]])
            .unwrap();
        let eig = crate::linalg::hermitian_eigen(&block, 1e-14).unwrap();
        let w = (eps * eps + om * om).sqrt();
        assert!((eig.eigenvalues[0] - (e - g - w)).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - (e - g + w)).abs() < 1e-14);
    }

    #[test]
    fn kinetic_examples() {
        assert_eq!(
            build_kinetic(2.0, 0.0).unwrap(),
            ComplexMatrix::identity(4).scale_real(2.0)
        );
        let k = build_kinetic(2.0, 1.0).unwrap();
        assert_eq!(k, ComplexMatrix::from_real_diag(&[3.0, 2.0, 2.0, 1.0]).unwrap());
        assert_eq!(diag_power(&k, 1.0).unwrap(), k);
        assert_eq!(
            build_kinetic(1.0, 2.0).unwrap_err().to_string(),
            "kinetic operator not positive-definite"
        );
    }

    #[test]
    fn attenuation_examples() {
        assert_eq!(attenuation_a_n(2.0, 0.0, 3, 0.7).unwrap(), 0.0);
        // n = 2: (E−ε) − (E+ε) = −2ε
        let a = attenuation_a_n(5.0, 0.3, 2, 0.4).unwrap();
        assert!((a + 2.0 * 0.4 * 0.3).abs() < 1e-15);
        assert_eq!(attenuation_a_n(2.0, 1.0, 2, 1.0).unwrap(), -2.0);
        assert_eq!(attenuation_a_n(2.0, 1.0, 2, -1.0).unwrap(), 2.0);
    }

    #[test]
    fn attenuation_magnitude_grows_with_gap() {
        for n in 1..=4 {
            let mut last = 0.0;
            for i in 1..50 {
                let eps = 0.02 * i as f64;
                let a = attenuation_a_n(1.0, eps, n, 1.0).unwrap().abs();
                assert!(a > last, "n={n} eps={eps}");
                last = a;
            }
        }
    }

    #[test]
    fn initial_state_examples() {
        let r = initial_state(0.0);
        assert_eq!(r.population(0), 1.0);
        assert_eq!(r.population(3), 0.0);
        let r = initial_state(std::f64::consts::FRAC_PI_4);
        for (i, j) in [(0, 0), (3, 3), (0, 3), (3, 0)] {
            assert!((r.get(i, j).re - 0.5).abs() < 1e-15);
        }
        for th in [0.0, 0.2, 0.9, 1.5] {
            assert!((initial_state(th).purity() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn generator_limits() {
        let k = PhysicalConstants::natural(1.0);
        let mut p = GravcatParams::fig2();
        p.t_qg = 0.0;
        let g = make_generator(&p, &k).unwrap();
        assert_eq!(g.rate, 0.0);

        p.sigma = Some(0.0);
        let g = make_generator(&p, &k).unwrap();
        let c = p.couplings(&k);
        assert_eq!(g.h_eff, build_h0(p.e_ref, p.epsilon, c.omega, c.gamma));
        assert_eq!(g.rate, 0.0);
    }

    #[test]
    fn generator_is_hermitian_and_diagonal_noise() {
        let k = PhysicalConstants::si();
        let g = make_generator(&GravcatParams::mesoscopic(), &k).unwrap();
        assert!(g.lindblad_op.is_diagonal(0.0));
        assert!(g.rate >= 0.0);
        assert!(g.h_eff.hermiticity_defect() <= 1e-12 * g.h_eff.max_abs());
    }

    #[test]
    fn generic_generator_identity_noise_is_trivial() {
        let h0 = build_h0(2.0, 1.0, 0.5, 0.5);
        let g = make_generic_generator(h0, ComplexMatrix::identity(4), 3.0, 1.0).unwrap();
        let rho = initial_state(0.4);
        let unitary = make_generic_generator(h0, ComplexMatrix::identity(4), 0.0, 1.0).unwrap();
        assert!((g.rhs(rho.matrix()) - unitary.rhs(rho.matrix())).max_abs() < 1e-15);
    }

    #[test]
    fn generic_generator_rejects_non_hermitian() {
        let mut h = ComplexMatrix::identity(4);
        h[(0, 1)] = C64::new(1.0, 0.0);
        assert!(make_generic_generator(h, ComplexMatrix::identity(4), 0.0, 1.0).is_err());
        assert!(make_generic_generator(ComplexMatrix::identity(4), ComplexMatrix::identity(4), -1.0, 1.0).is_err());
    }

    #[test]
    fn decoherence_time_identity() {
        let k = PhysicalConstants::si();
        let mut p = GravcatParams::mesoscopic();
        for n in 1..=4 {
            p.n = n;
            let tau = gravcat_decoherence_time(&p, &k).unwrap();
            let a = p.attenuation(&k).unwrap();
            let alt = k.hbar * k.hbar / (a * a * p.t_qg);
            assert!(rel(tau, alt) < 1e-12, "n={n}: {tau} vs {alt}");
        }
        p.t_qg = 0.0;
        assert_eq!(gravcat_decoherence_time(&p, &k).unwrap(), f64::INFINITY);
    }

    #[test]
    fn near_degenerate_kinetic_matches_free_estimate() {
        // E → ε⁺ makes B² → 2ε for n = 1, i.e. half the free-particle time
        let k = PhysicalConstants::si();
        let mut p = GravcatParams::mesoscopic();
        p.e_ref = p.epsilon * (1.0 + 1e-12);
        let gravcat = gravcat_decoherence_time(&p, &k).unwrap();
        let free = free_decoherence_time(&MdrParams::new(1, p.mass, p.t_qg).unwrap(), p.epsilon, &k);
        let ratio = gravcat / free;
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn entanglement_time_examples() {
        let k = PhysicalConstants::natural(1.0);
        assert_eq!(entanglement_time(0.0, 2.0, &k).unwrap(), 0.5);
        assert!(rel(entanglement_time(1.5, 1.5, &k).unwrap(), 1.0 / (1.5 * 2f64.sqrt())) < 1e-15);
        assert_eq!(entanglement_time(0.0, 0.0, &k), Err(Error::DegenerateModel));

        let ks = PhysicalConstants::si();
        let tau = GravcatParams::mesoscopic().entanglement_time(&ks).unwrap();
        assert!((0.9..=1.1).contains(&tau));
    }

    #[test]
    fn validation() {
        let mut p = GravcatParams::fig2();
        p.e_ref = 0.5;
        assert_eq!(p.validate(), Err(Error::KineticNotPositive));
        let mut p = GravcatParams::fig2();
        p.theta = 2.0;
        assert!(p.validate().is_err());
    }
}
