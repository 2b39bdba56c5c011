//! Deterministic time evolution: fixed-step RK4 for the master equation and
//! the closed-form solutions it is checked against.

use crate::dispersion::{sigma_n, MdrParams, PhysicalConstants};
use crate::error::{Error, Result};
use crate::gravcat::LindbladGenerator;
use crate::linalg::{ComplexMatrix, C64};
use crate::state::DensityMatrix;

/// Drift beyond which a step is re-symmetrized and re-traced.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-12;
/// Most negative eigenvalue tolerated before integration aborts.
pub const POSITIVITY_FAILURE: f64 = -1e-6;
/// Fraction of ħ/‖h‖ allowed as a time step.
pub const STABILITY_FRACTION: f64 = 0.01;

/// Drift diagnostics collected along an integration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DriftCounters {
    pub steps: usize,
    pub renormalizations: usize,
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    pub min_eigenvalue: f64,
    /// Largest single-step increase of Tr ρ².
    pub max_purity_increase: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMeta {
    pub dt: f64,
    pub record_every: usize,
    pub generator: Option<LindbladGenerator>,
    pub drift: DriftCounters,
}

/// Time grid with one state per recorded time; `times[0] = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub meta: SeriesMeta,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &DensityMatrix)> {
        self.times.iter().copied().zip(self.states.iter())
    }

    pub fn last(&self) -> Option<(f64, &DensityMatrix)> {
        self.iter().last()
    }
}

/// Largest dt accepted by [`rk4_step`] for this generator.
///
/// The identity component of `h_eff` generates no dynamics, so the bound is
/// taken on its traceless part.
pub fn max_stable_dt(g: &LindbladGenerator) -> f64 {
    let norm = g.h_eff.traceless_part().max_abs();
    if norm == 0.0 {
        f64::INFINITY
    } else {
        STABILITY_FRACTION * g.hbar / norm
    }
}

fn check_dt(g: &LindbladGenerator, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let max_dt = max_stable_dt(g);
    if dt > max_dt {
        return Err(Error::StepTooLarge {
            dt,
            max_dt,
            suggested: 0.5 * max_dt,
        });
    }
    Ok(())
}

fn rk4_raw(g: &LindbladGenerator, rho: &ComplexMatrix, dt: f64) -> ComplexMatrix {
    let k1 = g.rhs(rho);
    let k2 = g.rhs(&(*rho + k1.scale_real(0.5 * dt)));
    let k3 = g.rhs(&(*rho + k2.scale_real(0.5 * dt)));
    let k4 = g.rhs(&(*rho + k3.scale_real(dt)));
    *rho + (k1 + k2.scale_real(2.0) + k3.scale_real(2.0) + k4).scale_real(dt / 6.0)
}

struct StepReport {
    trace_drift: f64,
    hermiticity_drift: f64,
    renormalized: bool,
}

fn rk4_counted(g: &LindbladGenerator, rho: &DensityMatrix, dt: f64) -> (DensityMatrix, StepReport) {
    let mut next = rk4_raw(g, rho.matrix(), dt);
    let trace_drift = (next.trace() - C64::new(1.0, 0.0)).norm();
    let hermiticity_drift = next.hermiticity_defect();
    let renormalized = trace_drift > RENORMALIZE_THRESHOLD || hermiticity_drift > RENORMALIZE_THRESHOLD;
    if renormalized {
        next = next.hermitian_part();
        let tr = next.trace().re;
        next = next.scale_real(1.0 / tr);
    }
    (
        DensityMatrix::new_unchecked(next),
        StepReport {
            trace_drift,
            hermiticity_drift,
            renormalized,
        },
    )
}

/// One classical RK4 step of the master equation.
pub fn rk4_step(g: &LindbladGenerator, rho: &DensityMatrix, dt: f64) -> Result<DensityMatrix> {
    check_dt(g, dt)?;
    Ok(rk4_counted(g, rho, dt).0)
}

/// Integrates to `t_max`, recording every step.
pub fn integrate(g: &LindbladGenerator, rho0: &DensityMatrix, t_max: f64, dt: f64) -> Result<TimeSeries> {
    integrate_strided(g, rho0, t_max, dt, 1)
}

/// Number of fixed steps covering `[0, t_max]`.
pub fn step_count(t_max: f64, dt: f64) -> usize {
    if t_max <= 0.0 {
        0
    } else {
        (t_max / dt - 1e-9).ceil() as usize
    }
}

/// Integrates to `t_max`, recording every `record_every`-th step (and step 0).
/// Invariants are checked at every step regardless of the stride.
pub fn integrate_strided(
    g: &LindbladGenerator,
    rho0: &DensityMatrix,
    t_max: f64,
    dt: f64,
    record_every: usize,
) -> Result<TimeSeries> {
    check_dt(g, dt)?;
    if !(t_max >= 0.0) {
        return Err(Error::InvalidParameter("t_max must be ≥ 0".into()));
    }
    let record_every = record_every.max(1);
    let steps = step_count(t_max, dt);
    let mut drift = DriftCounters {
        min_eigenvalue: rho0.min_eigenvalue()?,
        ..Default::default()
    };
    let mut times = Vec::with_capacity(steps / record_every + 2);
    let mut states = Vec::with_capacity(steps / record_every + 2);
    times.push(0.0);
    states.push(*rho0);

    let mut rho = *rho0;
    let mut purity = rho.purity();
    for step in 1..=steps {
        let (next, report) = rk4_counted(g, &rho, dt);
        let t = step as f64 * dt;
        drift.steps += 1;
        drift.renormalizations += usize::from(report.renormalized);
        drift.max_trace_drift = drift.max_trace_drift.max(report.trace_drift);
        drift.max_hermiticity_drift = drift.max_hermiticity_drift.max(report.hermiticity_drift);

        let min_eig = next.min_eigenvalue()?;
        drift.min_eigenvalue = drift.min_eigenvalue.min(min_eig);
        if !min_eig.is_finite() || min_eig < POSITIVITY_FAILURE {
            return Err(Error::InvariantViolation {
                step,
                t,
                detail: format!("minimum eigenvalue {min_eig:e}"),
            });
        }
        let p = next.purity();
        drift.max_purity_increase = drift.max_purity_increase.max(p - purity);
        purity = p;

        rho = next;
        if step % record_every == 0 || step == steps {
            times.push(t);
            states.push(rho);
        }
    }
    Ok(TimeSeries {
        times,
        states,
        meta: SeriesMeta {
            dt,
            record_every,
            generator: Some(*g),
            drift,
        },
    })
}

/// Non-zero components of an X-state confined to the {|00⟩,|11⟩} block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterBlock {
    pub rho11: f64,
    pub rho14: C64,
    pub rho44: f64,
}

impl OuterBlock {
    pub fn to_density(&self) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(4);
        m[(0, 0)] = C64::new(self.rho11, 0.0);
        m[(3, 3)] = C64::new(self.rho44, 0.0);
        m[(0, 3)] = self.rho14;
        m[(3, 0)] = self.rho14.conj();
        DensityMatrix::new_unchecked(m)
    }

    /// Largest deviation from the matching components of `rho`, including
    /// the components that should vanish.
    pub fn sup_distance(&self, rho: &DensityMatrix) -> f64 {
        (*self.to_density().matrix() - *rho.matrix()).max_abs()
    }
}

/// Closed-form unitary evolution of the initial state `initial_state(θ)`.
///
/// The `√(Ω²+ε²)` prefactor of the `sin` terms in ρ₁₄ is an energy; it is used
/// without an extra `1/ħ` so the matrix element stays dimensionless in SI.
pub fn closed_form_unitary(theta: f64, omega: f64, epsilon: f64, t: f64, k: &PhysicalConstants) -> OuterBlock {
    let w = omega.hypot(epsilon);
    let phase = 2.0 * t * w / k.hbar;
    let (s, c) = phase.sin_cos();
    let (s2, c2) = (2.0 * theta).sin_cos();
    let norm = 2.0 * w * w;
    let (om, ep) = (omega, epsilon);

    let rho11 = (om * om - om * ep * s2 + ep * ep * c2 + om * c * (om * c2 + ep * s2) + ep * ep) / norm;
    let rho44 = (om * om + om * ep * s2 - ep * ep * c2 - om * c * (om * c2 + ep * s2) + ep * ep) / norm;
    let i = C64::new(0.0, 1.0);
    let rho14 = (C64::new(om * c2, 0.0) * (-i * w * s + ep * c - ep)
        + C64::new(s2, 0.0) * (om * om - i * ep * w * s + ep * ep * c))
        / norm;
    OuterBlock { rho11, rho14, rho44 }
}

/// Systematic-LIV solution: the unitary closed form with `ε ↦ ε + A_n/2`.
pub fn systematic_liv_solution(
    theta: f64,
    omega: f64,
    epsilon: f64,
    a_n: f64,
    t: f64,
    k: &PhysicalConstants,
) -> OuterBlock {
    closed_form_unitary(theta, omega, epsilon + 0.5 * a_n, t, k)
}

/// `ρ_pq(t)/ρ_pq(0)` for a free particle in momentum representation.
///
/// The phase uses `Ẽ = E − ξ̄ σ_n E^{n/2}`; the damping exponent is
/// `σ_n² (ΔE^{n/2})² t_QG t / ħ²`, the rate implied by the master equation.
pub fn free_offdiag(p: f64, q: f64, t: f64, params: &MdrParams, k: &PhysicalConstants) -> C64 {
    let sigma = sigma_n(params, k);
    let half = f64::from(params.n) / 2.0;
    let energy = |mom: f64| mom * mom / (2.0 * params.mass);
    let (ep, eq) = (energy(p), energy(q));
    let deformed = |e: f64| e - params.xi_mean * sigma * e.powf(half);
    let d_tilde = deformed(ep) - deformed(eq);
    let d_half = ep.powf(half) - eq.powf(half);
    let decay = (-sigma * sigma * d_half * d_half * params.t_qg * t / (k.hbar * k.hbar)).exp();
    C64::from_polar(decay, -d_tilde * t / k.hbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::free_decoherence_time;
    use crate::gravcat::{build_h0, initial_state, make_generator, make_generic_generator, GravcatParams};

    fn natural() -> PhysicalConstants {
        PhysicalConstants::natural(1.0)
    }

    #[test]
    fn stationary_diagonal_state() {
        let h = ComplexMatrix::from_real_diag(&[1.0, 0.5, -0.2, 0.3]).unwrap();
        let g = make_generic_generator(h, ComplexMatrix::identity(4), 0.0, 1.0).unwrap();
        let rho = DensityMatrix::new(ComplexMatrix::from_real_diag(&[0.4, 0.3, 0.2, 0.1]).unwrap()).unwrap();
        let next = rk4_step(&g, &rho, 1e-3).unwrap();
        assert_eq!(next, rho);
    }

    #[test]
    fn maximally_mixed_is_fixed() {
        let k = natural();
        let g = make_generator(&GravcatParams::fig2(), &k).unwrap();
        let mixed = DensityMatrix::maximally_mixed();
        let next = rk4_step(&g, &mixed, 1e-3).unwrap();
        assert!((*next.matrix() - *mixed.matrix()).max_abs() <= 1e-14);
    }

    #[test]
    fn rk4_local_error_is_fifth_order() {
        // one step vs two half steps: the gap shrinks by 2⁵ when dt halves
        let k = natural();
        let g = make_generator(&GravcatParams::fig2(), &k).unwrap();
        let rho = initial_state(0.3);
        let gap = |dt: f64| {
            let one = rk4_step(&g, &rho, dt).unwrap();
            let half = rk4_step(&g, &rk4_step(&g, &rho, dt / 2.0).unwrap(), dt / 2.0).unwrap();
            (*one.matrix() - *half.matrix()).max_abs()
        };
        let ratio = gap(2e-3) / gap(1e-3);
        assert!((ratio - 32.0).abs() < 3.0, "ratio {ratio}");
    }

    #[test]
    fn step_guard_rejects_large_dt() {
        let g = make_generator(&GravcatParams::fig2(), &natural()).unwrap();
        let err = rk4_step(&g, &initial_state(0.0), 1.0).unwrap_err();
        match err {
            Error::StepTooLarge { suggested, max_dt, .. } => assert!(suggested < max_dt),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_time_integration() {
        let g = make_generator(&GravcatParams::fig2(), &natural()).unwrap();
        let rho0 = initial_state(0.0);
        let ts = integrate(&g, &rho0, 0.0, 1e-3).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts.states[0], rho0);
    }

    #[test]
    fn undeformed_theta0_matches_closed_form() {
        let k = natural();
        let mut p = GravcatParams::fig2();
        p.sigma = Some(0.0);
        let g = make_generator(&p, &k).unwrap();
        let tau = p.entanglement_time(&k).unwrap();
        let ts = integrate(&g, &initial_state(0.0), 5.0 * tau, tau / 1000.0).unwrap();
        for (t, rho) in ts.iter() {
            let cf = closed_form_unitary(0.0, 0.5, 1.0, t, &k);
            assert!((cf.rho11 - rho.population(0)).abs() < 1e-8);
        }
    }

    #[test]
    fn purity_never_increases_under_dissipation() {
        let k = natural();
        let g = make_generator(&GravcatParams::fig2(), &k).unwrap();
        let ts = integrate(&g, &initial_state(0.0), 20.0, 1e-3).unwrap();
        assert!(ts.meta.drift.max_purity_increase <= 1e-12);
        let first = ts.states[0].purity();
        let last = ts.last().unwrap().1.purity();
        assert!(last < first);
    }

    #[test]
    fn closed_form_initial_condition() {
        let k = natural();
        for th in [0.0, 0.3, std::f64::consts::FRAC_PI_4, 1.2] {
            let cf = closed_form_unitary(th, 0.7, 0.4, 0.0, &k);
            let want = initial_state(th);
            assert!(cf.sup_distance(&want) < 1e-15);
        }
    }

    #[test]
    fn closed_form_half_period() {
        let k = natural();
        let (om, ep) = (0.6_f64, 1.1_f64);
        let tau = om.hypot(ep).recip();
        let cf = closed_form_unitary(0.0, om, ep, std::f64::consts::FRAC_PI_2 * tau, &k);
        assert!((cf.rho11 - ep * ep / (om * om + ep * ep)).abs() < 1e-14);
    }

    #[test]
    fn closed_form_is_dimensionless_in_si() {
        // same dynamics in SI with energies ×ħ and times in seconds
        let si = PhysicalConstants::si();
        let nat = natural();
        let a = closed_form_unitary(0.4, 0.3 * si.hbar, 0.8 * si.hbar, 2.5, &si);
        let b = closed_form_unitary(0.4, 0.3, 0.8, 2.5, &nat);
        assert!((a.rho11 - b.rho11).abs() < 1e-12);
        assert!((a.rho14 - b.rho14).norm() < 1e-12);
    }

    #[test]
    fn systematic_zero_shift_is_unitary() {
        let k = natural();
        for t in [0.0, 0.7, 3.3] {
            assert_eq!(
                systematic_liv_solution(0.2, 0.5, 1.0, 0.0, t, &k),
                closed_form_unitary(0.2, 0.5, 1.0, t, &k)
            );
        }
    }

    #[test]
    fn free_offdiag_examples() {
        let k = PhysicalConstants::si();
        let params = MdrParams::new(1, 1e-14, k.t_planck).unwrap();
        assert_eq!(free_offdiag(3e-20, 3e-20, 10.0, &params, &k), C64::new(1.0, 0.0));

        let closed = MdrParams::new(2, 1e-14, 0.0).unwrap();
        assert!((free_offdiag(1e-20, 3e-20, 1e3, &closed, &k).norm() - 1.0).abs() < 1e-14);

        // |ρ_pq(τ_D)| = 1/e  (natural units keep the numbers tame)
        let kn = natural();
        let params = MdrParams::new(2, 1.3, 0.4).unwrap();
        let (p, q) = (0.9, 2.1);
        let e = |m: f64| m * m / (2.0 * params.mass);
        let dh = e(p).powf(1.0) - e(q).powf(1.0);
        let tau = free_decoherence_time(&params, dh * dh, &kn);
        let z = free_offdiag(p, q, tau, &params, &kn);
        assert!((z.norm() - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn undeformed_sector_stays_empty() {
        let k = natural();
        let g = make_generator(&GravcatParams::fig2(), &k).unwrap();
        let ts = integrate_strided(&g, &initial_state(0.5), 30.0, 1e-3, 100).unwrap();
        for (_, rho) in ts.iter() {
            for (i, j) in [(1, 1), (2, 2), (1, 2), (2, 1)] {
                assert!(rho.get(i, j).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn strided_records_endpoints() {
        let k = natural();
        let g = make_generator(&GravcatParams::fig2(), &k).unwrap();
        let ts = integrate_strided(&g, &initial_state(0.0), 1.0, 1e-3, 300).unwrap();
        assert_eq!(ts.times.first(), Some(&0.0));
        assert!((ts.times.last().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(ts.len(), 5);
        let h0 = build_h0(2.0, 1.0, 0.5, 0.5);
        assert_ne!(ts.meta.generator.unwrap().h_eff, h0);
    }
}
