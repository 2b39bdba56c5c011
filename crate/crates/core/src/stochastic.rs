//! Monte Carlo unraveling of the master equation.
//!
//! Each trajectory evolves a pure state under the fluctuating Hamiltonian
//! `H₀ − σ_n ξ(t) K̂^{n/2}` with `ξ(t) = ξ̄ + (white noise)`. A step of length
//! `dt` draws one Gaussian `g` and applies the exact unitary
//!
//! ```text
//! U = exp(−(i/ħ) [H₀ dt − σ_n K̂^{n/2} (ξ̄ dt + √(2 t_QG dt) g)])
//! ```
//!
//! The mean of ξ reproduces the `−ξ̄σ_n K̂^{n/2}` drift of `h_eff`, and the
//! fluctuation averages to the double commutator with rate `σ_n² t_QG/ħ²`.
//!
//! Trajectory `i` is seeded with `base_seed + i` and ensemble sums are reduced
//! in index order, so results are bitwise identical for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dispersion::PhysicalConstants;
use crate::error::{Error, Result};
use crate::evolve::{max_stable_dt, step_count, DriftCounters, SeriesMeta, TimeSeries};
use crate::gravcat::{build_h0, build_kinetic, make_generator, GravcatParams};
use crate::linalg::{diag_power, hermitian_eigen, ComplexMatrix, C64};
use crate::state::DensityMatrix;

/// Recorded in output metadata so runs can be replayed.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64), StandardNormal (rand_distr 0.4)";

/// Norm drift above which a trajectory is rejected.
pub const NORM_DRIFT_LIMIT: f64 = 1e-9;

/// Trajectories evaluated per parallel batch before the ordered reduction.
const BATCH: usize = 64;

/// White-noise model of ξ_n on a fixed step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// ⟨ξ_n⟩
    pub mean: f64,
    pub t_qg: f64,
    pub dt: f64,
}

impl NoiseModel {
    pub fn new(mean: f64, t_qg: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter("noise step dt must be positive".into()));
        }
        if !(t_qg >= 0.0) {
            return Err(Error::InvalidParameter("t_QG must be ≥ 0".into()));
        }
        Ok(Self { mean, t_qg, dt })
    }

    /// Noise matched to a parameter set.
    pub fn for_params(p: &GravcatParams, dt: f64) -> Result<Self> {
        Self::new(p.xi_mean, p.t_qg, dt)
    }

    /// Variance of [`NoiseModel::increment`].
    pub fn increment_variance(&self) -> f64 {
        2.0 * self.t_qg * self.dt
    }

    /// `∫ξ dt` over one step for a standard normal draw `g`.
    #[inline]
    pub fn increment(&self, g: f64) -> f64 {
        self.mean * self.dt + self.increment_variance().sqrt() * g
    }
}

struct Propagator {
    h0_dt: ComplexMatrix,
    lindblad_diag: [f64; 4],
    sigma: f64,
    hbar: f64,
    noise: NoiseModel,
}

impl Propagator {
    fn new(p: &GravcatParams, noise: &NoiseModel, k: &PhysicalConstants) -> Result<Self> {
        let g = make_generator(p, k)?;
        let max_dt = max_stable_dt(&g);
        if noise.dt > max_dt {
            return Err(Error::StepTooLarge {
                dt: noise.dt,
                max_dt,
                suggested: 0.5 * max_dt,
            });
        }
        let c = p.couplings(k);
        let h0 = build_h0(p.e_ref, p.epsilon, c.omega, c.gamma);
        let l = diag_power(&build_kinetic(p.e_ref, p.epsilon)?, f64::from(p.n) / 2.0)?;
        Ok(Self {
            h0_dt: h0.scale_real(noise.dt),
            lindblad_diag: [l[(0, 0)].re, l[(1, 1)].re, l[(2, 2)].re, l[(3, 3)].re],
            sigma: p.sigma_n(k),
            hbar: k.hbar,
            noise: *noise,
        })
    }

    fn step(&self, psi: &[C64; 4], g: f64) -> Result<[C64; 4]> {
        let kick = self.sigma * self.noise.increment(g);
        let mut gen = self.h0_dt;
        for i in 0..4 {
            gen[(i, i)] -= C64::new(kick * self.lindblad_diag[i], 0.0);
        }
        let eig = hermitian_eigen(&gen, f64::INFINITY)?;
        let hbar = self.hbar;
        let u = eig.map_spectrum(|l| C64::from_polar(1.0, -l / hbar));
        let mut out = [C64::new(0.0, 0.0); 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| u[(i, j)] * psi[j]).sum();
        }
        Ok(out)
    }
}

struct RawTrajectory {
    states: Vec<[C64; 4]>,
    max_norm_drift: f64,
}

fn run_trajectory(
    prop: &Propagator,
    psi0: [C64; 4],
    steps: usize,
    record_every: usize,
    seed: u64,
) -> Result<RawTrajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(steps / record_every + 2);
    states.push(psi0);
    let mut psi = psi0;
    let mut max_norm_drift = 0.0_f64;
    for step in 1..=steps {
        let g: f64 = StandardNormal.sample(&mut rng);
        psi = prop.step(&psi, g)?;
        let drift = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs();
        max_norm_drift = max_norm_drift.max(drift);
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift(drift));
        }
        if step % record_every == 0 || step == steps {
            states.push(psi);
        }
    }
    Ok(RawTrajectory {
        states,
        max_norm_drift,
    })
}

fn initial_vector(theta: f64) -> [C64; 4] {
    let (s, c) = theta.sin_cos();
    [C64::new(c, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]
}

fn recorded_times(steps: usize, record_every: usize, dt: f64) -> Vec<f64> {
    let mut times = vec![0.0];
    for step in 1..=steps {
        if step % record_every == 0 || step == steps {
            times.push(step as f64 * dt);
        }
    }
    times
}

/// One pure-state trajectory starting from `initial_state(p.theta)`, recording every step.
pub fn sample_trajectory(
    p: &GravcatParams,
    noise: &NoiseModel,
    t_max: f64,
    seed: u64,
    k: &PhysicalConstants,
) -> Result<TimeSeries> {
    sample_trajectory_strided(p, noise, t_max, seed, 1, k)
}

pub fn sample_trajectory_strided(
    p: &GravcatParams,
    noise: &NoiseModel,
    t_max: f64,
    seed: u64,
    record_every: usize,
    k: &PhysicalConstants,
) -> Result<TimeSeries> {
    let record_every = record_every.max(1);
    let prop = Propagator::new(p, noise, k)?;
    let steps = step_count(t_max, noise.dt);
    let raw = run_trajectory(&prop, initial_vector(p.theta), steps, record_every, seed)?;
    let states = raw
        .states
        .iter()
        .map(|psi| DensityMatrix::new_unchecked(ComplexMatrix::outer(psi, psi).expect("4-vectors")))
        .collect();
    Ok(TimeSeries {
        times: recorded_times(steps, record_every, noise.dt),
        states,
        meta: SeriesMeta {
            dt: noise.dt,
            record_every,
            generator: Some(make_generator(p, k)?),
            drift: DriftCounters {
                steps,
                max_trace_drift: raw.max_norm_drift,
                min_eigenvalue: 0.0,
                ..Default::default()
            },
        },
    })
}

/// Ensemble mean of seeded trajectories with per-entry standard errors.
#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub base_seed: u64,
    pub mean_states: TimeSeries,
    /// Standard error of each matrix entry: real part carries the error of
    /// Re ρ_ij, imaginary part the error of Im ρ_ij.
    pub std_err: Vec<ComplexMatrix>,
}

pub fn ensemble_average(
    p: &GravcatParams,
    noise: &NoiseModel,
    t_max: f64,
    n_traj: usize,
    base_seed: u64,
    k: &PhysicalConstants,
) -> Result<TrajectoryEnsemble> {
    ensemble_average_strided(p, noise, t_max, n_traj, base_seed, 1, k)
}

pub fn ensemble_average_strided(
    p: &GravcatParams,
    noise: &NoiseModel,
    t_max: f64,
    n_traj: usize,
    base_seed: u64,
    record_every: usize,
    k: &PhysicalConstants,
) -> Result<TrajectoryEnsemble> {
    if n_traj < 2 {
        return Err(Error::InvalidParameter("ensemble needs at least 2 trajectories".into()));
    }
    let record_every = record_every.max(1);
    let prop = Propagator::new(p, noise, k)?;
    let steps = step_count(t_max, noise.dt);
    let times = recorded_times(steps, record_every, noise.dt);
    let n_rec = times.len();
    let psi0 = initial_vector(p.theta);

    let mut sum = vec![ComplexMatrix::zeros(4); n_rec];
    // Σ (Re ρ_ij)² in .re and Σ (Im ρ_ij)² in .im
    let mut sum_sq = vec![ComplexMatrix::zeros(4); n_rec];
    let mut max_norm_drift = 0.0_f64;

    let indices: Vec<u64> = (0..n_traj as u64).collect();
    for batch in indices.chunks(BATCH) {
        let results: Vec<RawTrajectory> = batch
            .par_iter()
            .map(|&i| run_trajectory(&prop, psi0, steps, record_every, base_seed.wrapping_add(i)))
            .collect::<Result<_>>()?;
        for traj in &results {
            max_norm_drift = max_norm_drift.max(traj.max_norm_drift);
            for (r, psi) in traj.states.iter().enumerate() {
                let rho = ComplexMatrix::outer(psi, psi).expect("4-vectors");
                sum[r] += rho;
                let sq = &mut sum_sq[r];
                for i in 0..4 {
                    for j in 0..4 {
                        let z = rho[(i, j)];
                        sq[(i, j)] += C64::new(z.re * z.re, z.im * z.im);
                    }
                }
            }
        }
    }

    let nf = n_traj as f64;
    let mut states = Vec::with_capacity(n_rec);
    let mut std_err = Vec::with_capacity(n_rec);
    for (s, sq) in sum.iter().zip(&sum_sq) {
        let mean = s.scale_real(1.0 / nf);
        let mut se = ComplexMatrix::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                let m = mean[(i, j)];
                let var_re = ((sq[(i, j)].re - nf * m.re * m.re) / (nf - 1.0)).max(0.0);
                let var_im = ((sq[(i, j)].im - nf * m.im * m.im) / (nf - 1.0)).max(0.0);
                se[(i, j)] = C64::new((var_re / nf).sqrt(), (var_im / nf).sqrt());
            }
        }
        states.push(DensityMatrix::new_unchecked(mean));
        std_err.push(se);
    }

    Ok(TrajectoryEnsemble {
        n_traj,
        base_seed,
        mean_states: TimeSeries {
            times,
            states,
            meta: SeriesMeta {
                dt: noise.dt,
                record_every,
                generator: Some(make_generator(p, k)?),
                drift: DriftCounters {
                    steps,
                    max_trace_drift: max_norm_drift,
                    ..Default::default()
                },
            },
        },
        std_err,
    })
}
