//! Simulation of Lorentz-invariance-violating decoherence on two-qubit
//! gravitational cat states.
//!
//! The crate is layered bottom-up:
//!
//! * [`linalg`]: fixed-size complex matrices, Kronecker products, a Jacobi
//!   Hermitian eigensolver and distance measures.
//! * [`dispersion`]: modified-dispersion kinematics, σ_n, decoherence
//!   timescales and critical energy scales.
//! * [`gravcat`]: the two-particle Hamiltonian, kinetic operator,
//!   attenuation coefficient and Lindblad generator.
//! * [`evolve`]: RK4 integration of the master equation plus closed-form
//!   solutions.
//! * [`stochastic`]: the seeded pure-state unraveling whose ensemble mean
//!   converges to the master equation.
//! * [`observables`]: concurrence (X-state and Wootters), populations, purity.

pub mod dispersion;
pub mod error;
pub mod evolve;
pub mod gravcat;
pub mod linalg;
pub mod observables;
pub mod state;
pub mod stochastic;

pub use dispersion::{MdrParams, PhysicalConstants, UnitSystem};
pub use error::{Error, Result};
pub use evolve::{DriftCounters, OuterBlock, SeriesMeta, TimeSeries};
pub use gravcat::{CouplingConstants, GravcatParams, LindbladGenerator};
pub use linalg::{ComplexMatrix, HermitianEigen, C64};
pub use observables::ObservableRecord;
pub use state::DensityMatrix;
pub use stochastic::{NoiseModel, TrajectoryEnsemble};
