//! Shared fixtures for the criterion benchmarks.

use gravcat_core::{GravcatParams, NoiseModel};

/// Natural-unit parameter point used by the unraveling convergence check.
pub fn desk_params() -> GravcatParams {
    GravcatParams::fig2()
}

pub fn desk_noise(dt: f64) -> NoiseModel {
    NoiseModel::for_params(&desk_params(), dt).expect("valid desk noise")
}
