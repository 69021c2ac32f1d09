//! Fixtures shared by the kernel benchmarks.

use fdout_core::simmodels::{simulation_model, ModelParams};
use fdout_core::CurveSample;

/// Model 1 curves with 10% contamination, seeded.
pub fn model1(n: usize, p: usize) -> CurveSample {
    simulation_model(1, n, p, 0.1, true, 42, &ModelParams::default())
        .expect("valid simulation settings")
        .data
}

/// (n, p) sizes each kernel is timed at.
pub const SIZES: &[(usize, usize)] = &[(100, 50), (500, 100), (2000, 100)];
