//! Shared fixtures for the criterion benchmarks.

use arcgate::{preset, ArcGateParams, Preset};

/// Evenly spaced inputs on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn soft_relu() -> ArcGateParams {
    preset(Preset::SoftReluInit).expect("valid preset")
}
