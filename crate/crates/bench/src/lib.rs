//! Shared fixtures for the benchmarks.

use mirg_core::weights::sample_weights;
use mirg_core::{RngStream, WeightMatrix, WeightModelSpec};

pub fn single_factor_weights(n: usize, alpha: f64, seed: u64) -> WeightMatrix {
    let spec = WeightModelSpec::SingleFactor {
        alpha,
        angle: WeightModelSpec::cone_angle(),
    };
    sample_weights(&spec, n, &mut RngStream::new(seed, 0)).expect("valid spec")
}
