//! Shared fixtures for the criterion benchmarks.

use dfsslab_core::{DeltaMatrix, LindbladModel};
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic dense symmetric coupling matrix with entries in [-1, 1).
pub fn seeded_symmetric(n: usize, seed: u64) -> DeltaMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random::<f64>() * 2.0 - 1.0;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    DeltaMatrix::new(m).expect("symmetric by construction")
}

pub fn seeded_model(n: usize, seed: u64) -> LindbladModel {
    LindbladModel::new(seeded_symmetric(n, seed), 1.0).expect("valid model")
}
