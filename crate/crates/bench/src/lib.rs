//! Fixtures shared by the criterion benches.

use variety_core::{Distribution, WeightMatrix};

/// Distribution over `n` labels with weights `1, 2, ..., n`.
pub fn ramp_distribution(n: usize) -> Distribution {
    let total = (n * (n + 1) / 2) as f64;
    Distribution::new((1..=n).map(|i| (format!("x{i:05}"), i as f64 / total)))
        .expect("ramp weights sum to one")
}

/// Deterministic dense `n x n` matrix with a spread-out spectrum.
pub fn test_matrix(n: usize) -> WeightMatrix {
    let values = (0..n * n)
        .map(|k| {
            let (i, j) = ((k / n) as f64, (k % n) as f64);
            (0.37 * i + 1.13 * j).sin() + if i == j { 1.0 } else { 0.0 }
        })
        .collect();
    WeightMatrix::new("bench", n, n, values).expect("finite values")
}
