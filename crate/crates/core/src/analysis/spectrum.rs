//! Spectral entropy of a weight matrix.
//!
//! The singular values are normalized by their sum to form a probability
//! vector, and the Shannon entropy of that vector is the layer's variety.
//! An identity matrix spreads mass evenly over `n` singular values and scores
//! `log2 n`; a rank-one matrix scores 0.

use nalgebra::DMatrix;

use super::weights::WeightMatrix;
use crate::error::{Error, Result};
use crate::variety::normalized_bits;

/// Singular values below this fraction of the largest are treated as zero.
pub const RELATIVE_RANK_CUTOFF: f64 = 1e-12;

/// Singular values in descending order.
pub fn singular_values(m: &WeightMatrix) -> Vec<f64> {
    let dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.values());
    let mut sv: Vec<f64> = dm.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Singular values that survive the relative cutoff.
pub fn significant_singular_values(m: &WeightMatrix) -> Vec<f64> {
    let sv = singular_values(m);
    let max = sv.first().copied().unwrap_or(0.0);
    sv.into_iter()
        .filter(|&s| s > 0.0 && s >= RELATIVE_RANK_CUTOFF * max)
        .collect()
}

/// Entropy in bits of the normalized singular spectrum of `m`.
///
/// Fails with [`Error::Degenerate`] on an all-zero matrix, whose spectrum
/// cannot be normalized.
pub fn layer_entropy(m: &WeightMatrix) -> Result<f64> {
    if m.is_zero() {
        return Err(Error::Degenerate(format!(
            "layer {:?} is all zeros; spectral entropy undefined",
            m.layer_name()
        )));
    }
    let sv = significant_singular_values(m);
    normalized_bits(&sv).ok_or_else(|| {
        Error::Degenerate(format!("layer {:?} has an empty spectrum", m.layer_name()))
    })
}
