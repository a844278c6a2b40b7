//! Seeded Gaussian-blob classification data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Class centers are drawn uniformly from `[-CENTER_BOX, CENTER_BOX]^dims`.
pub const CENTER_BOX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub points: Vec<(Vec<f64>, usize)>,
    pub class_count: usize,
    pub dims: usize,
    pub centers: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for (_, c) in &self.points {
            counts[*c] += 1;
        }
        counts
    }
}

/// Parameters of [`make_blobs`], as they appear in experiment files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobsConfig {
    pub classes: usize,
    pub dims: usize,
    pub per_class: usize,
    pub spread: f64,
    pub seed: u64,
}

impl BlobsConfig {
    pub fn generate(&self) -> Result<SyntheticDataset> {
        make_blobs(
            self.classes,
            self.dims,
            self.per_class,
            self.spread,
            self.seed,
        )
    }
}

/// `classes` isotropic Gaussian clusters of `per_class` points each, with
/// standard deviation `spread` around seeded centers. Points are grouped by
/// class in ascending order.
pub fn make_blobs(
    classes: usize,
    dims: usize,
    per_class: usize,
    spread: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    if classes < 2 {
        return Err(validation(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if dims == 0 || per_class == 0 {
        return Err(validation("dims and per_class must be positive"));
    }
    if !spread.is_finite() || spread < 0.0 {
        return Err(validation(format!(
            "spread must be finite and non-negative, got {spread}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            (0..dims)
                .map(|_| rng.random_range(-CENTER_BOX..=CENTER_BOX))
                .collect()
        })
        .collect();
    let mut points = Vec::with_capacity(classes * per_class);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let x = center
                .iter()
                .map(|c| {
                    let z: f64 = rng.sample(StandardNormal);
                    c + spread * z
                })
                .collect();
            points.push((x, class));
        }
    }
    Ok(SyntheticDataset {
        points,
        class_count: classes,
        dims,
        centers,
        seed,
    })
}
