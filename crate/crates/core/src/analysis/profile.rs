//! Per-layer, per-epoch entropy profiles and core/periphery layer labels.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spectrum::layer_entropy;
use super::weights::{weight_delta, WeightRun};
use crate::error::{validation, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineRef {
    pub run_id: String,
    pub epoch: usize,
}

/// Entropy of every layer at every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub run_id: String,
    pub layers: Vec<String>,
    pub epochs: Vec<usize>,
    /// `bits[layer][epoch position]`
    pub bits: Vec<Vec<f64>>,
    /// Whether deltas were taken against a baseline.
    pub baseline: Option<BaselineRef>,
    /// Cells whose matrix was all zeros; their entropy is reported as 0.
    pub degenerate: Vec<DegenerateCell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateCell {
    pub layer: String,
    pub epoch: usize,
}

impl EntropyProfile {
    pub fn layer_bits(&self, layer: &str) -> Option<&[f64]> {
        self.layers
            .iter()
            .position(|l| l == layer)
            .map(|i| self.bits[i].as_slice())
    }

    /// Rows of `(layer, epoch, bits)` in layer-major order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, usize, f64)> + '_ {
        self.layers
            .iter()
            .zip(&self.bits)
            .flat_map(move |(l, row)| {
                self.epochs
                    .iter()
                    .zip(row)
                    .map(move |(&e, &h)| (l.as_str(), e, h))
            })
    }

    pub fn is_degenerate(&self) -> bool {
        !self.degenerate.is_empty()
    }

    /// Writes `layer,epoch,entropy_bits` with full-precision values.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["layer", "epoch", "entropy_bits"])?;
        for (layer, epoch, bits) in self.entries() {
            w.write_record([layer.to_string(), epoch.to_string(), bits.to_string()])?;
        }
        w.flush()
    }
}

/// Computes the spectral entropy of each layer at each epoch, after
/// subtracting the run's baseline when it has one.
pub fn entropy_profile(run: &WeightRun) -> Result<EntropyProfile> {
    run.validate()?;
    let layers: Vec<String> = run.layer_names().into_iter().map(str::to_owned).collect();
    let epochs: Vec<usize> = run.epochs.iter().map(|e| e.index).collect();

    let cells: Vec<(usize, usize)> = (0..layers.len())
        .flat_map(|l| (0..epochs.len()).map(move |e| (l, e)))
        .collect();
    let results: Vec<Result<Option<f64>>> = cells
        .par_iter()
        .map(|&(l, e)| {
            let m = &run.epochs[e].layers[l];
            let at = |err: Error| match err {
                Error::Validation(msg) => {
                    validation(format!("layer {:?} epoch {}: {msg}", layers[l], epochs[e]))
                }
                other => other,
            };
            let target = match &run.baseline {
                Some(b) => weight_delta(m, &b.aligned_to(m).map_err(at)?).map_err(at)?,
                None => m.clone(),
            };
            match layer_entropy(&target) {
                Ok(h) => Ok(Some(h)),
                Err(Error::Degenerate(_)) => Ok(None),
                Err(err) => Err(at(err)),
            }
        })
        .collect();

    let mut bits = vec![vec![0.0; epochs.len()]; layers.len()];
    let mut degenerate = Vec::new();
    for (&(l, e), r) in cells.iter().zip(results) {
        match r? {
            Some(h) => bits[l][e] = h,
            None => degenerate.push(DegenerateCell {
                layer: layers[l].clone(),
                epoch: epochs[e],
            }),
        }
    }
    Ok(EntropyProfile {
        run_id: run.run_id.clone(),
        layers,
        epochs,
        bits,
        baseline: run.baseline.as_ref().map(|b| BaselineRef {
            run_id: b.run_id.clone(),
            epoch: b.epoch,
        }),
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerRole {
    Core,
    Periphery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerLabel {
    pub layer: String,
    /// max - min of the layer's entropy across epochs
    pub range: f64,
    pub role: LayerRole,
}

fn ranges(p: &EntropyProfile) -> Result<Vec<f64>> {
    if p.epochs.len() < 2 {
        return Err(validation(format!(
            "need at least 2 epochs to classify layers, got {}",
            p.epochs.len()
        )));
    }
    Ok(p.bits
        .iter()
        .map(|row| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            max - min
        })
        .collect())
}

/// Labels a layer core when its entropy range stays within `stability_threshold`.
pub fn classify_layers(p: &EntropyProfile, stability_threshold: f64) -> Result<Vec<LayerLabel>> {
    if stability_threshold.is_nan() || stability_threshold < 0.0 {
        return Err(validation(format!(
            "stability threshold must be non-negative, got {stability_threshold}"
        )));
    }
    Ok(p.layers
        .iter()
        .zip(ranges(p)?)
        .map(|(layer, range)| LayerLabel {
            layer: layer.clone(),
            range,
            role: if range <= stability_threshold {
                LayerRole::Core
            } else {
                LayerRole::Periphery
            },
        })
        .collect())
}

/// Median of the per-layer entropy ranges, the default stability threshold.
pub fn median_range_threshold(p: &EntropyProfile) -> Result<f64> {
    let mut r = ranges(p)?;
    r.sort_by(f64::total_cmp);
    let n = r.len();
    Ok(if n % 2 == 1 {
        r[n / 2]
    } else {
        0.5 * (r[n / 2 - 1] + r[n / 2])
    })
}
