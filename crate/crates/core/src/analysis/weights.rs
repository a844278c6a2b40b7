//! Per-layer weight matrices and per-epoch weight runs.

use std::collections::BTreeSet;

use crate::error::{validation, Result};

/// A dense row-major 2-D weight matrix belonging to a named layer.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    layer_name: String,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(
        layer_name: impl Into<String>,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let layer_name = layer_name.into();
        if layer_name.is_empty() {
            return Err(validation("layer name must be non-empty"));
        }
        if rows == 0 || cols == 0 {
            return Err(validation(format!(
                "layer {layer_name:?}: shape {rows}x{cols} has a zero dimension"
            )));
        }
        if rows.checked_mul(cols) != Some(values.len()) {
            return Err(validation(format!(
                "layer {layer_name:?}: {} values for shape {rows}x{cols}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(validation(format!(
                "layer {layer_name:?}: non-finite value at ({}, {})",
                i / cols,
                i % cols
            )));
        }
        Ok(WeightMatrix {
            layer_name,
            rows,
            cols,
            values,
        })
    }

    pub fn zeros(layer_name: impl Into<String>, rows: usize, cols: usize) -> Result<Self> {
        WeightMatrix::new(layer_name, rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(layer_name: impl Into<String>, n: usize) -> Result<Self> {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        WeightMatrix::new(layer_name, n, n, values)
    }

    /// Builds from nested rows; all rows must have equal length.
    pub fn from_rows(layer_name: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|r| r.len() != cols) {
            return Err(validation(format!("ragged matrix at row {}", r + 1)));
        }
        WeightMatrix::new(layer_name, rows.len(), cols, rows.concat())
    }

    pub fn layer_name(&self) -> &str {
        &self.layer_name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> WeightMatrix {
        let mut values = Vec::with_capacity(self.values.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                values.push(self.get(r, c));
            }
        }
        WeightMatrix {
            layer_name: self.layer_name.clone(),
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }

    pub fn renamed(mut self, layer_name: impl Into<String>) -> Self {
        self.layer_name = layer_name.into();
        self
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Pads with zero rows up to `rows`. Used to align a baseline against an
    /// output layer that gained rows after a context shift.
    pub(crate) fn padded_rows(&self, rows: usize) -> WeightMatrix {
        let mut values = self.values.clone();
        values.resize(rows * self.cols, 0.0);
        WeightMatrix {
            layer_name: self.layer_name.clone(),
            rows,
            cols: self.cols,
            values,
        }
    }
}

/// Elementwise `epoch - baseline`. Names and shapes must match exactly.
pub fn weight_delta(epoch: &WeightMatrix, baseline: &WeightMatrix) -> Result<WeightMatrix> {
    if epoch.layer_name != baseline.layer_name {
        return Err(validation(format!(
            "layer mismatch: {:?} vs baseline {:?}",
            epoch.layer_name, baseline.layer_name
        )));
    }
    if epoch.shape() != baseline.shape() {
        return Err(validation(format!(
            "layer {:?}: shape {}x{} vs baseline shape {}x{}",
            epoch.layer_name, epoch.rows, epoch.cols, baseline.rows, baseline.cols
        )));
    }
    let values = epoch
        .values
        .iter()
        .zip(&baseline.values)
        .map(|(a, b)| a - b)
        .collect();
    Ok(WeightMatrix {
        layer_name: epoch.layer_name.clone(),
        rows: epoch.rows,
        cols: epoch.cols,
        values,
    })
}

/// All layer matrices recorded at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub index: usize,
    pub layers: Vec<WeightMatrix>,
}

impl Epoch {
    pub fn layer(&self, name: &str) -> Option<&WeightMatrix> {
        self.layers.iter().find(|m| m.layer_name == name)
    }
}

/// One epoch of another run that deltas are taken against.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub run_id: String,
    pub epoch: usize,
    pub layers: Vec<WeightMatrix>,
}

impl Baseline {
    pub fn from_run(run: &WeightRun, epoch: usize) -> Result<Self> {
        let e = run
            .epochs
            .iter()
            .find(|e| e.index == epoch)
            .ok_or_else(|| validation(format!("run {:?} has no epoch {epoch}", run.run_id)))?;
        Ok(Baseline {
            run_id: run.run_id.clone(),
            epoch,
            layers: e.layers.clone(),
        })
    }

    /// The baseline matrix to subtract from `m`. A baseline with fewer rows
    /// but the same column count is zero-padded: rows added after the
    /// baseline was taken have no inherited weights.
    pub fn aligned_to(&self, m: &WeightMatrix) -> Result<WeightMatrix> {
        let b = self
            .layers
            .iter()
            .find(|b| b.layer_name == m.layer_name)
            .ok_or_else(|| validation(format!("baseline has no layer {:?}", m.layer_name)))?;
        if b.cols == m.cols && b.rows < m.rows {
            Ok(b.padded_rows(m.rows))
        } else {
            Ok(b.clone())
        }
    }
}

/// Weight matrices of every layer, for each recorded epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRun {
    pub run_id: String,
    pub epochs: Vec<Epoch>,
    pub baseline: Option<Baseline>,
}

impl WeightRun {
    /// Checks epoch ordering, layer consistency, and baseline compatibility.
    pub fn validate(&self) -> Result<()> {
        if self.run_id.is_empty() {
            return Err(validation("run_id must be non-empty"));
        }
        let first = self
            .epochs
            .first()
            .ok_or_else(|| validation(format!("run {:?} has no epochs", self.run_id)))?;
        if first.layers.is_empty() {
            return Err(validation(format!("run {:?} has no layers", self.run_id)));
        }
        let mut names = BTreeSet::new();
        for m in &first.layers {
            if !names.insert(m.layer_name.as_str()) {
                return Err(validation(format!(
                    "duplicate layer name {:?}",
                    m.layer_name
                )));
            }
        }
        for w in self.epochs.windows(2) {
            if w[1].index <= w[0].index {
                return Err(validation(format!(
                    "epoch indices not strictly increasing: {} then {}",
                    w[0].index, w[1].index
                )));
            }
        }
        for e in &self.epochs[1..] {
            let same = e.layers.len() == first.layers.len()
                && e.layers
                    .iter()
                    .zip(&first.layers)
                    .all(|(a, b)| a.layer_name == b.layer_name && a.shape() == b.shape());
            if !same {
                return Err(validation(format!(
                    "epoch {} layers differ from epoch {}",
                    e.index, first.index
                )));
            }
        }
        if let Some(b) = &self.baseline {
            for m in &first.layers {
                let aligned = b.aligned_to(m)?;
                if aligned.shape() != m.shape() {
                    return Err(validation(format!(
                        "layer {:?}: shape {}x{} vs baseline shape {}x{}",
                        m.layer_name, m.rows, m.cols, aligned.rows, aligned.cols
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn layer_names(&self) -> Vec<&str> {
        self.epochs
            .first()
            .map(|e| e.layers.iter().map(WeightMatrix::layer_name).collect())
            .unwrap_or_default()
    }

    pub fn epoch(&self, index: usize) -> Option<&Epoch> {
        self.epochs.iter().find(|e| e.index == index)
    }

    pub fn last_epoch(&self) -> Option<&Epoch> {
        self.epochs.last()
    }
}
