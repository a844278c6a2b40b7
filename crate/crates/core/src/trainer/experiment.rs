//! Context-shift experiment: train on task A, continue on task B from A's
//! final weights, and link B's baseline to A's last epoch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{BlobsConfig, SyntheticDataset};
use super::mlp::{train, MlpConfig, TrainOutcome};
use crate::analysis::{Baseline, Epoch, WeightMatrix};
use crate::error::{validation, Result};

/// Stream used for freshly initialized output rows, kept apart from the
/// training stream of the same seed.
const WIDEN_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOutcome {
    pub run_a: TrainOutcome,
    /// Baseline points at the final epoch of `run_a`.
    pub run_b: TrainOutcome,
}

/// Carries `from` into a network shaped by `config`. Hidden layers must
/// match; the output layer may gain rows, which are initialized uniformly in
/// `[-init_scale, init_scale]` from `config.seed`.
pub fn widen_output(from: &Epoch, config: &MlpConfig) -> Result<Epoch> {
    let shapes = config.shapes();
    if from.layers.len() != shapes.len() {
        return Err(validation(format!(
            "task B has {} layers, task A has {}",
            shapes.len(),
            from.layers.len()
        )));
    }
    let last = shapes.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(WIDEN_STREAM);
    let mut layers = Vec::with_capacity(shapes.len());
    for (i, (m, &(rows, cols))) in from.layers.iter().zip(&shapes).enumerate() {
        if m.cols() != cols {
            return Err(validation(format!(
                "layer {:?}: task A has {} inputs, task B expects {}",
                m.layer_name(),
                m.cols() - 1,
                cols - 1
            )));
        }
        if i < last && m.rows() != rows {
            return Err(validation(format!(
                "hidden layer {:?} changes width from {} to {}",
                m.layer_name(),
                m.rows(),
                rows
            )));
        }
        if i == last && rows < m.rows() {
            return Err(validation(format!(
                "output layer shrinks from {} to {rows} classes",
                m.rows()
            )));
        }
        let mut values = m.values().to_vec();
        let s = config.init_scale;
        values.extend((0..(rows - m.rows()) * cols).map(|_| rng.random_range(-s..=s)));
        layers.push(WeightMatrix::new(m.layer_name(), rows, cols, values)?);
    }
    Ok(Epoch { index: 0, layers })
}

pub fn context_shift_experiment(
    config_a: &MlpConfig,
    data_a: &SyntheticDataset,
    config_b: &MlpConfig,
    data_b: &SyntheticDataset,
) -> Result<ShiftOutcome> {
    config_a.validate()?;
    config_b.validate()?;
    if config_a.input_size() != config_b.input_size() {
        return Err(validation(format!(
            "task input sizes differ: {} vs {}",
            config_a.input_size(),
            config_b.input_size()
        )));
    }
    let run_a = train("runA", config_a, data_a, None)?;
    let last = run_a.run.last_epoch().expect("training records epoch 0");
    let start = widen_output(last, config_b)?;
    let mut run_b = train("runB", config_b, data_b, Some(&start))?;
    run_b.run.baseline = Some(Baseline::from_run(&run_a.run, last.index)?);
    Ok(ShiftOutcome { run_a, run_b })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub run_id: String,
    pub mlp: MlpConfig,
    pub data: BlobsConfig,
}

/// Experiment file for the `train-toy` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task_a: TaskConfig,
    pub task_b: TaskConfig,
}

impl ExperimentConfig {
    pub fn run(&self) -> Result<ShiftOutcome> {
        if self.task_a.run_id == self.task_b.run_id {
            return Err(validation("task run ids must differ"));
        }
        let data_a = self.task_a.data.generate()?;
        let data_b = self.task_b.data.generate()?;
        let mut out =
            context_shift_experiment(&self.task_a.mlp, &data_a, &self.task_b.mlp, &data_b)?;
        out.run_a.run.run_id = self.task_a.run_id.clone();
        out.run_b.run.run_id = self.task_b.run_id.clone();
        if let Some(b) = out.run_b.run.baseline.as_mut() {
            b.run_id = self.task_a.run_id.clone();
        }
        Ok(out)
    }
}
