//! Core/periphery partitioning of time-indexed system snapshots.
//!
//! Two readings are supported. [`PartitionMode::Formal`] takes the residual
//! change as the elements added between `t` and `t'` (`X^t' \ X^t`) and the
//! core as the `t` structure minus that residual. [`PartitionMode::Prose`]
//! treats any element not present at both times as residual, which makes the
//! core the per-set intersection and the periphery the symmetric difference.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::variety::ComponentSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSnapshot {
    pub time: i64,
    pub inputs: ComponentSet,
    pub outputs: ComponentSet,
}

impl SystemSnapshot {
    pub fn new(time: i64, inputs: ComponentSet, outputs: ComponentSet) -> Self {
        SystemSnapshot {
            time,
            inputs,
            outputs,
        }
    }
}

/// An input set and an output set, handled independently.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentPair {
    pub inputs: ComponentSet,
    pub outputs: ComponentSet,
}

impl ComponentPair {
    fn zip(
        a: (&ComponentSet, &ComponentSet),
        b: (&ComponentSet, &ComponentSet),
        f: impl Fn(&ComponentSet, &ComponentSet) -> ComponentSet,
    ) -> Self {
        ComponentPair {
            inputs: f(a.0, b.0),
            outputs: f(a.1, b.1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty() && self.outputs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    Formal,
    #[default]
    Prose,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub core: ComponentPair,
    pub periphery: ComponentPair,
    pub mode: PartitionMode,
    pub span: (i64, i64),
}

fn check_order(at: &SystemSnapshot, later: &SystemSnapshot) -> Result<()> {
    if at.time < later.time {
        Ok(())
    } else {
        Err(Error::Ordering {
            at: at.time,
            later: later.time,
        })
    }
}

/// Residual change between two snapshots, per component set.
pub fn residual_change(
    at: &SystemSnapshot,
    later: &SystemSnapshot,
    mode: PartitionMode,
) -> Result<ComponentPair> {
    check_order(at, later)?;
    Ok(residual_unchecked(at, later, mode))
}

fn residual_unchecked(
    at: &SystemSnapshot,
    later: &SystemSnapshot,
    mode: PartitionMode,
) -> ComponentPair {
    let a = (&at.inputs, &at.outputs);
    let b = (&later.inputs, &later.outputs);
    match mode {
        PartitionMode::Formal => ComponentPair::zip(b, a, ComponentSet::difference),
        PartitionMode::Prose => ComponentPair::zip(a, b, ComponentSet::symmetric_difference),
    }
}

pub fn core_periphery(
    at: &SystemSnapshot,
    later: &SystemSnapshot,
    mode: PartitionMode,
) -> Result<PartitionResult> {
    check_order(at, later)?;
    let periphery = residual_unchecked(at, later, mode);
    let a = (&at.inputs, &at.outputs);
    let core = match mode {
        PartitionMode::Formal => ComponentPair::zip(
            a,
            (&periphery.inputs, &periphery.outputs),
            ComponentSet::difference,
        ),
        PartitionMode::Prose => ComponentPair::zip(
            a,
            (&later.inputs, &later.outputs),
            ComponentSet::intersection,
        ),
    };
    Ok(PartitionResult {
        core,
        periphery,
        mode,
        span: (at.time, later.time),
    })
}

/// Elements present in every snapshot of the trajectory, per component set.
pub fn trajectory_core(snaps: &[SystemSnapshot]) -> Result<ComponentPair> {
    if snaps.len() < 2 {
        return Err(validation(format!(
            "trajectory needs at least 2 snapshots, got {}",
            snaps.len()
        )));
    }
    for w in snaps.windows(2) {
        check_order(&w[0], &w[1])?;
    }
    let first = &snaps[0];
    let mut core = ComponentPair {
        inputs: first.inputs.clone(),
        outputs: first.outputs.clone(),
    };
    for s in &snaps[1..] {
        core.inputs = core.inputs.intersection(&s.inputs);
        core.outputs = core.outputs.intersection(&s.outputs);
    }
    Ok(core)
}

/// A snapshot file: `{"snapshots": [{"time", "inputs", "outputs"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<SystemSnapshot>,
}

impl Trajectory {
    /// Checks that every timestamp is unique.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for s in &self.snapshots {
            if !seen.insert(s.time) {
                return Err(validation(format!("duplicate snapshot time {}", s.time)));
            }
        }
        Ok(())
    }

    pub fn at(&self, time: i64) -> Result<&SystemSnapshot> {
        self.snapshots
            .iter()
            .find(|s| s.time == time)
            .ok_or_else(|| validation(format!("no snapshot at time {time}")))
    }
}
