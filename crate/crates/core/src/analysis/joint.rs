//! Joint and conditional entropy of core/periphery observations, and the
//! core-dominant / periphery-dominant classifier built on them.

use serde::{Deserialize, Serialize};

use super::profile::{EntropyProfile, LayerLabel, LayerRole};
use crate::error::{validation, Result};
use crate::variety::{normalized_bits, shannon_bits};

/// Slack on every inequality checked by the classifier.
pub const CHAIN_TOLERANCE: f64 = 1e-9;

/// Default bin count for [`quantize_joint`].
pub const DEFAULT_BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Core,
    Periphery,
}

/// Count table over (core bin, periphery bin). Rows index the core axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HistogramFile")]
pub struct JointHistogram {
    counts: Vec<Vec<u64>>,
    core_edges: Vec<f64>,
    periphery_edges: Vec<f64>,
}

#[derive(Deserialize)]
struct HistogramFile {
    counts: Vec<Vec<u64>>,
    #[serde(default)]
    core_edges: Option<Vec<f64>>,
    #[serde(default)]
    periphery_edges: Option<Vec<f64>>,
}

impl TryFrom<HistogramFile> for JointHistogram {
    type Error = crate::Error;

    fn try_from(f: HistogramFile) -> Result<Self> {
        match (f.core_edges, f.periphery_edges) {
            (None, None) => JointHistogram::from_counts(f.counts),
            (Some(c), Some(p)) => JointHistogram::new(f.counts, c, p),
            _ => Err(validation("give both edge vectors or neither")),
        }
    }
}

fn check_edges(name: &str, edges: &[f64], bins: usize) -> Result<()> {
    if edges.len() != bins + 1 {
        return Err(validation(format!(
            "{name} edges: {} values for {bins} bins",
            edges.len()
        )));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(validation(format!(
            "{name} edges must be finite and strictly increasing"
        )));
    }
    Ok(())
}

impl JointHistogram {
    pub fn new(
        counts: Vec<Vec<u64>>,
        core_edges: Vec<f64>,
        periphery_edges: Vec<f64>,
    ) -> Result<Self> {
        let core_bins = counts.len();
        let periphery_bins = counts.first().map_or(0, Vec::len);
        if core_bins == 0 || periphery_bins == 0 {
            return Err(validation("histogram must have at least one bin per axis"));
        }
        if let Some(r) = counts.iter().position(|r| r.len() != periphery_bins) {
            return Err(validation(format!("ragged histogram at core bin {r}")));
        }
        if counts.iter().flatten().all(|&c| c == 0) {
            return Err(validation("histogram is empty"));
        }
        check_edges("core", &core_edges, core_bins)?;
        check_edges("periphery", &periphery_edges, periphery_bins)?;
        Ok(JointHistogram {
            counts,
            core_edges,
            periphery_edges,
        })
    }

    /// Histogram with unit-width edges `0, 1, ..., bins`.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let unit = |n: usize| (0..=n).map(|i| i as f64).collect::<Vec<_>>();
        let c = unit(counts.len());
        let p = unit(counts.first().map_or(0, Vec::len));
        JointHistogram::new(counts, c, p)
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn core_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn periphery_bins(&self) -> usize {
        self.counts[0].len()
    }

    pub fn core_edges(&self) -> &[f64] {
        &self.core_edges
    }

    pub fn periphery_edges(&self) -> &[f64] {
        &self.periphery_edges
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn transpose(&self) -> JointHistogram {
        let counts = (0..self.periphery_bins())
            .map(|p| self.counts.iter().map(|row| row[p]).collect())
            .collect();
        JointHistogram {
            counts,
            core_edges: self.periphery_edges.clone(),
            periphery_edges: self.core_edges.clone(),
        }
    }

    fn marginal_counts(&self, axis: Axis) -> Vec<u64> {
        match axis {
            Axis::Core => self.counts.iter().map(|r| r.iter().sum()).collect(),
            Axis::Periphery => (0..self.periphery_bins())
                .map(|p| self.counts.iter().map(|r| r[p]).sum())
                .collect(),
        }
    }
}

fn as_f64(counts: &[u64]) -> Vec<f64> {
    counts.iter().map(|&c| c as f64).collect()
}

/// Plug-in estimate of `H(core, periphery)`.
pub fn joint_entropy(h: &JointHistogram) -> f64 {
    let total = h.total() as f64;
    let ps: Vec<f64> = h
        .counts
        .iter()
        .flatten()
        .map(|&c| c as f64 / total)
        .collect();
    shannon_bits(&ps)
}

pub fn marginal_entropy(h: &JointHistogram, axis: Axis) -> f64 {
    normalized_bits(&as_f64(&h.marginal_counts(axis))).unwrap_or(0.0)
}

/// `H(other axis | given)`, computed as the weighted average of the entropy
/// of each conditional slice.
pub fn conditional_entropy(h: &JointHistogram, given: Axis) -> f64 {
    let total = h.total() as f64;
    let slices: Vec<Vec<u64>> = match given {
        Axis::Core => h.counts.clone(),
        Axis::Periphery => h.transpose().counts,
    };
    slices
        .iter()
        .map(|slice| {
            let n: u64 = slice.iter().sum();
            if n == 0 {
                0.0
            } else {
                (n as f64 / total) * normalized_bits(&as_f64(slice)).unwrap_or(0.0)
            }
        })
        .sum()
}

fn equal_width(values: &[f64], bins: usize) -> (Vec<usize>, Vec<f64>) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return (vec![0; values.len()], vec![min - 0.5, min + 0.5]);
    }
    let width = (max - min) / bins as f64;
    let idx = values
        .iter()
        .map(|&v| (((v - min) / width).floor() as usize).min(bins - 1))
        .collect();
    let edges = (0..=bins)
        .map(|i| {
            if i == bins {
                max
            } else {
                min + width * i as f64
            }
        })
        .collect();
    (idx, edges)
}

/// Equal-width binning of paired observations over `[min, max]` per axis.
/// A constant axis collapses to a single bin.
pub fn quantize_joint(core: &[f64], periphery: &[f64], bins: usize) -> Result<JointHistogram> {
    if core.len() != periphery.len() {
        return Err(validation(format!(
            "series lengths differ: core {} vs periphery {}",
            core.len(),
            periphery.len()
        )));
    }
    if core.is_empty() {
        return Err(validation("series are empty"));
    }
    if bins == 0 {
        return Err(validation("bin count must be positive"));
    }
    if core.iter().chain(periphery).any(|v| !v.is_finite()) {
        return Err(validation("series contain non-finite values"));
    }
    let (ci, core_edges) = equal_width(core, bins);
    let (pi, periphery_edges) = equal_width(periphery, bins);
    let mut counts = vec![vec![0u64; periphery_edges.len() - 1]; core_edges.len() - 1];
    for (c, p) in ci.into_iter().zip(pi) {
        counts[c][p] += 1;
    }
    JointHistogram::new(counts, core_edges, periphery_edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dominance {
    CoreDominant,
    PeripheryDominant,
    Indeterminate,
}

/// One inequality chain `a <= b <= ...` with each link evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityChain {
    pub terms: Vec<String>,
    pub values: Vec<f64>,
    pub links: Vec<bool>,
    pub holds: bool,
}

impl InequalityChain {
    fn new(terms: &[(&str, f64)]) -> Self {
        let values: Vec<f64> = terms.iter().map(|t| t.1).collect();
        let links: Vec<bool> = values
            .windows(2)
            .map(|w| w[0] <= w[1] + CHAIN_TOLERANCE)
            .collect();
        InequalityChain {
            terms: terms.iter().map(|t| t.0.to_string()).collect(),
            holds: links.iter().all(|&l| l),
            values,
            links,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceVerdict {
    pub label: Dominance,
    pub h_core: f64,
    pub h_periphery: f64,
    pub h_core_given_periphery: f64,
    pub h_periphery_given_core: f64,
    pub h_joint: f64,
    /// `None` means no threshold (the check is vacuous).
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    /// `H(C|P) <= H(C) <= delta`
    pub core_condition: InequalityChain,
    /// `H(P|C) <= H(P) <= gamma`
    pub periphery_condition: InequalityChain,
    /// `H(P|C) <= H(P) <= H(C|P) <= H(C)`
    pub core_chain: InequalityChain,
    /// `H(C|P) <= H(C) <= H(P|C) <= H(P)`
    pub periphery_chain: InequalityChain,
}

fn threshold(name: &str, v: f64) -> Result<Option<f64>> {
    if v.is_nan() || v < 0.0 {
        return Err(validation(format!("{name} must be non-negative, got {v}")));
    }
    Ok(v.is_finite().then_some(v))
}

/// Classifies the system described by `h`. Pass `f64::INFINITY` for an
/// unbounded threshold.
///
/// Core-dominant requires `H(C) > H(P)`, `H(C|P) <= H(C) <= delta`, and the
/// full chain `H(P|C) <= H(P) <= H(C|P) <= H(C)`: the core's conditional
/// entropy must itself exceed the periphery's entropy. Periphery-dominant
/// is the mirror image with `gamma`. Equal marginals are indeterminate.
pub fn classify_dominance(h: &JointHistogram, delta: f64, gamma: f64) -> Result<DominanceVerdict> {
    let delta = threshold("delta", delta)?;
    let gamma = threshold("gamma", gamma)?;
    let hc = marginal_entropy(h, Axis::Core);
    let hp = marginal_entropy(h, Axis::Periphery);
    let hc_p = conditional_entropy(h, Axis::Periphery);
    let hp_c = conditional_entropy(h, Axis::Core);
    let hj = joint_entropy(h);

    let delta_v = delta.unwrap_or(f64::INFINITY);
    let gamma_v = gamma.unwrap_or(f64::INFINITY);
    let core_condition =
        InequalityChain::new(&[("H(C|P)", hc_p), ("H(C)", hc), ("delta", delta_v)]);
    let periphery_condition =
        InequalityChain::new(&[("H(P|C)", hp_c), ("H(P)", hp), ("gamma", gamma_v)]);
    let core_chain = InequalityChain::new(&[
        ("H(P|C)", hp_c),
        ("H(P)", hp),
        ("H(C|P)", hc_p),
        ("H(C)", hc),
    ]);
    let periphery_chain = InequalityChain::new(&[
        ("H(C|P)", hc_p),
        ("H(C)", hc),
        ("H(P|C)", hp_c),
        ("H(P)", hp),
    ]);

    let label = if (hc - hp).abs() <= CHAIN_TOLERANCE {
        Dominance::Indeterminate
    } else if hc > hp {
        if core_condition.holds && core_chain.holds {
            Dominance::CoreDominant
        } else {
            Dominance::Indeterminate
        }
    } else if periphery_condition.holds && periphery_chain.holds {
        Dominance::PeripheryDominant
    } else {
        Dominance::Indeterminate
    };

    Ok(DominanceVerdict {
        label,
        h_core: hc,
        h_periphery: hp,
        h_core_given_periphery: hc_p,
        h_periphery_given_core: hp_c,
        h_joint: hj,
        delta,
        gamma,
        core_condition,
        periphery_condition,
        core_chain,
        periphery_chain,
    })
}

/// Per-epoch mean entropy of the core layers and of the periphery layers.
/// These paired series are the observations fed to [`quantize_joint`] when
/// classifying a weight run.
pub fn role_series(p: &EntropyProfile, labels: &[LayerLabel]) -> Result<(Vec<f64>, Vec<f64>)> {
    let pick = |role: LayerRole| -> Vec<usize> {
        labels
            .iter()
            .filter(|l| l.role == role)
            .filter_map(|l| p.layers.iter().position(|x| *x == l.layer))
            .collect()
    };
    let core = pick(LayerRole::Core);
    let periphery = pick(LayerRole::Periphery);
    if core.is_empty() || periphery.is_empty() {
        return Err(validation(
            "need at least one core and one periphery layer to build joint observations",
        ));
    }
    let mean =
        |idx: &[usize], e: usize| idx.iter().map(|&l| p.bits[l][e]).sum::<f64>() / idx.len() as f64;
    Ok((0..p.epochs.len())
        .map(|e| (mean(&core, e), mean(&periphery, e)))
        .unzip())
}
