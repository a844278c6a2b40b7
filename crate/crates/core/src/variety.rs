//! Variety of finite sets: log-cardinality and Shannon entropy in bits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// Slack allowed on the sum of a probability vector.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// A distinct element of a component set, identified by its label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Element(String);

impl Element {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(validation("element label must be non-empty"));
        }
        Ok(Element(label))
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Element {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Element::new(value)
    }
}

impl From<Element> for String {
    fn from(e: Element) -> String {
        e.0
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite set of elements, kept in lexicographic order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComponentSet(BTreeSet<Element>);

impl ComponentSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from labels, rejecting empty labels. Duplicates collapse.
    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        labels
            .into_iter()
            .map(Element::new)
            .collect::<Result<BTreeSet<_>>>()
            .map(ComponentSet)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.0.contains(e)
    }

    pub fn insert(&mut self, e: Element) -> bool {
        self.0.insert(e)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Element> {
        self.0.iter()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.0.iter().map(Element::label).collect()
    }

    pub fn union(&self, other: &Self) -> Self {
        ComponentSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        ComponentSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &Self) -> Self {
        ComponentSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        ComponentSet(self.0.symmetric_difference(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.0.is_disjoint(&other.0)
    }
}

impl FromIterator<Element> for ComponentSet {
    fn from_iter<T: IntoIterator<Item = Element>>(iter: T) -> Self {
        ComponentSet(iter.into_iter().collect())
    }
}

/// A finite probability vector over unique labels, sorted by label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct Distribution {
    entries: Vec<(String, f64)>,
}

impl Distribution {
    /// Validates and sorts the entries. Probabilities must be finite,
    /// non-negative, and sum to one within [`PROBABILITY_SUM_TOLERANCE`].
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut entries: Vec<(String, f64)> =
            entries.into_iter().map(|(l, p)| (l.into(), p)).collect();
        if entries.is_empty() {
            return Err(validation("distribution has no entries"));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(validation(format!("duplicate label {:?}", w[0].0)));
            }
        }
        for (label, p) in &entries {
            if label.is_empty() {
                return Err(validation("distribution label must be non-empty"));
            }
            if !p.is_finite() || *p < 0.0 || *p > 1.0 {
                return Err(validation(format!(
                    "probability of {label:?} is {p}, outside [0, 1]"
                )));
            }
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(validation(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Distribution { entries })
    }

    /// Uniform distribution over the given labels.
    pub fn uniform<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let p = 1.0 / labels.len() as f64;
        Distribution::new(labels.into_iter().map(|l| (l, p)))
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probability(&self, label: &str) -> Option<f64> {
        self.entries
            .binary_search_by(|(l, _)| l.as_str().cmp(label))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }
}

impl TryFrom<BTreeMap<String, f64>> for Distribution {
    type Error = Error;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        Distribution::new(map)
    }
}

impl From<Distribution> for BTreeMap<String, f64> {
    fn from(d: Distribution) -> Self {
        d.entries.into_iter().collect()
    }
}

/// Shannon entropy in bits of a probability vector. Zero entries contribute
/// nothing. Terms are summed in ascending order of probability so that any
/// permutation of the same values yields a bit-identical result.
pub fn shannon_bits(probabilities: &[f64]) -> f64 {
    let mut ps: Vec<f64> = probabilities.iter().copied().filter(|&p| p > 0.0).collect();
    ps.sort_by(f64::total_cmp);
    let h: f64 = ps.iter().map(|&p| -p * p.log2()).sum();
    h.max(0.0)
}

/// Entropy in bits of the distribution obtained by normalizing non-negative
/// weights (counts, singular values). Returns `None` when the weights sum to zero.
pub fn normalized_bits(weights: &[f64]) -> Option<f64> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let ps: Vec<f64> = weights.iter().map(|w| w / total).collect();
    Some(shannon_bits(&ps))
}

/// Variety of a distribution: its Shannon entropy in bits.
pub fn variety(d: &Distribution) -> f64 {
    let ps: Vec<f64> = d.entries.iter().map(|(_, p)| *p).collect();
    shannon_bits(&ps)
}

/// Ashby's count-based variety, `log2 |s|`. The empty set has variety 0.
pub fn cardinality_variety(s: &ComponentSet) -> f64 {
    log2_count(s.len())
}

pub(crate) fn log2_count(n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (n as f64).log2()
    }
}

/// Relative frequencies of the observed labels, sorted lexicographically.
pub fn empirical_distribution<I, S>(observations: I) -> Result<Distribution>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0u64;
    for obs in observations {
        *counts.entry(obs.as_ref().to_owned()).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(validation("no observations"));
    }
    let entries: Vec<(String, f64)> = counts
        .into_iter()
        .map(|(l, c)| (l, c as f64 / total as f64))
        .collect();
    Distribution::new(entries)
}
