//! Regulator/context games for checking the law of requisite variety.
//!
//! A game is a table `outcome[disturbance][response]`. A deterministic
//! regulator policy picks one response per disturbance; pushing the
//! disturbance distribution through the table gives the outcome distribution,
//! whose entropy is the achieved outcome variety. Exhaustive enumeration of
//! policies gives the exact minimum, which is compared against the bound
//! `max(V_context - V_regulator, 0)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::variety::{empirical_distribution, log2_count, shannon_bits, variety, Distribution};

/// Tolerance used by the stability check and the bound comparisons.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Default ceiling on the number of policies a brute-force search may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Identifier of the generator behind [`closed_loop_run`], recorded in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9)";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GameFile {
    disturbances: Vec<String>,
    responses: Vec<String>,
    allowed_responses: Vec<String>,
    table: Vec<Vec<String>>,
    disturbance_dist: Distribution,
}

/// An explicit disturbance x response -> outcome game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameFile", into = "GameFile")]
pub struct RegulationGame {
    disturbances: Vec<String>,
    responses: Vec<String>,
    allowed: Vec<String>,
    table: Vec<Vec<String>>,
    disturbance_dist: Distribution,
    // derived
    allowed_idx: Vec<usize>,
    outcome_labels: Vec<String>,
    outcome_idx: Vec<Vec<usize>>,
    disturbance_p: Vec<f64>,
}

fn unique_labels(what: &str, labels: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if l.is_empty() {
            return Err(validation(format!("empty label in {what}")));
        }
        if !seen.insert(l) {
            return Err(validation(format!("duplicate label {l:?} in {what}")));
        }
    }
    Ok(())
}

impl RegulationGame {
    pub fn new(
        disturbances: Vec<String>,
        responses: Vec<String>,
        allowed_responses: Vec<String>,
        table: Vec<Vec<String>>,
        disturbance_dist: Distribution,
    ) -> Result<Self> {
        if disturbances.is_empty() || responses.is_empty() {
            return Err(validation(
                "game needs at least one disturbance and one response",
            ));
        }
        unique_labels("disturbances", &disturbances)?;
        unique_labels("responses", &responses)?;
        unique_labels("allowed_responses", &allowed_responses)?;
        if allowed_responses.is_empty() {
            return Err(validation("allowed_responses must be non-empty"));
        }
        let mut allowed_idx = Vec::with_capacity(allowed_responses.len());
        for a in &allowed_responses {
            let i = responses
                .iter()
                .position(|r| r == a)
                .ok_or_else(|| validation(format!("allowed response {a:?} is not a response")))?;
            allowed_idx.push(i);
        }
        // Enumeration order is lexicographic in response labels.
        allowed_idx.sort_by(|&a, &b| responses[a].cmp(&responses[b]));

        if table.len() != disturbances.len() {
            return Err(validation(format!(
                "table has {} rows for {} disturbances",
                table.len(),
                disturbances.len()
            )));
        }
        for (d, row) in disturbances.iter().zip(&table) {
            if row.len() != responses.len() {
                return Err(validation(format!(
                    "table row for {d:?} has {} entries, expected {}",
                    row.len(),
                    responses.len()
                )));
            }
            if row.iter().any(String::is_empty) {
                return Err(validation(format!("empty outcome label in row {d:?}")));
            }
        }

        let support: BTreeSet<&str> = disturbance_dist.labels().collect();
        let declared: BTreeSet<&str> = disturbances.iter().map(String::as_str).collect();
        if support != declared {
            return Err(validation(
                "disturbance_dist must be supported exactly on the disturbances",
            ));
        }
        let disturbance_p = disturbances
            .iter()
            .map(|d| disturbance_dist.probability(d).unwrap_or(0.0))
            .collect();

        let outcome_labels: Vec<String> = table
            .iter()
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let outcome_idx = table
            .iter()
            .map(|row| {
                row.iter()
                    .map(|z| {
                        outcome_labels
                            .binary_search(z)
                            .expect("outcome label indexed")
                    })
                    .collect()
            })
            .collect();

        Ok(RegulationGame {
            disturbances,
            responses,
            allowed: allowed_responses,
            table,
            disturbance_dist,
            allowed_idx,
            outcome_labels,
            outcome_idx,
            disturbance_p,
        })
    }

    pub fn disturbances(&self) -> &[String] {
        &self.disturbances
    }

    pub fn responses(&self) -> &[String] {
        &self.responses
    }

    pub fn allowed_responses(&self) -> &[String] {
        &self.allowed
    }

    pub fn table(&self) -> &[Vec<String>] {
        &self.table
    }

    pub fn disturbance_dist(&self) -> &Distribution {
        &self.disturbance_dist
    }

    /// Every outcome label appearing in the table, sorted.
    pub fn outcome_labels(&self) -> &[String] {
        &self.outcome_labels
    }

    pub fn outcome(&self, disturbance: usize, response: usize) -> &str {
        &self.table[disturbance][response]
    }

    /// Same game with a different set of permitted responses.
    pub fn with_allowed<I, S>(&self, allowed: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RegulationGame::new(
            self.disturbances.clone(),
            self.responses.clone(),
            allowed.into_iter().map(Into::into).collect(),
            self.table.clone(),
            self.disturbance_dist.clone(),
        )
    }

    /// `|allowed_responses| ^ |disturbances|`, saturating.
    pub fn policy_count(&self) -> u128 {
        let k = self.allowed_idx.len() as u128;
        let mut count: u128 = 1;
        for _ in 0..self.disturbances.len() {
            count = count.saturating_mul(k);
        }
        count
    }

    /// Entropy of the disturbance distribution.
    pub fn context_variety(&self) -> f64 {
        variety(&self.disturbance_dist)
    }

    /// Count-based regulator variety, `log2 |allowed_responses|`.
    pub fn regulator_variety(&self) -> f64 {
        log2_count(self.allowed_idx.len())
    }

    /// All deterministic policies, in lexicographic order.
    pub fn policies(&self) -> impl Iterator<Item = Policy> + '_ {
        let n = self.policy_count();
        (0..n).map(move |i| self.policy_from_choices(&self.decode(i)))
    }

    /// Response index chosen for each disturbance by the `i`-th policy.
    fn decode(&self, mut index: u128) -> Vec<usize> {
        let k = self.allowed_idx.len() as u128;
        let mut choice = vec![0usize; self.disturbances.len()];
        for slot in choice.iter_mut().rev() {
            *slot = self.allowed_idx[(index % k) as usize];
            index /= k;
        }
        choice
    }

    fn policy_from_choices(&self, choice: &[usize]) -> Policy {
        Policy {
            mapping: self
                .disturbances
                .iter()
                .zip(choice)
                .map(|(d, &r)| (d.clone(), self.responses[r].clone()))
                .collect(),
        }
    }

    fn choices(&self, p: &Policy) -> Result<Vec<usize>> {
        if p.mapping.len() != self.disturbances.len() {
            return Err(validation(format!(
                "policy covers {} of {} disturbances",
                p.mapping.len(),
                self.disturbances.len()
            )));
        }
        self.disturbances
            .iter()
            .map(|d| {
                let r = p
                    .mapping
                    .get(d)
                    .ok_or_else(|| validation(format!("policy has no response for {d:?}")))?;
                self.allowed_idx
                    .iter()
                    .copied()
                    .find(|&i| &self.responses[i] == r)
                    .ok_or_else(|| validation(format!("response {r:?} is not allowed")))
            })
            .collect()
    }

    fn outcome_probabilities(&self, choice: &[usize]) -> Vec<f64> {
        let mut probs = vec![0.0; self.outcome_labels.len()];
        for (d, &r) in choice.iter().enumerate() {
            probs[self.outcome_idx[d][r]] += self.disturbance_p[d];
        }
        probs
    }
}

impl TryFrom<GameFile> for RegulationGame {
    type Error = Error;

    fn try_from(f: GameFile) -> Result<Self> {
        RegulationGame::new(
            f.disturbances,
            f.responses,
            f.allowed_responses,
            f.table,
            f.disturbance_dist,
        )
    }
}

impl From<RegulationGame> for GameFile {
    fn from(g: RegulationGame) -> Self {
        GameFile {
            disturbances: g.disturbances,
            responses: g.responses,
            allowed_responses: g.allowed,
            table: g.table,
            disturbance_dist: g.disturbance_dist,
        }
    }
}

/// A deterministic regulator strategy: one response per disturbance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy {
    pub mapping: BTreeMap<String, String>,
}

impl Policy {
    pub fn new<I, D, R>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (D, R)>,
        D: Into<String>,
        R: Into<String>,
    {
        Policy {
            mapping: pairs
                .into_iter()
                .map(|(d, r)| (d.into(), r.into()))
                .collect(),
        }
    }

    /// The same response for every disturbance.
    pub fn constant(game: &RegulationGame, response: &str) -> Self {
        Policy::new(game.disturbances.iter().map(|d| (d.clone(), response)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub context_variety: f64,
    pub regulator_variety: f64,
    /// Entropy of the responses the policy actually emits.
    pub regulator_output_variety: f64,
    pub achieved_outcome_variety: f64,
    pub theoretical_min: f64,
    pub stable: bool,
}

/// Lower bound on outcome variety: `max(v_context - v_regulator, 0)`.
pub fn min_outcome_variety(v_context: f64, v_regulator: f64) -> Result<f64> {
    if v_context.is_nan() || v_regulator.is_nan() || v_context < 0.0 || v_regulator < 0.0 {
        return Err(validation(format!(
            "varieties must be non-negative, got ({v_context}, {v_regulator})"
        )));
    }
    Ok((v_context - v_regulator).max(0.0))
}

/// True iff the system's variety covers the context's variety.
pub fn check_stability(v_system: f64, v_context: f64) -> bool {
    v_system >= v_context - BOUND_TOLERANCE
}

pub fn policy_outcome_distribution(g: &RegulationGame, p: &Policy) -> Result<Distribution> {
    let choice = g.choices(p)?;
    let probs = g.outcome_probabilities(&choice);
    Distribution::new(
        g.outcome_labels
            .iter()
            .zip(probs)
            .filter(|(_, p)| *p > 0.0)
            .map(|(l, p)| (l.clone(), p)),
    )
}

/// Distribution of responses emitted by `p` under the disturbance distribution.
pub fn policy_response_distribution(g: &RegulationGame, p: &Policy) -> Result<Distribution> {
    let choice = g.choices(p)?;
    let mut probs: BTreeMap<&str, f64> = BTreeMap::new();
    for (d, &r) in choice.iter().enumerate() {
        *probs.entry(g.responses[r].as_str()).or_default() += g.disturbance_p[d];
    }
    Distribution::new(probs.into_iter().filter(|(_, p)| *p > 0.0))
}

pub fn bound_report(g: &RegulationGame, p: &Policy) -> Result<BoundReport> {
    let context_variety = g.context_variety();
    let regulator_variety = g.regulator_variety();
    Ok(BoundReport {
        context_variety,
        regulator_variety,
        regulator_output_variety: variety(&policy_response_distribution(g, p)?),
        achieved_outcome_variety: variety(&policy_outcome_distribution(g, p)?),
        theoretical_min: min_outcome_variety(context_variety, regulator_variety)?,
        stable: check_stability(regulator_variety, context_variety),
    })
}

/// Exhaustive search over deterministic policies.
#[derive(Debug, Clone, Copy)]
pub struct BruteForce {
    pub cap: u128,
    pub parallel: bool,
}

impl Default for BruteForce {
    fn default() -> Self {
        BruteForce {
            cap: DEFAULT_ENUMERATION_CAP,
            parallel: true,
        }
    }
}

// Below this many policies the parallel split costs more than it saves.
const PARALLEL_THRESHOLD: u128 = 4096;

impl BruteForce {
    pub fn with_cap(cap: u128) -> Self {
        BruteForce {
            cap,
            ..Self::default()
        }
    }

    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }

    /// Returns a policy of minimal outcome entropy. Among equal minima the
    /// lexicographically smallest policy wins, so the result does not depend
    /// on how the enumeration was split.
    pub fn solve(&self, g: &RegulationGame) -> Result<(Policy, f64)> {
        let count = g.policy_count();
        if count > self.cap {
            return Err(Error::EnumerationCap {
                count,
                cap: self.cap,
            });
        }
        let score = |i: u128| -> (f64, u128) {
            let probs = g.outcome_probabilities(&g.decode(i));
            (shannon_bits(&probs), i)
        };
        let better = |a: (f64, u128), b: (f64, u128)| -> (f64, u128) {
            match a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) {
                std::cmp::Ordering::Greater => b,
                _ => a,
            }
        };
        let (bits, index) = if self.parallel && count >= PARALLEL_THRESHOLD {
            // count <= cap fits comfortably in u64 for any sane cap
            (0..count as u64)
                .into_par_iter()
                .map(|i| score(i as u128))
                .reduce(|| (f64::INFINITY, u128::MAX), better)
        } else {
            (0..count)
                .map(score)
                .fold((f64::INFINITY, u128::MAX), better)
        };
        Ok((g.policy_from_choices(&g.decode(index)), bits))
    }
}

/// Brute-force minimum outcome entropy with the default cap.
pub fn brute_force_min_entropy(g: &RegulationGame) -> Result<(Policy, f64)> {
    BruteForce::default().solve(g)
}

fn padded(prefix: char, i: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len();
    format!("{prefix}{i:0width$}")
}

/// Cyclic latin-square game: `outcome[d_i][r_j] = z_{(i+j) mod n}`, uniform
/// disturbances, first `k` responses allowed. The bound is tight when `k | n`.
pub fn latin_square_game(n: usize, k: usize) -> Result<RegulationGame> {
    if n == 0 {
        return Err(validation("latin square size must be positive"));
    }
    if k == 0 || k > n {
        return Err(validation(format!(
            "allowed response count {k} not in 1..={n}"
        )));
    }
    let disturbances: Vec<String> = (0..n).map(|i| padded('d', i, n)).collect();
    let responses: Vec<String> = (0..n).map(|j| padded('r', j, n)).collect();
    let table = (0..n)
        .map(|i| (0..n).map(|j| padded('z', (i + j) % n, n)).collect())
        .collect();
    let dist = Distribution::uniform(disturbances.clone())?;
    RegulationGame::new(
        disturbances,
        responses.clone(),
        responses[..k].to_vec(),
        table,
        dist,
    )
}

/// Outcome trace of a closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopTrace {
    pub disturbances: Vec<String>,
    pub outcomes: Vec<String>,
    pub distribution: Distribution,
    pub outcome_variety: f64,
    pub coupling: f64,
    pub seed: u64,
    pub rng: String,
}

/// Default feedback map: the outcome of sorted rank `i` selects disturbance
/// `i mod |disturbances|`.
pub fn default_feedback(g: &RegulationGame) -> BTreeMap<String, String> {
    g.outcome_labels
        .iter()
        .enumerate()
        .map(|(i, z)| (z.clone(), g.disturbances[i % g.disturbances.len()].clone()))
        .collect()
}

/// Runs the regulator for `steps` rounds. With probability `coupling` the
/// next disturbance is `feedback[previous outcome]`; otherwise it is drawn
/// from the disturbance distribution. The first disturbance is always drawn.
pub fn closed_loop_run(
    g: &RegulationGame,
    p: &Policy,
    coupling: f64,
    steps: usize,
    seed: u64,
    feedback: Option<&BTreeMap<String, String>>,
) -> Result<ClosedLoopTrace> {
    if !(0.0..=1.0).contains(&coupling) {
        return Err(validation(format!("coupling {coupling} not in [0, 1]")));
    }
    if steps == 0 {
        return Err(validation("steps must be at least 1"));
    }
    let choice = g.choices(p)?;
    let default_map;
    let feedback = match feedback {
        Some(f) => f,
        None => {
            default_map = default_feedback(g);
            &default_map
        }
    };
    let feedback_idx: Vec<usize> =
        g.outcome_labels
            .iter()
            .map(|z| {
                let d = feedback.get(z).ok_or_else(|| {
                    validation(format!("feedback map has no entry for outcome {z:?}"))
                })?;
                g.disturbances.iter().position(|x| x == d).ok_or_else(|| {
                    validation(format!("feedback target {d:?} is not a disturbance"))
                })
            })
            .collect::<Result<_>>()?;

    let sampler = WeightedIndex::new(&g.disturbance_p)
        .map_err(|e| validation(format!("disturbance distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut disturbances = Vec::with_capacity(steps);
    let mut outcomes = Vec::with_capacity(steps);
    let mut previous: Option<usize> = None;
    for _ in 0..steps {
        let coupled = match previous {
            None => false,
            Some(_) if coupling == 0.0 => false,
            Some(_) if coupling == 1.0 => true,
            Some(_) => rng.random_bool(coupling),
        };
        let d = match previous {
            Some(z) if coupled => feedback_idx[z],
            _ => sampler.sample(&mut rng),
        };
        let z = g.outcome_idx[d][choice[d]];
        disturbances.push(g.disturbances[d].clone());
        outcomes.push(g.outcome_labels[z].clone());
        previous = Some(z);
    }
    let distribution = empirical_distribution(&outcomes)?;
    Ok(ClosedLoopTrace {
        outcome_variety: variety(&distribution),
        disturbances,
        outcomes,
        distribution,
        coupling,
        seed,
        rng: RNG_ALGORITHM.to_owned(),
    })
}
