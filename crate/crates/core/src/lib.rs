//! Variety (Shannon entropy) of system components, requisite-variety games,
//! and core/periphery analysis of evolving systems and network weights.
//!
//! - [`variety`]: entropy and log-cardinality of finite sets
//! - [`partition`]: core/periphery of time-indexed snapshots
//! - [`regulation`]: regulator/context games and exhaustive policy search
//! - [`analysis`]: spectral layer entropy, entropy profiles, dominance tests
//! - [`trainer`]: small seeded network trainer that emits weight runs
//! - [`io`]: `.varm` matrix files and run manifests

pub mod analysis;
pub mod error;
pub mod io;
pub mod partition;
pub mod regulation;
pub mod trainer;
pub mod variety;

pub use error::{Error, ErrorClass, Result};

pub use analysis::{
    classify_dominance, classify_layers, conditional_entropy, entropy_profile, joint_entropy,
    layer_entropy, marginal_entropy, median_range_threshold, quantize_joint, weight_delta, Axis,
    Baseline, Dominance, DominanceVerdict, EntropyProfile, Epoch, JointHistogram, LayerLabel,
    LayerRole, WeightMatrix, WeightRun,
};
pub use partition::{
    core_periphery, residual_change, trajectory_core, ComponentPair, PartitionMode,
    PartitionResult, SystemSnapshot, Trajectory,
};
pub use regulation::{
    brute_force_min_entropy, check_stability, closed_loop_run, latin_square_game,
    min_outcome_variety, policy_outcome_distribution, BoundReport, BruteForce, Policy,
    RegulationGame,
};
pub use trainer::{context_shift_experiment, make_blobs, train, MlpConfig, SyntheticDataset};
pub use variety::{
    cardinality_variety, empirical_distribution, variety, ComponentSet, Distribution, Element,
};
