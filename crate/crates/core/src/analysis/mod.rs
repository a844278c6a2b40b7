//! Weight-trajectory entropy analysis and core/periphery dominance.

pub mod joint;
pub mod profile;
pub mod spectrum;
pub mod weights;

pub use joint::{
    classify_dominance, conditional_entropy, joint_entropy, marginal_entropy, quantize_joint,
    role_series, Axis, Dominance, DominanceVerdict, InequalityChain, JointHistogram,
    CHAIN_TOLERANCE, DEFAULT_BINS,
};
pub use profile::{
    classify_layers, entropy_profile, median_range_threshold, BaselineRef, EntropyProfile,
    LayerLabel, LayerRole,
};
pub use spectrum::{layer_entropy, singular_values};
pub use weights::{weight_delta, Baseline, Epoch, WeightMatrix, WeightRun};
