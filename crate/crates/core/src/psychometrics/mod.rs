pub mod alpha;
pub mod factor;
pub mod kappa;
pub mod reliability;
pub mod scales;

pub use alpha::{cronbach_alpha, cronbach_alpha_complete, spearman_brown};
pub use factor::{factor_scores, factor_single, FactorSolution};
pub use kappa::cohens_kappa;
pub use reliability::{
    alpha_for, reliability, split_half_reliability, test_retest_reliability, HalfDemeaning, ReliabilityInput,
    ReliabilityMode, ReliabilityOptions, ReliabilityReport,
};
pub use scales::{default_scales, trait_index, trait_indices, IndexScoring, ScaleDefinition, ScaleName};
