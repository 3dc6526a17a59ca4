//! Pluggable support predictors and redundancy checkers.
//!
//! The search engine only sees the two traits below. Implementations here:
//! an exact coverage oracle, an annotation-derived oracle, a remote model
//! client, and a memoizing wrapper.

mod annotation;
mod cache;
mod coverage;
mod remote;

pub use annotation::AnnotationOracle;
pub use cache::{CachedPredictor, PredictionCacheKey};
pub use coverage::CoverageOracle;
pub use remote::{
    HttpTransport, RecordingTransport, RemotePredictor, RemotePredictorConfig, ReplayTransport,
    Transport, DEFAULT_DIRECT_TEMPLATE, DEFAULT_REDUNDANCY_TEMPLATE, DEFAULT_SUPPORT_TEMPLATE,
};

use crate::error::Result;
use crate::model::{ClaimInstance, EvidenceGroup, SupportVerdict};

/// Predicts whether a group of evidence pieces fully, partially, or does not
/// support the instance's claim. Implementations must be callable from
/// multiple workers at once.
pub trait SupportPredictor: Send + Sync {
    fn predict(&self, instance: &ClaimInstance, group: &EvidenceGroup) -> Result<SupportVerdict>;
}

/// Pairwise merge guard: returns true when `g1` and `g2` add information to
/// each other, false when one of them is unnecessary in the merged group.
pub trait RedundancyChecker: Send + Sync {
    fn not_redundant(
        &self,
        instance: &ClaimInstance,
        g1: &EvidenceGroup,
        g2: &EvidenceGroup,
    ) -> Result<bool>;
}

/// Checker that never prunes. Used when no trustworthy redundancy signal
/// exists (e.g. annotation-oracle runs) and for pruning on/off comparisons.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoPruning;

impl RedundancyChecker for NoPruning {
    fn not_redundant(
        &self,
        _instance: &ClaimInstance,
        _g1: &EvidenceGroup,
        _g2: &EvidenceGroup,
    ) -> Result<bool> {
        Ok(true)
    }
}
