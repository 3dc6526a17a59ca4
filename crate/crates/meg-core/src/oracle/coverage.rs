use crate::error::Result;
use crate::model::{ClaimInstance, EvidenceGroup, SupportLabel, SupportVerdict};
use crate::oracle::{RedundancyChecker, SupportPredictor};

/// Exact oracle over an instance's claim-unit coverage model. A group fully
/// supports iff its union coverage hits every unit, does not support iff its
/// union coverage is empty, and partially supports otherwise. Confidence is
/// the fraction of units covered.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoverageOracle;

impl SupportPredictor for CoverageOracle {
    fn predict(&self, instance: &ClaimInstance, group: &EvidenceGroup) -> Result<SupportVerdict> {
        let cov = instance.coverage()?;
        let bits = cov.group_coverage(group)?;
        let covered = bits.count_ones();
        let label = if bits.is_full() {
            SupportLabel::FullySupported
        } else if bits.is_empty_set() {
            SupportLabel::NotSupported
        } else {
            SupportLabel::PartiallySupported
        };
        Ok(SupportVerdict::new(label, covered as f64 / cov.num_units() as f64))
    }
}

impl RedundancyChecker for CoverageOracle {
    /// Redundant exactly when the union's coverage collapses onto one
    /// operand's coverage, i.e. the other operand adds nothing.
    fn not_redundant(
        &self,
        instance: &ClaimInstance,
        g1: &EvidenceGroup,
        g2: &EvidenceGroup,
    ) -> Result<bool> {
        let cov = instance.coverage()?;
        let c1 = cov.group_coverage(g1)?;
        let c2 = cov.group_coverage(g2)?;
        let union = c1.union(&c2);
        Ok(union != c1 && union != c2)
    }
}
