use crate::error::{Error, Result};
use crate::model::{ClaimInstance, EvidenceGroup, SupportLabel, SupportVerdict};
use crate::oracle::SupportPredictor;

/// Oracle derived from human-annotated reference groups: a group fully
/// supports when it contains some reference MEG, does not support when it is
/// disjoint from every reference, and partially supports otherwise.
///
/// Confidence is 1.0 for the two definite labels; for partial support it is
/// the best containment ratio `|group ∩ G| / |G|` over the references.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnnotationOracle;

impl SupportPredictor for AnnotationOracle {
    fn predict(&self, instance: &ClaimInstance, group: &EvidenceGroup) -> Result<SupportVerdict> {
        let refs = &instance.reference_megs;
        if refs.is_empty() {
            return Err(Error::NoReferences(instance.claim_id.clone()));
        }
        if refs.iter().any(|r| group.is_superset_of(r)) {
            return Ok(SupportVerdict::new(SupportLabel::FullySupported, 1.0));
        }
        let best_overlap = refs
            .iter()
            .map(|r| group.intersection_len(r) as f64 / r.len() as f64)
            .fold(0.0f64, f64::max);
        if best_overlap == 0.0 {
            return Ok(SupportVerdict::new(SupportLabel::NotSupported, 1.0));
        }
        Ok(SupportVerdict::new(SupportLabel::PartiallySupported, best_overlap))
    }
}
