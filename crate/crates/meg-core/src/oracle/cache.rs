use dashmap::mapref::entry::Entry;
use dashmap::DashMap;

use crate::error::Result;
use crate::model::{ClaimInstance, EvidenceGroup, SupportVerdict};
use crate::oracle::SupportPredictor;

/// Memoization key: claim id plus the group as a set. Groups are canonical,
/// so `{0,1}` and `{1,0}` collapse to the same key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PredictionCacheKey {
    pub claim_id: String,
    pub group: EvidenceGroup,
}

/// Transparent memoizing wrapper around another predictor. At most one inner
/// call is made per distinct key; concurrent queries for the same key block
/// on the in-flight call. Failed predictions are not cached.
pub struct CachedPredictor<P> {
    inner: P,
    cache: DashMap<PredictionCacheKey, SupportVerdict>,
}

impl<P: SupportPredictor> CachedPredictor<P> {
    pub fn new(inner: P) -> Self {
        CachedPredictor {
            inner,
            cache: DashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: SupportPredictor> SupportPredictor for CachedPredictor<P> {
    fn predict(&self, instance: &ClaimInstance, group: &EvidenceGroup) -> Result<SupportVerdict> {
        let key = PredictionCacheKey {
            claim_id: instance.claim_id.clone(),
            group: group.clone(),
        };
        // The vacant entry holds its shard lock across the inner call, so a
        // second query for the same key waits instead of duplicating work.
        match self.cache.entry(key) {
            Entry::Occupied(hit) => Ok(*hit.get()),
            Entry::Vacant(slot) => {
                let verdict = self.inner.predict(instance, group)?;
                slot.insert(verdict);
                Ok(verdict)
            }
        }
    }
}
