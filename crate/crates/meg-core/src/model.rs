use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::Bitset;
use crate::error::{Error, Result};

/// One candidate evidence unit (typically a sentence). Ids are instance-local,
/// 0-based and contiguous; the text may be empty for synthetic instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidencePiece {
    pub id: usize,
    pub text: String,
}

/// A set of evidence-piece ids in canonical form: sorted ascending, no
/// duplicates, never empty. Equality, hashing and ordering depend only on the
/// member set, so groups can key maps regardless of how they were assembled.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EvidenceGroup {
    members: Vec<usize>,
}

impl EvidenceGroup {
    /// Builds a group from arbitrary ids, sorting and deduplicating.
    /// Returns `None` for an empty member set.
    pub fn new(members: impl IntoIterator<Item = usize>) -> Option<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        if members.is_empty() {
            return None;
        }
        members.sort_unstable();
        members.dedup();
        Some(EvidenceGroup { members })
    }

    pub fn singleton(id: usize) -> Self {
        EvidenceGroup { members: vec![id] }
    }

    /// Sorted set union of two groups.
    pub fn union(&self, other: &EvidenceGroup) -> EvidenceGroup {
        let mut members = Vec::with_capacity(self.members.len() + other.members.len());
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => {
                    members.push(self.members[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    members.push(other.members[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    members.push(self.members[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        members.extend_from_slice(&self.members[i..]);
        members.extend_from_slice(&other.members[j..]);
        EvidenceGroup { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    #[allow(clippy::len_without_is_empty)] // never empty by construction
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    pub fn is_superset_of(&self, other: &EvidenceGroup) -> bool {
        other.members.iter().all(|id| self.contains(*id))
    }

    pub fn intersection_len(&self, other: &EvidenceGroup) -> usize {
        self.members.iter().filter(|id| other.contains(**id)).count()
    }

    pub fn is_disjoint_from(&self, other: &EvidenceGroup) -> bool {
        self.intersection_len(other) == 0
    }
}

impl fmt::Display for EvidenceGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, id) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

/// Three-way support verdict label. The derived order
/// `NotSupported < PartiallySupported < FullySupported` backs the
/// monotonicity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportLabel {
    NotSupported,
    PartiallySupported,
    FullySupported,
}

impl fmt::Display for SupportLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SupportLabel::NotSupported => "NOT_SUPPORTED",
            SupportLabel::PartiallySupported => "PARTIALLY_SUPPORTED",
            SupportLabel::FullySupported => "FULLY_SUPPORTED",
        };
        f.write_str(s)
    }
}

/// A predicted label plus the predictor's confidence in it, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportVerdict {
    pub label: SupportLabel,
    pub confidence: f64,
}

impl SupportVerdict {
    pub fn new(label: SupportLabel, confidence: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&confidence),
            "confidence {confidence} outside [0, 1]"
        );
        SupportVerdict { label, confidence }
    }
}

/// Per-evidence-piece binary coverage of atomic claim units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageModel {
    num_units: usize,
    ep_coverage: Vec<Bitset>,
}

impl CoverageModel {
    /// `unit_indices[id]` lists the claim units covered by evidence piece `id`.
    pub fn new(num_units: usize, unit_indices: &[Vec<usize>]) -> Result<Self> {
        if num_units == 0 {
            return Err(Error::InvalidData("coverage model needs at least one claim unit".into()));
        }
        let mut ep_coverage = Vec::with_capacity(unit_indices.len());
        for (id, units) in unit_indices.iter().enumerate() {
            let bits = Bitset::from_indices(num_units, units).ok_or_else(|| {
                Error::InvalidData(format!(
                    "evidence piece {id} covers a unit outside 0..{num_units}"
                ))
            })?;
            ep_coverage.push(bits);
        }
        Ok(CoverageModel { num_units, ep_coverage })
    }

    pub fn from_bitsets(num_units: usize, ep_coverage: Vec<Bitset>) -> Result<Self> {
        if num_units == 0 {
            return Err(Error::InvalidData("coverage model needs at least one claim unit".into()));
        }
        if let Some(bits) = ep_coverage.iter().find(|b| b.width() != num_units) {
            return Err(Error::InvalidData(format!(
                "coverage bitset width {} does not match {num_units} units",
                bits.width()
            )));
        }
        Ok(CoverageModel { num_units, ep_coverage })
    }

    pub fn num_units(&self) -> usize {
        self.num_units
    }

    pub fn num_pieces(&self) -> usize {
        self.ep_coverage.len()
    }

    pub fn piece_coverage(&self, id: usize) -> Option<&Bitset> {
        self.ep_coverage.get(id)
    }

    /// Bitwise OR of the members' coverage vectors. Unknown ids are a hard
    /// error.
    pub fn group_coverage(&self, group: &EvidenceGroup) -> Result<Bitset> {
        let mut out = Bitset::new(self.num_units);
        for &id in group.members() {
            let bits = self.ep_coverage.get(id).ok_or(Error::UnknownEvidence {
                claim_id: "?".into(),
                id,
            })?;
            out.or_assign(bits);
        }
        Ok(out)
    }
}

/// One claim with its candidate evidence, reference MEGs from annotators
/// (supersets are kept as-is), and an optional coverage model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimInstance {
    pub claim_id: String,
    pub claim_text: String,
    pub evidence: Vec<EvidencePiece>,
    pub reference_megs: Vec<EvidenceGroup>,
    pub coverage: Option<CoverageModel>,
}

impl ClaimInstance {
    pub fn new(
        claim_id: impl Into<String>,
        claim_text: impl Into<String>,
        evidence_texts: Vec<String>,
        reference_megs: Vec<EvidenceGroup>,
        coverage: Option<CoverageModel>,
    ) -> Result<Self> {
        let claim_id = claim_id.into();
        let evidence: Vec<EvidencePiece> = evidence_texts
            .into_iter()
            .enumerate()
            .map(|(id, text)| EvidencePiece { id, text })
            .collect();
        for group in &reference_megs {
            for &id in group.members() {
                if id >= evidence.len() {
                    return Err(Error::UnknownEvidence { claim_id, id });
                }
            }
        }
        if let Some(cov) = &coverage {
            if cov.num_pieces() != evidence.len() {
                return Err(Error::InvalidData(format!(
                    "instance `{claim_id}`: coverage model has {} rows for {} evidence pieces",
                    cov.num_pieces(),
                    evidence.len()
                )));
            }
        }
        Ok(ClaimInstance {
            claim_id,
            claim_text: claim_text.into(),
            evidence,
            reference_megs,
            coverage,
        })
    }

    pub fn num_evidence(&self) -> usize {
        self.evidence.len()
    }

    pub fn evidence_text(&self, id: usize) -> Option<&str> {
        self.evidence.get(id).map(|ep| ep.text.as_str())
    }

    /// Member texts of a group, in ascending id order.
    pub fn group_texts(&self, group: &EvidenceGroup) -> Vec<String> {
        group
            .members()
            .iter()
            .filter_map(|&id| self.evidence_text(id).map(str::to_owned))
            .collect()
    }

    pub fn coverage(&self) -> Result<&CoverageModel> {
        self.coverage
            .as_ref()
            .ok_or_else(|| Error::MissingCoverage(self.claim_id.clone()))
    }
}

/// Knobs for the merging search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Largest group cardinality to consider.
    pub max_size: usize,
    /// How many ranked groups downstream consumers keep; the search itself
    /// always reports every group of the winning size.
    pub top_k: usize,
    /// true: any prediction failure fails the whole claim (scored zero).
    /// false: the failed group is treated as not supporting and the claim
    /// is excluded from evaluation only if it ends with no output at all.
    pub strict_mode: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_size: 5,
            top_k: 1,
            strict_mode: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_size == 0 {
            return Err(Error::InvalidData("max_size must be at least 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidData("top_k must be at least 1".into()));
        }
        Ok(())
    }
}
