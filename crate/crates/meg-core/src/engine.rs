//! Bottom-up minimal-evidence-group search.
//!
//! The driver grows candidate groups one member at a time: level k of the
//! frontier holds the size-k groups that partially support the claim, level
//! k+1 is built by merging frontier groups pairwise under a redundancy
//! check, and the search stops at the first size that yields fully
//! supporting groups. Groups labeled fully or not supporting leave the
//! frontier immediately: the former are answers, and neither can be a strict
//! subset of a minimal group.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClaimInstance, EvidenceGroup, SearchConfig, SupportLabel, SupportVerdict};
use crate::oracle::{RedundancyChecker, SupportPredictor};

/// Largest instance the exhaustive reference search accepts.
pub const BRUTE_FORCE_MAX_EPS: usize = 20;

/// The two groups whose merge produced a candidate, kept for diagnostics.
pub type ParentPair = (EvidenceGroup, EvidenceGroup);

/// Size-indexed registry of partially supporting groups awaiting merging.
/// Every group stored at level k has exactly k members; maps are ordered so
/// iteration is lexicographic.
#[derive(Debug, Clone, Default)]
pub struct PartialGroupFrontier {
    levels: BTreeMap<usize, BTreeMap<EvidenceGroup, BTreeSet<ParentPair>>>,
}

impl PartialGroupFrontier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn level(&self, size: usize) -> Option<&BTreeMap<EvidenceGroup, BTreeSet<ParentPair>>> {
        self.levels.get(&size)
    }

    /// Lexicographically ordered groups currently stored at a level.
    pub fn level_groups(&self, size: usize) -> Vec<EvidenceGroup> {
        self.levels
            .get(&size)
            .map(|m| m.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn remove(&mut self, size: usize, group: &EvidenceGroup) {
        if let Some(level) = self.levels.get_mut(&size) {
            level.remove(group);
        }
    }

    fn set_level(&mut self, size: usize, level: BTreeMap<EvidenceGroup, BTreeSet<ParentPair>>) {
        self.levels.insert(size, level);
    }

    fn groups_below(&self, size: usize) -> Vec<EvidenceGroup> {
        self.levels
            .range(..size)
            .flat_map(|(_, level)| level.keys().cloned())
            .collect()
    }
}

/// Counters describing one search run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    /// Support predictions issued (one per labeled candidate).
    pub predictor_calls: u64,
    /// Merge pairs rejected by the redundancy checker.
    pub redundancy_pruned: u64,
    /// Groups dropped from the frontier after a fully/not-supporting label.
    pub label_pruned: u64,
    /// Predictions that failed and were handled per strict mode.
    pub failures: u64,
    /// Free-form notes (e.g. the verdict a baseline recorded for its
    /// concatenated output).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// A fully supporting group and the confidence the predictor assigned it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGroup {
    pub group: EvidenceGroup,
    pub confidence: f64,
}

/// Outcome of a search: every fully supporting group of the winning size,
/// ranked by descending confidence with lexicographic tie-break.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub megs: Vec<ScoredGroup>,
    pub found_size: Option<usize>,
    pub diagnostics: SearchDiagnostics,
}

impl SearchResult {
    pub fn top(&self) -> Option<&ScoredGroup> {
        self.megs.first()
    }

    pub fn groups(&self) -> Vec<EvidenceGroup> {
        self.megs.iter().map(|m| m.group.clone()).collect()
    }
}

/// What one merge step did, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeStats {
    pub candidates: usize,
    pub redundancy_pruned: u64,
}

/// Builds frontier level `size`. Level 1 is seeded with every singleton;
/// deeper levels take every pair of frontier groups whose union has exactly
/// `size` members and passes the redundancy check. The new level replaces
/// whatever was stored at `size`, and parent pairs are recorded per
/// candidate.
pub fn merge_partial_groups(
    instance: &ClaimInstance,
    frontier: &mut PartialGroupFrontier,
    size: usize,
    checker: &dyn RedundancyChecker,
) -> Result<MergeStats> {
    let mut level: BTreeMap<EvidenceGroup, BTreeSet<ParentPair>> = BTreeMap::new();
    let mut pruned = 0u64;
    if size == 1 {
        for ep in &instance.evidence {
            level.insert(EvidenceGroup::singleton(ep.id), BTreeSet::new());
        }
    } else {
        let pool = frontier.groups_below(size);
        for i in 0..pool.len() {
            for j in (i + 1)..pool.len() {
                let (g1, g2) = (&pool[i], &pool[j]);
                if g1.len() + g2.len() < size {
                    continue;
                }
                let union = g1.union(g2);
                if union.len() != size {
                    continue;
                }
                if checker.not_redundant(instance, g1, g2)? {
                    let pair = if g1 <= g2 {
                        (g1.clone(), g2.clone())
                    } else {
                        (g2.clone(), g1.clone())
                    };
                    level.entry(union).or_default().insert(pair);
                } else {
                    pruned += 1;
                }
            }
        }
    }
    let stats = MergeStats {
        candidates: level.len(),
        redundancy_pruned: pruned,
    };
    frontier.set_level(size, level);
    Ok(stats)
}

/// Runs the bottom-up search. Candidates are labeled once per size level
/// (in parallel; results are reduced in lexicographic order so scheduling
/// never shows). Search stops at the first size with at least one fully
/// supporting group and reports all of them; an exhausted `max_size` yields
/// an empty result with `found_size: None`.
///
/// A failed prediction fails the whole claim in strict mode; otherwise the
/// group is treated as not supporting and counted in the diagnostics.
pub fn identify_megs(
    instance: &ClaimInstance,
    predictor: &dyn SupportPredictor,
    checker: &dyn RedundancyChecker,
    config: &SearchConfig,
) -> Result<SearchResult> {
    config.validate()?;
    if instance.num_evidence() == 0 {
        return Err(Error::InvalidData(format!(
            "instance `{}` has no evidence",
            instance.claim_id
        )));
    }
    let mut frontier = PartialGroupFrontier::new();
    let mut diag = SearchDiagnostics::default();
    let mut found: Vec<ScoredGroup> = Vec::new();
    let mut found_size = None;

    let limit = instance.num_evidence().min(config.max_size);
    for size in 1..=limit {
        let stats = merge_partial_groups(instance, &mut frontier, size, checker)?;
        diag.redundancy_pruned += stats.redundancy_pruned;

        let candidates = frontier.level_groups(size);
        let verdicts = label_candidates(instance, predictor, &candidates);
        diag.predictor_calls += candidates.len() as u64;

        for (group, verdict) in candidates.iter().zip(verdicts) {
            let verdict = match verdict {
                Ok(v) => v,
                Err(e) if e.is_prediction_failure() => {
                    diag.failures += 1;
                    if config.strict_mode {
                        return Err(e);
                    }
                    frontier.remove(size, group);
                    continue;
                }
                Err(e) => return Err(e),
            };
            match verdict.label {
                SupportLabel::FullySupported => {
                    found.push(ScoredGroup {
                        group: group.clone(),
                        confidence: verdict.confidence,
                    });
                    frontier.remove(size, group);
                    diag.label_pruned += 1;
                }
                SupportLabel::NotSupported => {
                    frontier.remove(size, group);
                    diag.label_pruned += 1;
                }
                SupportLabel::PartiallySupported => {}
            }
        }
        if !found.is_empty() {
            found_size = Some(size);
            break;
        }
    }

    Ok(SearchResult {
        megs: rank_groups(found),
        found_size,
        diagnostics: diag,
    })
}

fn label_candidates(
    instance: &ClaimInstance,
    predictor: &dyn SupportPredictor,
    groups: &[EvidenceGroup],
) -> Vec<Result<SupportVerdict>> {
    groups
        .par_iter()
        .map(|g| predictor.predict(instance, g))
        .collect()
}

fn rank_groups(mut scored: Vec<ScoredGroup>) -> Vec<ScoredGroup> {
    scored.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.group.cmp(&b.group))
    });
    scored
}

/// Sorts by descending confidence, lexicographic members on ties, and keeps
/// the first `k`.
pub fn rank_top_k(megs: &[ScoredGroup], k: usize) -> Vec<ScoredGroup> {
    let mut ranked = rank_groups(megs.to_vec());
    ranked.truncate(k);
    ranked
}

/// Exhaustive reference search: enumerates all subsets in ascending
/// cardinality and returns every fully supporting subset of the first
/// cardinality that has one. Independent of the frontier machinery; used to
/// cross-check it. Failed predictions are treated as not supporting.
pub fn brute_force_megs(
    instance: &ClaimInstance,
    predictor: &dyn SupportPredictor,
    max_size: usize,
) -> Result<SearchResult> {
    let n = instance.num_evidence();
    if n == 0 {
        return Err(Error::InvalidData(format!(
            "instance `{}` has no evidence",
            instance.claim_id
        )));
    }
    if n > BRUTE_FORCE_MAX_EPS {
        return Err(Error::TooLarge(format!(
            "brute force handles at most {BRUTE_FORCE_MAX_EPS} evidence pieces, got {n}"
        )));
    }
    let mut diag = SearchDiagnostics::default();
    for size in 1..=n.min(max_size) {
        let mut found = Vec::new();
        for combo in (0..n).combinations(size) {
            let group = EvidenceGroup::new(combo).expect("combinations are non-empty");
            diag.predictor_calls += 1;
            match predictor.predict(instance, &group) {
                Ok(v) if v.label == SupportLabel::FullySupported => found.push(ScoredGroup {
                    group,
                    confidence: v.confidence,
                }),
                Ok(_) => {}
                Err(e) if e.is_prediction_failure() => diag.failures += 1,
                Err(e) => return Err(e),
            }
        }
        if !found.is_empty() {
            return Ok(SearchResult {
                megs: rank_groups(found),
                found_size: Some(size),
                diagnostics: diag,
            });
        }
    }
    Ok(SearchResult {
        megs: Vec::new(),
        found_size: None,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoverageModel;
    use crate::oracle::{CachedPredictor, CoverageOracle, NoPruning};
    use crate::setcover::{gen_synthetic, meg_to_setcover, solve_exact_min_covers, SyntheticSpec};

    fn group(ids: &[usize]) -> EvidenceGroup {
        EvidenceGroup::new(ids.iter().copied()).unwrap()
    }

    fn coverage_instance(num_units: usize, rows: &[Vec<usize>]) -> ClaimInstance {
        let cov = CoverageModel::new(num_units, rows).unwrap();
        ClaimInstance::new(
            "test",
            "claim",
            vec![String::new(); rows.len()],
            vec![],
            Some(cov),
        )
        .unwrap()
    }

    /// Two units; e0 covers u0, e1 covers u1, e2 covers u0. The two minimal
    /// groups are {e0,e1} and {e1,e2}.
    fn fig1() -> ClaimInstance {
        coverage_instance(2, &[vec![0], vec![1], vec![0]])
    }

    #[test]
    fn finds_both_minimal_groups() {
        let result =
            identify_megs(&fig1(), &CoverageOracle, &CoverageOracle, &SearchConfig::default())
                .unwrap();
        assert_eq!(result.found_size, Some(2));
        assert_eq!(result.groups(), vec![group(&[0, 1]), group(&[1, 2])]);
    }

    #[test]
    fn full_covering_singleton_stops_at_size_one() {
        let inst = coverage_instance(2, &[vec![0], vec![0, 1]]);
        let result =
            identify_megs(&inst, &CoverageOracle, &CoverageOracle, &SearchConfig::default())
                .unwrap();
        assert_eq!(result.found_size, Some(1));
        assert_eq!(result.groups(), vec![group(&[1])]);
    }

    #[test]
    fn infeasible_instance_returns_empty() {
        // Three units but only u0 and u1 are coverable; brute force agrees
        // that no full cover exists.
        let inst = coverage_instance(3, &[vec![0], vec![1]]);
        let config = SearchConfig {
            max_size: 3,
            ..SearchConfig::default()
        };
        let result = identify_megs(&inst, &CoverageOracle, &CoverageOracle, &config).unwrap();
        assert!(result.megs.is_empty());
        assert_eq!(result.found_size, None);
        let brute = brute_force_megs(&inst, &CoverageOracle, 3).unwrap();
        assert!(brute.megs.is_empty());
        assert_eq!(brute.found_size, None);
    }

    #[test]
    fn empty_evidence_is_hard_error() {
        let inst = ClaimInstance::new("c", "claim", vec![], vec![], None).unwrap();
        assert!(identify_megs(&inst, &CoverageOracle, &NoPruning, &SearchConfig::default()).is_err());
    }

    #[test]
    fn merge_seeds_singletons_at_size_one() {
        let inst = fig1();
        let mut frontier = PartialGroupFrontier::new();
        let stats = merge_partial_groups(&inst, &mut frontier, 1, &CoverageOracle).unwrap();
        assert_eq!(stats.candidates, 3);
        assert_eq!(
            frontier.level_groups(1),
            vec![group(&[0]), group(&[1]), group(&[2])]
        );
    }

    #[test]
    fn merge_prunes_redundant_pairs() {
        let inst = fig1();
        let mut frontier = PartialGroupFrontier::new();
        merge_partial_groups(&inst, &mut frontier, 1, &CoverageOracle).unwrap();
        let stats = merge_partial_groups(&inst, &mut frontier, 2, &CoverageOracle).unwrap();
        // e0 and e2 cover the same unit, so {e0,e2} is never formed.
        assert_eq!(frontier.level_groups(2), vec![group(&[0, 1]), group(&[1, 2])]);
        assert_eq!(stats.redundancy_pruned, 1);
        let parents = &frontier.level(2).unwrap()[&group(&[0, 1])];
        assert!(parents.contains(&(group(&[0]), group(&[1]))));
    }

    #[test]
    fn merge_yields_nothing_when_no_pair_reaches_size() {
        let inst = coverage_instance(2, &[vec![0], vec![1]]);
        let mut frontier = PartialGroupFrontier::new();
        merge_partial_groups(&inst, &mut frontier, 1, &NoPruning).unwrap();
        let stats = merge_partial_groups(&inst, &mut frontier, 3, &NoPruning).unwrap();
        assert_eq!(stats.candidates, 0);
        assert!(frontier.level_groups(3).is_empty());
    }

    #[test]
    fn ranking_orders_by_confidence_then_members() {
        let scored = vec![
            ScoredGroup { group: group(&[1, 2]), confidence: 1.0 },
            ScoredGroup { group: group(&[0, 1]), confidence: 1.0 },
            ScoredGroup { group: group(&[3]), confidence: 0.9 },
        ];
        let ranked = rank_top_k(&scored, 3);
        assert_eq!(ranked[0].group, group(&[0, 1]));
        assert_eq!(ranked[1].group, group(&[1, 2]));
        assert_eq!(ranked[2].group, group(&[3]));

        let higher = rank_top_k(
            &[
                ScoredGroup { group: group(&[0]), confidence: 0.9 },
                ScoredGroup { group: group(&[1]), confidence: 1.0 },
            ],
            2,
        );
        assert_eq!(higher[0].group, group(&[1]));

        assert_eq!(rank_top_k(&scored, 1).len(), 1);
    }

    #[test]
    fn brute_force_matches_hand_enumeration() {
        // universe {1,2,3,4}: A={1,2}, B={3,4}, C={1,3}, D={2}, E={4};
        // checking all 31 subsets by hand leaves {A,B} as the unique
        // minimum cover.
        let inst = coverage_instance(4, &[vec![0, 1], vec![2, 3], vec![0, 2], vec![1], vec![3]]);
        let result = brute_force_megs(&inst, &CoverageOracle, 5).unwrap();
        assert_eq!(result.found_size, Some(2));
        assert_eq!(result.groups(), vec![group(&[0, 1])]);
    }

    #[test]
    fn brute_force_prefers_smallest_cardinality() {
        let inst = coverage_instance(2, &[vec![0], vec![1], vec![0, 1]]);
        let result = brute_force_megs(&inst, &CoverageOracle, 3).unwrap();
        assert_eq!(result.groups(), vec![group(&[2])]);
    }

    #[test]
    fn brute_force_guards_against_blowup() {
        let inst = coverage_instance(1, &vec![vec![0]; 21]);
        assert!(matches!(
            brute_force_megs(&inst, &CoverageOracle, 21),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn agrees_with_brute_force_and_set_cover_on_seeded_instances() {
        for seed in 0..60 {
            let spec = SyntheticSpec {
                rng_seed: seed,
                num_eps: 3 + (seed as usize % 8),
                num_units: 2 + (seed as usize % 6),
                density: 0.2 + 0.1 * (seed % 5) as f64,
                guarantee_cover: seed % 3 != 0,
            };
            let inst = gen_synthetic(&spec).unwrap();
            let config = SearchConfig {
                max_size: inst.num_evidence(),
                ..SearchConfig::default()
            };
            let engine =
                identify_megs(&inst, &CoverageOracle, &CoverageOracle, &config).unwrap();
            let brute = brute_force_megs(&inst, &CoverageOracle, inst.num_evidence()).unwrap();
            assert_eq!(engine.groups(), brute.groups(), "seed {seed}");
            assert_eq!(engine.found_size, brute.found_size, "seed {seed}");

            let covers = solve_exact_min_covers(&meg_to_setcover(&inst).unwrap()).unwrap();
            let cover_groups: Vec<EvidenceGroup> = covers
                .into_iter()
                .map(|ids| EvidenceGroup::new(ids).unwrap())
                .collect();
            let mut engine_sorted = engine.groups();
            engine_sorted.sort();
            assert_eq!(engine_sorted, cover_groups, "seed {seed}");
        }
    }

    #[test]
    fn returned_groups_share_one_size_and_are_irredundant() {
        for seed in 100..140 {
            let spec = SyntheticSpec {
                rng_seed: seed,
                num_eps: 6,
                num_units: 5,
                density: 0.3,
                guarantee_cover: true,
            };
            let inst = gen_synthetic(&spec).unwrap();
            let config = SearchConfig { max_size: 6, ..SearchConfig::default() };
            let result = identify_megs(&inst, &CoverageOracle, &CoverageOracle, &config).unwrap();
            let size = result.found_size.expect("cover guaranteed");
            let cov = inst.coverage.as_ref().unwrap();
            for meg in &result.megs {
                assert_eq!(meg.group.len(), size);
                let full = cov.group_coverage(&meg.group).unwrap();
                for &drop in meg.group.members() {
                    let rest: Vec<usize> =
                        meg.group.members().iter().copied().filter(|&m| m != drop).collect();
                    if rest.is_empty() {
                        continue;
                    }
                    let smaller =
                        cov.group_coverage(&EvidenceGroup::new(rest).unwrap()).unwrap();
                    assert_ne!(smaller, full, "member {drop} is redundant in {}", meg.group);
                }
            }
        }
    }

    #[test]
    fn scheduling_does_not_change_results() {
        let spec = SyntheticSpec {
            rng_seed: 11,
            num_eps: 9,
            num_units: 6,
            density: 0.25,
            guarantee_cover: true,
        };
        let inst = gen_synthetic(&spec).unwrap();
        let config = SearchConfig { max_size: 9, ..SearchConfig::default() };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| identify_megs(&inst, &CoverageOracle, &CoverageOracle, &config).unwrap())
        };
        let single = run(1);
        let many = run(8);
        assert_eq!(single, many);
    }

    struct FlakyPredictor;

    impl SupportPredictor for FlakyPredictor {
        fn predict(&self, instance: &ClaimInstance, g: &EvidenceGroup) -> Result<SupportVerdict> {
            if g.contains(1) {
                return Err(Error::PredictionFailure("simulated".into()));
            }
            CoverageOracle.predict(instance, g)
        }
    }

    #[test]
    fn strict_mode_fails_claim_on_prediction_failure() {
        let inst = fig1();
        let config = SearchConfig { strict_mode: true, ..SearchConfig::default() };
        let err = identify_megs(&inst, &FlakyPredictor, &NoPruning, &config).unwrap_err();
        assert!(err.is_prediction_failure());
    }

    #[test]
    fn lenient_mode_drops_failed_groups_and_continues() {
        // e1 is unusable, so of the two minimal groups only none survive:
        // every full cover needs e1. The search must come back empty but
        // count the failures.
        let inst = fig1();
        let config = SearchConfig { max_size: 3, ..SearchConfig::default() };
        let result = identify_megs(&inst, &FlakyPredictor, &NoPruning, &config).unwrap();
        assert!(result.megs.is_empty());
        assert!(result.diagnostics.failures > 0);
    }

    #[test]
    fn cached_predictor_sees_each_group_once() {
        let inst = fig1();
        let cached = CachedPredictor::new(CoverageOracle);
        let config = SearchConfig { max_size: 3, ..SearchConfig::default() };
        let first = identify_megs(&inst, &cached, &NoPruning, &config).unwrap();
        let labeled_first = first.diagnostics.predictor_calls;
        assert_eq!(cached.len() as u64, labeled_first);
        // A second identical run is served entirely from cache.
        let second = identify_megs(&inst, &cached, &NoPruning, &config).unwrap();
        assert_eq!(first.megs, second.megs);
        assert_eq!(cached.len() as u64, labeled_first);
    }
}
