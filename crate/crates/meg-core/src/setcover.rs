//! Set Cover machinery: exact and greedy solvers, the bidirectional
//! reduction between cover instances and coverage-model claim instances, a
//! text format, and seeded synthetic instance generation.
//!
//! The exact solver doubles as the independent correctness oracle for the
//! merging search engine.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::Bitset;
use crate::error::{Error, Result};
use crate::model::{ClaimInstance, CoverageModel, EvidenceGroup};

/// Desk-scale caps for the exact solver.
pub const EXACT_MAX_UNIVERSE: usize = 24;
pub const EXACT_MAX_SUBSETS: usize = 20;

/// A universe of elements and a collection of subsets over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetCoverInstance {
    pub universe_size: usize,
    pub subsets: Vec<Bitset>,
}

impl SetCoverInstance {
    pub fn new(universe_size: usize, subsets: Vec<Bitset>) -> Result<Self> {
        if universe_size == 0 {
            return Err(Error::InvalidData("universe must have at least one element".into()));
        }
        if subsets.is_empty() {
            return Err(Error::InvalidData("instance needs at least one subset".into()));
        }
        if let Some(bad) = subsets.iter().find(|s| s.width() != universe_size) {
            return Err(Error::InvalidData(format!(
                "subset width {} does not match universe size {universe_size}",
                bad.width()
            )));
        }
        Ok(SetCoverInstance { universe_size, subsets })
    }

    fn union_of_all(&self) -> Bitset {
        let mut all = Bitset::new(self.universe_size);
        for s in &self.subsets {
            all.or_assign(s);
        }
        all
    }
}

/// All covers of minimum cardinality, as ascending index sets sorted
/// lexicographically. Returns an empty list when the subsets cannot cover
/// the universe, and a hard error above desk scale.
pub fn solve_exact_min_covers(inst: &SetCoverInstance) -> Result<Vec<Vec<usize>>> {
    if inst.universe_size > EXACT_MAX_UNIVERSE || inst.subsets.len() > EXACT_MAX_SUBSETS {
        return Err(Error::TooLarge(format!(
            "exact solver handles at most {EXACT_MAX_UNIVERSE} elements and {EXACT_MAX_SUBSETS} subsets, got {} and {}",
            inst.universe_size,
            inst.subsets.len()
        )));
    }
    if !inst.union_of_all().is_full() {
        return Ok(Vec::new());
    }
    // reach[i] = union of subsets[i..]; lets the search bail out as soon as
    // the remaining subsets cannot finish the cover.
    let n = inst.subsets.len();
    let mut reach = vec![Bitset::new(inst.universe_size); n + 1];
    for i in (0..n).rev() {
        reach[i] = reach[i + 1].union(&inst.subsets[i]);
    }

    for k in 1..=n {
        let mut covers = Vec::new();
        let mut selection = Vec::with_capacity(k);
        let covered = Bitset::new(inst.universe_size);
        extend_cover(&inst.subsets, &reach, 0, k, &covered, &mut selection, &mut covers);
        if !covers.is_empty() {
            return Ok(covers);
        }
    }
    unreachable!("feasible instance must have a cover of size <= number of subsets")
}

fn extend_cover(
    subsets: &[Bitset],
    reach: &[Bitset],
    idx: usize,
    picks_left: usize,
    covered: &Bitset,
    selection: &mut Vec<usize>,
    covers: &mut Vec<Vec<usize>>,
) {
    if covered.is_full() {
        covers.push(selection.clone());
        return;
    }
    if picks_left == 0 || idx >= subsets.len() {
        return;
    }
    if !covered.union(&reach[idx]).is_full() {
        return;
    }
    for i in idx..subsets.len() {
        // A pick adding nothing at its insertion point can only appear in
        // non-minimum covers, which the cardinality loop never reaches.
        if subsets[i].is_subset_of(covered) {
            continue;
        }
        selection.push(i);
        let next = covered.union(&subsets[i]);
        extend_cover(subsets, reach, i + 1, picks_left - 1, &next, selection, covers);
        selection.pop();
    }
}

/// Greedy cover: repeatedly takes the subset covering the most uncovered
/// elements, lowest index on ties. `None` when the instance is infeasible.
pub fn solve_greedy(inst: &SetCoverInstance) -> Option<Vec<usize>> {
    let mut covered = Bitset::new(inst.universe_size);
    let mut picked = Vec::new();
    while !covered.is_full() {
        let covered_count = covered.count_ones();
        let mut best: Option<(usize, usize)> = None;
        for (i, s) in inst.subsets.iter().enumerate() {
            let gain = covered.union(s).count_ones() - covered_count;
            if gain > 0 && best.is_none_or(|(best_gain, _)| gain > best_gain) {
                best = Some((gain, i));
            }
        }
        let (_, i) = best?;
        covered.or_assign(&inst.subsets[i]);
        picked.push(i);
    }
    picked.sort_unstable();
    Some(picked)
}

/// Maps a cover instance to a synthetic claim instance: one evidence piece
/// per subset, coverage equal to the subset, no reference groups, empty
/// texts.
pub fn setcover_to_meg(inst: &SetCoverInstance) -> ClaimInstance {
    let coverage = CoverageModel::from_bitsets(inst.universe_size, inst.subsets.clone())
        .expect("validated instance");
    ClaimInstance::new(
        "setcover",
        "",
        vec![String::new(); inst.subsets.len()],
        Vec::new(),
        Some(coverage),
    )
    .expect("structural mapping cannot violate instance invariants")
}

/// Inverse mapping: universe = claim units, one subset per evidence piece.
pub fn meg_to_setcover(instance: &ClaimInstance) -> Result<SetCoverInstance> {
    let cov = instance.coverage()?;
    let subsets = (0..cov.num_pieces())
        .map(|id| cov.piece_coverage(id).expect("contiguous ids").clone())
        .collect();
    SetCoverInstance::new(cov.num_units(), subsets)
}

/// Recipe for one seeded synthetic claim instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub rng_seed: u64,
    pub num_eps: usize,
    pub num_units: usize,
    /// Probability that an evidence piece covers any given unit.
    pub density: f64,
    /// Patch the sample until the union of coverages is full.
    pub guarantee_cover: bool,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_eps == 0 || self.num_eps > EXACT_MAX_SUBSETS {
            return Err(Error::InvalidData(format!(
                "num_eps must be in 1..={EXACT_MAX_SUBSETS} so reference covers stay solvable"
            )));
        }
        if self.num_units == 0 || self.num_units > EXACT_MAX_UNIVERSE {
            return Err(Error::InvalidData(format!(
                "num_units must be in 1..={EXACT_MAX_UNIVERSE} so reference covers stay solvable"
            )));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidData("density must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Samples a coverage-model instance deterministically from the seed. The
/// reference MEGs are the exact minimum covers, so the instance carries its
/// own ground truth.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<ClaimInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut subsets: Vec<Bitset> = (0..spec.num_eps)
        .map(|_| {
            let mut bits = Bitset::new(spec.num_units);
            for unit in 0..spec.num_units {
                if rng.gen::<f64>() < spec.density {
                    bits.set(unit);
                }
            }
            bits
        })
        .collect();
    if spec.guarantee_cover {
        let missing: Vec<usize> = {
            let mut all = Bitset::new(spec.num_units);
            for s in &subsets {
                all.or_assign(s);
            }
            (0..spec.num_units).filter(|&u| !all.get(u)).collect()
        };
        for unit in missing {
            let lucky = rng.gen_range(0..spec.num_eps);
            subsets[lucky].set(unit);
        }
    }

    let cover_instance = SetCoverInstance::new(spec.num_units, subsets.clone())?;
    let reference_megs = solve_exact_min_covers(&cover_instance)?
        .into_iter()
        .map(|ids| EvidenceGroup::new(ids).expect("covers are non-empty"))
        .collect();
    let coverage = CoverageModel::from_bitsets(spec.num_units, subsets)?;
    ClaimInstance::new(
        format!("synth-{:016x}", spec.rng_seed),
        "",
        vec![String::new(); spec.num_eps],
        reference_megs,
        Some(coverage),
    )
}

/// Parses the plain-text instance format: `universe <n>` header, then one
/// subset per line as space-separated 1-based element ids. `#` lines are
/// comments; a blank line after the header is an empty subset.
pub fn parse_setcover_text(text: &str) -> Result<SetCoverInstance> {
    let mut universe: Option<usize> = None;
    let mut subsets = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        match universe {
            None => {
                if trimmed.is_empty() {
                    continue;
                }
                let n = trimmed
                    .strip_prefix("universe")
                    .map(str::trim)
                    .and_then(|rest| rest.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse {
                        line,
                        msg: format!("expected `universe <n>`, got `{trimmed}`"),
                    })?;
                universe = Some(n);
            }
            Some(n) => {
                let mut bits = Bitset::new(n);
                for tok in trimmed.split_whitespace() {
                    let element: usize = tok.parse().map_err(|_| Error::Parse {
                        line,
                        msg: format!("bad element id `{tok}`"),
                    })?;
                    if element == 0 || element > n {
                        return Err(Error::Parse {
                            line,
                            msg: format!("element id {element} outside 1..={n}"),
                        });
                    }
                    bits.set(element - 1);
                }
                subsets.push(bits);
            }
        }
    }
    let universe = universe.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "missing `universe <n>` header".into(),
    })?;
    SetCoverInstance::new(universe, subsets)
}

pub fn format_setcover_text(inst: &SetCoverInstance) -> String {
    let mut out = format!("universe {}\n", inst.universe_size);
    for subset in &inst.subsets {
        let ids: Vec<String> = subset.indices().iter().map(|i| (i + 1).to_string()).collect();
        out.push_str(&ids.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_setcover_file(path: &Path) -> Result<SetCoverInstance> {
    parse_setcover_text(&std::fs::read_to_string(path)?)
}

pub fn write_setcover_file(path: &Path, inst: &SetCoverInstance) -> Result<()> {
    std::fs::write(path, format_setcover_text(inst))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(universe: usize, elements: &[usize]) -> Bitset {
        Bitset::from_indices(universe, elements).unwrap()
    }

    /// universe {1,2,3,4}; A={1,2}, B={3,4}, C={1,3}, D={2}, E={4} as
    /// 0-based bitsets.
    fn five_subset_instance() -> SetCoverInstance {
        SetCoverInstance::new(
            4,
            vec![
                bits(4, &[0, 1]),
                bits(4, &[2, 3]),
                bits(4, &[0, 2]),
                bits(4, &[1]),
                bits(4, &[3]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn exact_finds_the_unique_minimum_cover() {
        let covers = solve_exact_min_covers(&five_subset_instance()).unwrap();
        assert_eq!(covers, vec![vec![0, 1]]);
    }

    #[test]
    fn exact_singleton_cover() {
        let inst = SetCoverInstance::new(3, vec![bits(3, &[0, 1, 2]), bits(3, &[0])]).unwrap();
        assert_eq!(solve_exact_min_covers(&inst).unwrap(), vec![vec![0]]);
    }

    #[test]
    fn exact_infeasible_returns_empty() {
        let inst = SetCoverInstance::new(3, vec![bits(3, &[0]), bits(3, &[1])]).unwrap();
        assert!(solve_exact_min_covers(&inst).unwrap().is_empty());
    }

    #[test]
    fn exact_keeps_equally_sized_alternatives() {
        // Duplicate subsets both appear in the answer.
        let inst = SetCoverInstance::new(1, vec![bits(1, &[0]), bits(1, &[0])]).unwrap();
        assert_eq!(solve_exact_min_covers(&inst).unwrap(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn exact_rejects_oversized_instances() {
        let inst = SetCoverInstance::new(25, vec![Bitset::new(25)]).unwrap();
        assert!(matches!(solve_exact_min_covers(&inst), Err(Error::TooLarge(_))));
    }

    #[test]
    fn greedy_hand_simulation() {
        // universe {1..5}; S1={1,2,3}, S2={4,5}, S3={3,4}.
        let inst = SetCoverInstance::new(
            5,
            vec![bits(5, &[0, 1, 2]), bits(5, &[3, 4]), bits(5, &[2, 3])],
        )
        .unwrap();
        assert_eq!(solve_greedy(&inst).unwrap(), vec![0, 1]);
    }

    #[test]
    fn greedy_infeasible_returns_none() {
        let inst = SetCoverInstance::new(3, vec![bits(3, &[0])]).unwrap();
        assert!(solve_greedy(&inst).is_none());
    }

    #[test]
    fn greedy_trivial_universe() {
        let inst = SetCoverInstance::new(1, vec![bits(1, &[0])]).unwrap();
        assert_eq!(solve_greedy(&inst).unwrap(), vec![0]);
    }

    #[test]
    fn reduction_round_trip_is_bit_exact() {
        let inst = five_subset_instance();
        let claim = setcover_to_meg(&inst);
        assert_eq!(claim.num_evidence(), 5);
        assert_eq!(claim.coverage.as_ref().unwrap().num_units(), 4);
        assert!(claim.reference_megs.is_empty());
        let back = meg_to_setcover(&claim).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn reduction_keeps_empty_subsets() {
        let inst = SetCoverInstance::new(2, vec![bits(2, &[0, 1]), Bitset::new(2)]).unwrap();
        let claim = setcover_to_meg(&inst);
        let cov = claim.coverage.as_ref().unwrap();
        assert!(cov.piece_coverage(1).unwrap().is_empty_set());
        assert_eq!(meg_to_setcover(&claim).unwrap(), inst);
    }

    #[test]
    fn synthetic_generation_is_seed_deterministic() {
        let spec = SyntheticSpec {
            rng_seed: 7,
            num_eps: 10,
            num_units: 6,
            density: 0.3,
            guarantee_cover: true,
        };
        let a = gen_synthetic(&spec).unwrap();
        let b = gen_synthetic(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_guarantee_cover_forces_full_union() {
        for seed in 0..20 {
            let spec = SyntheticSpec {
                rng_seed: seed,
                num_eps: 4,
                num_units: 8,
                density: 0.1,
                guarantee_cover: true,
            };
            let inst = gen_synthetic(&spec).unwrap();
            let sc = meg_to_setcover(&inst).unwrap();
            assert!(sc.union_of_all().is_full(), "seed {seed} left units uncovered");
            assert!(!inst.reference_megs.is_empty());
        }
    }

    #[test]
    fn synthetic_full_density_makes_singleton_references() {
        let spec = SyntheticSpec {
            rng_seed: 3,
            num_eps: 5,
            num_units: 4,
            density: 1.0,
            guarantee_cover: false,
        };
        let inst = gen_synthetic(&spec).unwrap();
        let expected: Vec<EvidenceGroup> =
            (0..5).map(|i| EvidenceGroup::singleton(i)).collect();
        assert_eq!(inst.reference_megs, expected);
    }

    #[test]
    fn text_format_round_trip() {
        let inst = five_subset_instance();
        let text = format_setcover_text(&inst);
        assert!(text.starts_with("universe 4\n"));
        let parsed = parse_setcover_text(&text).unwrap();
        assert_eq!(parsed, inst);
    }

    #[test]
    fn text_format_accepts_comments_and_empty_subsets() {
        let text = "# example\nuniverse 2\n1 2\n\n";
        let inst = parse_setcover_text(text).unwrap();
        assert_eq!(inst.subsets.len(), 2);
        assert!(inst.subsets[1].is_empty_set());
    }

    #[test]
    fn text_format_rejects_out_of_range_ids() {
        assert!(parse_setcover_text("universe 2\n3\n").is_err());
        assert!(parse_setcover_text("subsets first\n").is_err());
    }

    proptest! {
        /// Every exact solution covers the universe and is minimal: no
        /// proper subset covers.
        #[test]
        fn exact_solutions_are_minimal_covers(
            universe in 1usize..7,
            rows in proptest::collection::vec(proptest::collection::vec(0usize..7, 0..5), 1..7),
        ) {
            let subsets: Vec<Bitset> = rows
                .iter()
                .map(|row| {
                    let ids: Vec<usize> = row.iter().map(|e| e % universe).collect();
                    Bitset::from_indices(universe, &ids).unwrap()
                })
                .collect();
            let inst = SetCoverInstance::new(universe, subsets).unwrap();
            let covers = solve_exact_min_covers(&inst).unwrap();
            for cover in &covers {
                let mut union = Bitset::new(universe);
                for &i in cover {
                    union.or_assign(&inst.subsets[i]);
                }
                prop_assert!(union.is_full());
                for skip in 0..cover.len() {
                    let mut partial = Bitset::new(universe);
                    for (j, &i) in cover.iter().enumerate() {
                        if j != skip {
                            partial.or_assign(&inst.subsets[i]);
                        }
                    }
                    prop_assert!(!partial.is_full(), "cover {cover:?} has a redundant member");
                }
            }
            // All covers share the minimum cardinality and are sorted.
            if let Some(first) = covers.first() {
                prop_assert!(covers.iter().all(|c| c.len() == first.len()));
                prop_assert!(covers.windows(2).all(|w| w[0] < w[1]));
            }
            // Greedy never beats exact.
            match (solve_greedy(&inst), covers.first()) {
                (Some(greedy), Some(best)) => prop_assert!(greedy.len() >= best.len()),
                (Some(_), None) => prop_assert!(false, "greedy covered an infeasible instance"),
                (None, Some(_)) => prop_assert!(false, "greedy failed a feasible instance"),
                (None, None) => {}
            }
        }
    }
}
