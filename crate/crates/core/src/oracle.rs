//! Exhaustive ground truth on small arrow configurations.
//!
//! Every perfect pairing of right-arrows to left-arrows (right-arrow at the
//! smaller vertex) is enumerated; the crossing-free one is located and compared
//! with [`sprd_pair`], and the under-edge comparison between the nested matching
//! and every alternative is checked edge by edge.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arrows::{ArrowConfiguration, Direction};
use crate::sprd::{sprd_pair, Edge, EdgeConfiguration, Topology};

/// Enumeration refuses instances with more stubs than this.
pub const MAX_STUBS: u64 = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{right} right-arrows vs {left} left-arrows")]
    Unbalanced { left: u64, right: u64 },
    #[error("{0} stubs exceeds the enumeration guard of {MAX_STUBS}")]
    TooLarge(u64),
    #[error("no perfect matching exists inside the window")]
    Infeasible,
}

/// `true` iff no two edges cross, i.e. no `i < i' < j < j'`. Shared endpoints
/// never cross.
pub fn is_nested(edges: &[Edge]) -> bool {
    let mut spans: Vec<(i64, i64)> = edges.iter().map(|e| (e.left, e.right)).collect();
    // left ascending, right descending: enclosing spans come first
    spans.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut open: Vec<i64> = Vec::new();
    for (l, r) in spans {
        while open.last().is_some_and(|&top| top <= l) {
            open.pop();
        }
        if open.last().is_some_and(|&top| r > top) {
            return false;
        }
        open.push(r);
    }
    true
}

#[derive(Debug, Clone)]
pub struct PairingEnumeration {
    cfg: ArrowConfiguration,
    matchings: Vec<EdgeConfiguration>,
    nested: Vec<usize>,
}

impl PairingEnumeration {
    pub fn config(&self) -> &ArrowConfiguration {
        &self.cfg
    }

    pub fn matchings(&self) -> &[EdgeConfiguration] {
        &self.matchings
    }

    /// Index of the crossing-free matching, if there is exactly one.
    pub fn nested_index(&self) -> Option<usize> {
        match self.nested.as_slice() {
            [only] => Some(*only),
            _ => None,
        }
    }

    pub fn nested_count(&self) -> usize {
        self.nested.len()
    }

    pub fn nested(&self) -> Option<&EdgeConfiguration> {
        self.nested_index().map(|i| &self.matchings[i])
    }
}

/// All perfect matchings of `cfg`, deduplicated by endpoint multiset.
///
/// Within a vertex, ranks go to edges in order of increasing length ("lowest
/// rank to shortest edge"). Among all labelings of one endpoint multiset this
/// one makes the `psi_e`-edge totals smallest, so it is the hardest case for
/// [`check_nested_lemma`].
pub fn enumerate_pairings(cfg: &ArrowConfiguration) -> Result<PairingEnumeration, OracleError> {
    let (left, right) = (cfg.total_left(), cfg.total_right());
    if left != right {
        return Err(OracleError::Unbalanced { left, right });
    }
    if left + right > MAX_STUBS {
        return Err(OracleError::TooLarge(left + right));
    }
    let rights: Vec<usize> = cfg
        .right_counts()
        .iter()
        .enumerate()
        .flat_map(|(o, &r)| std::iter::repeat(o).take(r as usize))
        .collect();
    let mut free_left: Vec<u32> = cfg.left_counts().to_vec();
    let mut partner = vec![0usize; rights.len()];
    let mut found: BTreeSet<Vec<(usize, usize)>> = BTreeSet::new();
    extend_matching(&rights, 0, &mut free_left, &mut partner, &mut found);
    if found.is_empty() {
        return Err(OracleError::Infeasible);
    }
    let matchings: Vec<EdgeConfiguration> = found
        .into_iter()
        .map(|pairs| label_matching(cfg, &pairs))
        .collect();
    let nested = matchings
        .iter()
        .enumerate()
        .filter(|(_, m)| is_nested(m.edges()))
        .map(|(i, _)| i)
        .collect();
    Ok(PairingEnumeration {
        cfg: cfg.clone(),
        matchings,
        nested,
    })
}

fn extend_matching(
    rights: &[usize],
    k: usize,
    free_left: &mut [u32],
    partner: &mut [usize],
    found: &mut BTreeSet<Vec<(usize, usize)>>,
) {
    if k == rights.len() {
        let mut pairs: Vec<(usize, usize)> = rights.iter().copied().zip(partner.iter().copied()).collect();
        pairs.sort_unstable();
        found.insert(pairs);
        return;
    }
    let i = rights[k];
    // right-arrows at one vertex are interchangeable: take partners in
    // non-decreasing order so each multiset is produced once
    let start = if k > 0 && rights[k - 1] == i {
        partner[k - 1]
    } else {
        i + 1
    };
    for j in start..free_left.len() {
        if free_left[j] == 0 {
            continue;
        }
        free_left[j] -= 1;
        partner[k] = j;
        extend_matching(rights, k + 1, free_left, partner, found);
        free_left[j] += 1;
    }
}

fn label_matching(cfg: &ArrowConfiguration, pairs: &[(usize, usize)]) -> EdgeConfiguration {
    let base = cfg.first_vertex();
    // pairs are sorted by (left, right); ranks at the left endpoint follow that order
    let mut next_right: BTreeMap<usize, u32> = BTreeMap::new();
    let mut next_left: BTreeMap<usize, u32> = BTreeMap::new();
    let mut by_right: Vec<(usize, usize, usize)> = pairs
        .iter()
        .enumerate()
        .map(|(idx, &(i, j))| (j, j - i, idx))
        .collect();
    by_right.sort_unstable();
    let mut left_rank = vec![0u32; pairs.len()];
    for (j, _, idx) in by_right {
        let r = next_left.entry(j).or_insert(0);
        *r += 1;
        left_rank[idx] = *r;
    }
    let edges = pairs
        .iter()
        .enumerate()
        .map(|(idx, &(i, j))| {
            let r = next_right.entry(i).or_insert(0);
            *r += 1;
            Edge {
                left: base + i as i64,
                right: base + j as i64,
                step: (j - i) as u64,
                right_rank: *r,
                left_rank: left_rank[idx],
            }
        })
        .collect();
    EdgeConfiguration::new(base, cfg.len(), Topology::Line, cfg.len() as u64, edges, vec![])
}

/// Arrow sets attached to an edge `e = (i, i + n)` of the nested matching.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnderEdgeSets {
    pub edge: Edge,
    /// `(vertex, rank)` of right-arrows: ranks `1..=j` at `i` and every
    /// right-arrow strictly between the endpoints.
    pub psi_r: BTreeSet<(i64, u32)>,
    /// Ranks `1..=j'` at `i + n` and every left-arrow strictly between.
    pub psi_l: BTreeSet<(i64, u32)>,
    /// Total length of the `psi_r`-edges of the nested matching, `e` included.
    pub t_e: u64,
    /// Total length of the edges strictly under `e`.
    pub strictly_under: u64,
    /// `w~_k` for `k = i + 1 ..= i + n`: nested `psi_r`-edges crossing `[k-1, k]`.
    pub nested_crossings: Vec<(i64, u64)>,
}

impl UnderEdgeSets {
    pub fn new(cfg: &ArrowConfiguration, nested: &EdgeConfiguration, edge: Edge) -> Self {
        let (i, end) = (edge.left, edge.right);
        let mut psi_r: BTreeSet<(i64, u32)> = (1..=edge.right_rank).map(|k| (i, k)).collect();
        let mut psi_l: BTreeSet<(i64, u32)> = (1..=edge.left_rank).map(|k| (end, k)).collect();
        for v in i + 1..end {
            psi_r.extend((1..=cfg.right_at(v)).map(|k| (v, k)));
            psi_l.extend((1..=cfg.left_at(v)).map(|k| (v, k)));
        }
        let t_e = psi_r_total(&psi_r, nested);
        let nested_crossings = (i + 1..=end)
            .map(|k| (k, crossings(&psi_r, nested, k, Direction::Right)))
            .collect();
        Self {
            edge,
            psi_r,
            psi_l,
            t_e,
            strictly_under: t_e - edge.step,
            nested_crossings,
        }
    }

    /// `t_e^(r)` in `other`.
    pub fn right_total_in(&self, other: &EdgeConfiguration) -> u64 {
        psi_r_total(&self.psi_r, other)
    }

    /// `t_e^(l)` in `other`.
    pub fn left_total_in(&self, other: &EdgeConfiguration) -> u64 {
        other
            .edges()
            .iter()
            .filter(|e| self.psi_l.contains(&(e.right, e.left_rank)))
            .map(|e| e.step)
            .sum()
    }
}

fn psi_r_total(psi_r: &BTreeSet<(i64, u32)>, ec: &EdgeConfiguration) -> u64 {
    ec.edges()
        .iter()
        .filter(|e| psi_r.contains(&(e.left, e.right_rank)))
        .map(|e| e.step)
        .sum()
}

/// Edges of `ec` whose arrow (right-arrow for `Right`, left-arrow for `Left`)
/// is in `set` and that span the unit interval `[k - 1, k]`.
fn crossings(set: &BTreeSet<(i64, u32)>, ec: &EdgeConfiguration, k: i64, side: Direction) -> u64 {
    ec.edges()
        .iter()
        .filter(|e| e.left <= k - 1 && e.right >= k)
        .filter(|e| match side {
            Direction::Right => set.contains(&(e.left, e.right_rank)),
            Direction::Left => set.contains(&(e.right, e.left_rank)),
        })
        .count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaBound {
    /// `t_e(N) <= t_e^(r)(E)`
    RightTotal,
    /// `t_e(N) <= t_e^(l)(E)`
    LeftTotal,
    /// `w_k^(r)(E) >= w~_k^(r)`
    RightInterval { k: i64 },
    /// `w_k^(l)(E) >= w~_k^(l)`
    LeftInterval { k: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaViolation {
    pub matching: usize,
    pub edge: (i64, i64),
    pub bound: LemmaBound,
    pub nested_value: u64,
    pub alternative_value: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub total_checks: u64,
    pub interval_checks: u64,
    pub violations: Vec<LemmaViolation>,
}

/// Compare every edge of the nested matching against every matching in the
/// enumeration (the nested one included, where all bounds are equalities).
pub fn check_nested_lemma(enumeration: &PairingEnumeration) -> LemmaReport {
    let mut report = LemmaReport::default();
    let Some(nested) = enumeration.nested() else {
        return report;
    };
    let cfg = enumeration.config();
    let (lo, hi) = (cfg.first_vertex(), cfg.end_vertex());
    for &edge in nested.edges() {
        let sets = UnderEdgeSets::new(cfg, nested, edge);
        let nested_left: Vec<(i64, u64)> = (lo + 1..hi)
            .map(|k| (k, crossings(&sets.psi_l, nested, k, Direction::Left)))
            .collect();
        for (idx, alt) in enumeration.matchings().iter().enumerate() {
            let mut violate = |bound, nested_value, alternative_value| {
                report.violations.push(LemmaViolation {
                    matching: idx,
                    edge: (edge.left, edge.right),
                    bound,
                    nested_value,
                    alternative_value,
                })
            };
            let (tr, tl) = (sets.right_total_in(alt), sets.left_total_in(alt));
            report.total_checks += 2;
            if sets.t_e > tr {
                violate(LemmaBound::RightTotal, sets.t_e, tr);
            }
            if sets.t_e > tl {
                violate(LemmaBound::LeftTotal, sets.t_e, tl);
            }
            for k in lo + 1..hi {
                report.interval_checks += 2;
                let nested_r = sets
                    .nested_crossings
                    .iter()
                    .find(|(kk, _)| *kk == k)
                    .map_or(0, |(_, w)| *w);
                let alt_r = crossings(&sets.psi_r, alt, k, Direction::Right);
                if alt_r < nested_r {
                    violate(LemmaBound::RightInterval { k }, nested_r, alt_r);
                }
                let nested_l = nested_left[(k - lo - 1) as usize].1;
                let alt_l = crossings(&sets.psi_l, alt, k, Direction::Left);
                if alt_l < nested_l {
                    violate(LemmaBound::LeftInterval { k }, nested_l, alt_l);
                }
            }
        }
    }
    report
}

/// Exactly one crossing-free matching, equal (as an endpoint multiset) to the
/// stepwise pairing of the same configuration.
pub fn check_nested_uniqueness(enumeration: &PairingEnumeration) -> bool {
    let Some(nested) = enumeration.nested() else {
        return false;
    };
    let cfg = enumeration.config();
    let stepwise = sprd_pair(cfg, cfg.len() as u64);
    stepwise.censored().is_empty() && stepwise.endpoint_multiset() == nested.endpoint_multiset()
}

/// Every balanced, feasible configuration on `1..=max_vertices` vertices with
/// `L + R <= max_stubs_per_vertex` at each vertex.
pub fn sweep_family(max_vertices: usize, max_stubs_per_vertex: u32) -> Vec<ArrowConfiguration> {
    let states: Vec<(u32, u32)> = (0..=max_stubs_per_vertex)
        .flat_map(|l| (0..=max_stubs_per_vertex - l).map(move |r| (l, r)))
        .collect();
    let mut out = Vec::new();
    for w in 1..=max_vertices {
        let total = states.len().pow(w as u32);
        for mut code in 0..total {
            let mut left = Vec::with_capacity(w);
            let mut right = Vec::with_capacity(w);
            for _ in 0..w {
                let (l, r) = states[code % states.len()];
                code /= states.len();
                left.push(l);
                right.push(r);
            }
            let cfg = ArrowConfiguration::from_counts(0, left, right).expect("equal lengths");
            if cfg.total_left() == cfg.total_right() && is_feasible(&cfg) {
                out.push(cfg);
            }
        }
    }
    out
}

/// A perfect matching exists iff every prefix has at least as many
/// right-arrows as left-arrows.
fn is_feasible(cfg: &ArrowConfiguration) -> bool {
    let mut balance: i64 = 0;
    for (l, r) in cfg.left_counts().iter().zip(cfg.right_counts()) {
        balance -= i64::from(*l);
        if balance < 0 {
            return false;
        }
        balance += i64::from(*r);
    }
    balance == 0
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SweepSummary {
    pub instances: u64,
    pub total_matchings: u64,
    /// number of matchings -> number of instances with that many
    pub matching_counts: BTreeMap<usize, u64>,
    pub lemma_total_checks: u64,
    pub lemma_interval_checks: u64,
    pub lemma_violations: Vec<SweepViolation>,
    pub uniqueness_failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepViolation {
    pub instance: String,
    pub violation: LemmaViolation,
}

impl SweepSummary {
    pub fn passed(&self) -> bool {
        self.instances > 0 && self.lemma_violations.is_empty() && self.uniqueness_failures.is_empty()
    }
}

fn describe(cfg: &ArrowConfiguration) -> String {
    cfg.left_counts()
        .iter()
        .zip(cfg.right_counts())
        .map(|(l, r)| format!("{l}{r}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Run enumeration, uniqueness, and the lemma over `instances`, in parallel.
pub fn run_sweep(instances: &[ArrowConfiguration]) -> Result<SweepSummary, OracleError> {
    let partials: Vec<SweepSummary> = instances
        .par_iter()
        .map(|cfg| {
            let en = enumerate_pairings(cfg)?;
            let lemma = check_nested_lemma(&en);
            let label = describe(cfg);
            let mut s = SweepSummary {
                instances: 1,
                total_matchings: en.matchings().len() as u64,
                lemma_total_checks: lemma.total_checks,
                lemma_interval_checks: lemma.interval_checks,
                ..SweepSummary::default()
            };
            s.matching_counts.insert(en.matchings().len(), 1);
            if !check_nested_uniqueness(&en) {
                s.uniqueness_failures.push(label.clone());
            }
            s.lemma_violations = lemma
                .violations
                .into_iter()
                .map(|violation| SweepViolation {
                    instance: label.clone(),
                    violation,
                })
                .collect();
            Ok(s)
        })
        .collect::<Result<_, OracleError>>()?;
    Ok(partials.into_iter().fold(SweepSummary::default(), |mut acc, s| {
        acc.instances += s.instances;
        acc.total_matchings += s.total_matchings;
        for (k, v) in s.matching_counts {
            *acc.matching_counts.entry(k).or_default() += v;
        }
        acc.lemma_total_checks += s.lemma_total_checks;
        acc.lemma_interval_checks += s.lemma_interval_checks;
        acc.lemma_violations.extend(s.lemma_violations);
        acc.uniqueness_failures.extend(s.uniqueness_failures);
        acc
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(left: &[u32], right: &[u32]) -> ArrowConfiguration {
        ArrowConfiguration::from_counts(0, left.to_vec(), right.to_vec()).unwrap()
    }

    fn e(left: i64, right: i64) -> Edge {
        Edge { left, right, step: (right - left) as u64, right_rank: 1, left_rank: 1 }
    }

    fn brute_nested(edges: &[Edge]) -> bool {
        edges.iter().all(|a| {
            edges.iter().all(|b| !(a.left < b.left && b.left < a.right && a.right < b.right))
        })
    }

    #[test]
    fn nested_definition_cases() {
        assert!(is_nested(&[e(0, 1), e(2, 3)]));
        assert!(!is_nested(&[e(0, 2), e(1, 3)]));
        assert!(is_nested(&[e(0, 2), e(1, 2)]));
        assert!(is_nested(&[e(0, 2), e(0, 1)]));
        assert!(is_nested(&[e(0, 3), e(1, 2)]));
        assert!(is_nested(&[]));
    }

    #[test]
    fn single_edge_instance() {
        let en = enumerate_pairings(&cfg(&[0, 1], &[1, 0])).unwrap();
        assert_eq!(en.matchings().len(), 1);
        assert!(check_nested_uniqueness(&en));
        let report = check_nested_lemma(&en);
        assert!(report.violations.is_empty());
        let nested = en.nested().unwrap();
        let sets = UnderEdgeSets::new(en.config(), nested, nested.edges()[0]);
        assert_eq!(sets.strictly_under, 0);
    }

    #[test]
    fn two_by_two_instance() {
        let c = cfg(&[0, 0, 1, 1], &[1, 1, 0, 0]);
        let en = enumerate_pairings(&c).unwrap();
        let sets: Vec<Vec<(i64, i64)>> = en.matchings().iter().map(|m| m.endpoint_multiset()).collect();
        assert_eq!(sets, vec![vec![(0, 2), (1, 3)], vec![(0, 3), (1, 2)]]);
        assert!(check_nested_uniqueness(&en));
        let nested = en.nested().unwrap();
        assert_eq!(nested.endpoint_multiset(), vec![(0, 3), (1, 2)]);
        assert_eq!(nested, &sprd_pair(&c, 4));

        let outer = *nested.edges().iter().find(|x| x.left == 0).unwrap();
        let sets = UnderEdgeSets::new(&c, nested, outer);
        assert_eq!(sets.strictly_under, 1);
        assert_eq!(sets.t_e, 4);
        assert_eq!(sets.nested_crossings, vec![(1, 1), (2, 2), (3, 1)]);
        let crossing = &en.matchings()[0];
        assert_eq!(sets.right_total_in(crossing), 4);
        assert_eq!(sets.left_total_in(crossing), 4);
        assert!(check_nested_lemma(&en).violations.is_empty());
    }

    #[test]
    fn enumeration_errors() {
        assert_eq!(
            enumerate_pairings(&cfg(&[0, 1], &[1, 1])).unwrap_err(),
            OracleError::Unbalanced { left: 1, right: 2 }
        );
        assert_eq!(
            enumerate_pairings(&cfg(&[1, 0], &[0, 1])).unwrap_err(),
            OracleError::Infeasible
        );
        assert_eq!(
            enumerate_pairings(&cfg(&[0, 7], &[7, 0])).unwrap_err(),
            OracleError::TooLarge(14)
        );
    }

    #[test]
    fn duplicate_stubs_are_deduplicated() {
        // two rights at 0, two lefts at 1: one graph, not two
        let en = enumerate_pairings(&cfg(&[0, 2], &[2, 0])).unwrap();
        assert_eq!(en.matchings().len(), 1);
        let ranks: Vec<(u32, u32)> = en.matchings()[0].edges().iter().map(|e| (e.right_rank, e.left_rank)).collect();
        assert_eq!(ranks, vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn small_sweep_is_clean() {
        let family = sweep_family(4, 2);
        assert!(family.len() > 50);
        let summary = run_sweep(&family).unwrap();
        assert!(summary.passed(), "{summary:?}");
        assert_eq!(summary.instances as usize, family.len());
    }

    #[test]
    fn feasibility_matches_enumeration() {
        for w in 1..=4 {
            let states = [(0u32, 0u32), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)];
            for code in 0..6usize.pow(w) {
                let mut c = code;
                let (mut l, mut r) = (vec![], vec![]);
                for _ in 0..w {
                    l.push(states[c % 6].0);
                    r.push(states[c % 6].1);
                    c /= 6;
                }
                let cf = cfg(&l, &r);
                if cf.total_left() != cf.total_right() {
                    continue;
                }
                assert_eq!(is_feasible(&cf), enumerate_pairings(&cf).is_ok(), "{l:?} {r:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn fast_nested_check_matches_brute_force(
            spans in proptest::collection::vec((0i64..12, 1i64..6), 0..10)
        ) {
            let edges: Vec<Edge> = spans.iter().map(|&(l, n)| e(l, l + n)).collect();
            prop_assert_eq!(is_nested(&edges), brute_nested(&edges));
        }

        #[test]
        fn stepwise_output_is_always_enumerated(
            v in proptest::collection::vec((0u32..2, 0u32..2), 1..7)
        ) {
            let (l, r): (Vec<u32>, Vec<u32>) = v.into_iter().unzip();
            let c = cfg(&l, &r);
            if let Ok(en) = enumerate_pairings(&c) {
                let stepwise = sprd_pair(&c, c.len() as u64);
                prop_assert!(en.matchings().iter().any(|m| *m == stepwise));
                // nested totals agree with the interval counts
                let nested = en.nested().unwrap();
                for &edge in nested.edges() {
                    let s = UnderEdgeSets::new(&c, nested, edge);
                    prop_assert_eq!(s.t_e, s.nested_crossings.iter().map(|(_, w)| *w).sum::<u64>());
                }
            }
        }
    }
}
