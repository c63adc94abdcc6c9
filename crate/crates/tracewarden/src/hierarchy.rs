//! Tool-hierarchy recovery from benign execution paths.
//!
//! Every tool gets a tentative level seeded from its earliest observed
//! position (0-based internally; serialized forms add 1 so level 1 is the
//! highest). Levels are then tightened by a queue-driven propagation pass:
//! refreshing a path around an anchor clamps the prefix, flattens same-level
//! blocks to the right, and shrinks higher nodes against a moving baseline.
//! Any tool whose level decreases is re-queued until a global fixpoint is
//! reached. Levels only ever decrease; the fixpoint does not depend on path
//! or queue order.
//!
//! From the fixpoint two relation kinds are derived: dominance (adjacent
//! invocation exactly one level apart) and interchangeability (same-level
//! tools witnessed in both relative orders).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::ExecutionPath;

#[derive(Debug, Error, PartialEq)]
pub enum HierarchyError {
    #[error("cannot profile an empty corpus")]
    EmptyCorpus,
}

/// Internal 0-based tool levels. `display_levels` shifts to the 1-based
/// presentation used in serialized profiles.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LevelMap {
    levels: BTreeMap<String, u32>,
}

impl LevelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_internal(levels: BTreeMap<String, u32>) -> Self {
        Self { levels }
    }

    pub fn level(&self, tool: &str) -> Option<u32> {
        self.levels.get(tool).copied()
    }

    pub fn contains(&self, tool: &str) -> bool {
        self.levels.contains_key(tool)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, u32)> {
        self.levels.iter().map(|(k, v)| (k, *v))
    }

    /// Lower the tool's level to `candidate` if that tightens it. Returns
    /// true when the stored level strictly decreased.
    fn tighten(&mut self, tool: &str, candidate: u32) -> bool {
        match self.levels.get_mut(tool) {
            Some(current) => {
                if candidate < *current {
                    *current = candidate;
                    true
                } else {
                    false
                }
            }
            None => {
                self.levels.insert(tool.to_string(), candidate);
                false
            }
        }
    }

    /// 1-based levels for serialization (level 1 = highest).
    pub fn display_levels(&self) -> BTreeMap<String, u32> {
        self.levels
            .iter()
            .map(|(k, v)| (k.clone(), v + 1))
            .collect()
    }

    pub fn from_display(displayed: &BTreeMap<String, u32>) -> Self {
        Self {
            levels: displayed
                .iter()
                .map(|(k, v)| (k.clone(), v.saturating_sub(1)))
                .collect(),
        }
    }
}

/// Where each tool occurs: tool -> set of (path index, position).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OccurrenceIndex {
    occ: BTreeMap<String, Vec<(usize, usize)>>,
}

impl OccurrenceIndex {
    pub fn occurrences(&self, tool: &str) -> &[(usize, usize)] {
        self.occ.get(tool).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn tools(&self) -> impl Iterator<Item = &String> {
        self.occ.keys()
    }
}

/// Dominance and interchangeability relations extracted under a level map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationSet {
    /// Ordered pairs (A, B): B invoked right after A and exactly one level
    /// below it.
    pub dominance: BTreeSet<(String, String)>,
    /// Unordered pairs stored sorted: same level, both orders witnessed.
    pub interchangeable: BTreeSet<(String, String)>,
}

impl RelationSet {
    pub fn is_superset_of(&self, other: &RelationSet) -> bool {
        other.dominance.is_subset(&self.dominance)
            && other.interchangeable.is_subset(&self.interchangeable)
    }
}

/// Queue discipline for propagation. The fixpoint is the same either way;
/// exposing the choice lets tests demonstrate that.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueOrder {
    Fifo,
    Lifo,
}

/// Seed levels from earliest positions and build the occurrence index.
pub fn init_levels(paths: &[Vec<String>]) -> Result<(LevelMap, OccurrenceIndex), HierarchyError> {
    if paths.is_empty() || paths.iter().any(Vec::is_empty) {
        return Err(HierarchyError::EmptyCorpus);
    }
    let mut levels = BTreeMap::new();
    let mut occ: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, path) in paths.iter().enumerate() {
        for (j, tool) in path.iter().enumerate() {
            occ.entry(tool.clone()).or_default().push((i, j));
            let pos = j as u32;
            levels
                .entry(tool.clone())
                .and_modify(|l| {
                    if pos < *l {
                        *l = pos;
                    }
                })
                .or_insert(pos);
        }
    }
    Ok((LevelMap::from_internal(levels), OccurrenceIndex { occ }))
}

/// Re-establish local consistency of one path around an anchor position.
///
/// Three phases, all monotone (a level is only ever lowered):
/// 1. prefix clamping — nodes left of the anchor drop to at most the
///    anchor's level;
/// 2. same-level flattening — when the scan meets a node at or above the
///    baseline, the accumulated block collapses onto that node's level;
/// 3. baseline shrinking — otherwise the node is capped at baseline + 1 and
///    the baseline advances.
///
/// Returns the set of tools whose level strictly decreased.
pub fn refresh_path_from_anchor(
    path: &[String],
    anchor: usize,
    levels: &mut LevelMap,
) -> BTreeSet<String> {
    assert!(anchor < path.len(), "anchor within bounds");
    let mut decreased = BTreeSet::new();
    let anchor_level = levels
        .level(&path[anchor])
        .expect("anchor tool has a level");

    for tool in &path[..anchor] {
        if levels.tighten(tool, anchor_level) {
            decreased.insert(tool.clone());
        }
    }

    let mut baseline = anchor_level;
    let mut block_start = anchor + 1;
    for t in anchor + 1..path.len() {
        let current = levels.level(&path[t]).expect("tool has a level");
        if current <= baseline {
            for tool in &path[block_start..=t] {
                if levels.tighten(tool, current) {
                    decreased.insert(tool.clone());
                }
            }
            baseline = current;
            block_start = t + 1;
        } else {
            if levels.tighten(&path[t], baseline + 1) {
                decreased.insert(path[t].clone());
            }
            baseline = levels.level(&path[t]).expect("tool has a level");
        }
    }
    decreased
}

/// Run level propagation to its global fixpoint over tool-name sequences.
pub fn propagate(paths: &[Vec<String>]) -> Result<LevelMap, HierarchyError> {
    propagate_with_order(paths, QueueOrder::Fifo)
}

pub fn propagate_with_order(
    paths: &[Vec<String>],
    order: QueueOrder,
) -> Result<LevelMap, HierarchyError> {
    let (mut levels, occ) = init_levels(paths)?;

    let mut queue: VecDeque<String> = VecDeque::new();
    let mut queued: BTreeSet<String> = BTreeSet::new();
    let enqueue =
        |delta: BTreeSet<String>, queue: &mut VecDeque<String>, queued: &mut BTreeSet<String>| {
            for tool in delta {
                if queued.insert(tool.clone()) {
                    queue.push_back(tool);
                }
            }
        };

    loop {
        // One tightening pass over every (path, anchor) pair.
        for (i, path) in paths.iter().enumerate() {
            for j in 0..path.len() {
                let delta = refresh_path_from_anchor(&paths[i], j, &mut levels);
                enqueue(delta, &mut queue, &mut queued);
            }
        }

        // Drain the queue: every decrease is re-propagated to all paths
        // containing the decreased tool.
        while let Some(tool) = match order {
            QueueOrder::Fifo => queue.pop_front(),
            QueueOrder::Lifo => queue.pop_back(),
        } {
            queued.remove(&tool);
            for &(i, j) in occ.occurrences(&tool) {
                let delta = refresh_path_from_anchor(&paths[i], j, &mut levels);
                enqueue(delta, &mut queue, &mut queued);
            }
        }

        // Confirm the fixpoint: a clean verification sweep terminates; any
        // residual decrease loops back through the queue.
        let mut dirty = false;
        for (i, path) in paths.iter().enumerate() {
            for j in 0..path.len() {
                let delta = refresh_path_from_anchor(&paths[i], j, &mut levels);
                if !delta.is_empty() {
                    dirty = true;
                    enqueue(delta, &mut queue, &mut queued);
                }
            }
        }
        if !dirty {
            return Ok(levels);
        }
    }
}

/// Propagate over execution paths (convenience wrapper).
pub fn propagate_paths(paths: &[ExecutionPath]) -> Result<LevelMap, HierarchyError> {
    let seqs: Vec<Vec<String>> = paths.iter().map(ExecutionPath::tool_names).collect();
    propagate(&seqs)
}

/// Extract dominance and interchangeability relations from `paths` under a
/// level map that is refresh-stable for them.
pub fn relations(paths: &[Vec<String>], levels: &LevelMap) -> RelationSet {
    let mut set = RelationSet::default();
    // Ordered co-occurrence witnesses: (u, v) = u observed before v.
    let mut before: BTreeSet<(String, String)> = BTreeSet::new();

    for path in paths {
        for w in path.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if let (Some(la), Some(lb)) = (levels.level(a), levels.level(b)) {
                if lb == la + 1 {
                    set.dominance.insert((a.clone(), b.clone()));
                }
            }
        }
        for i in 0..path.len() {
            for j in i + 1..path.len() {
                if path[i] != path[j] {
                    before.insert((path[i].clone(), path[j].clone()));
                }
            }
        }
    }

    for (u, v) in &before {
        if u < v && before.contains(&(v.clone(), u.clone())) {
            let (lu, lv) = (levels.level(u), levels.level(v));
            if lu.is_some() && lu == lv {
                set.interchangeable.insert((u.clone(), v.clone()));
            }
        }
    }
    set
}

#[cfg(test)]
pub(crate) fn paths_of(names: &[&[&str]]) -> Vec<Vec<String>> {
    names
        .iter()
        .map(|p| p.iter().map(|s| s.to_string()).collect())
        .collect()
}

/// Exhaustive refresh-until-stable reference: repeatedly applies the refresh
/// step over every (path, anchor) pair until nothing changes. Used by tests
/// as the oracle the queue-driven propagation must agree with.
#[cfg(test)]
pub(crate) fn propagate_oracle(paths: &[Vec<String>]) -> Result<LevelMap, HierarchyError> {
    let (mut levels, _) = init_levels(paths)?;
    loop {
        let mut changed = false;
        for path in paths {
            for j in 0..path.len() {
                if !refresh_path_from_anchor(path, j, &mut levels).is_empty() {
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(levels);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn level_of(levels: &LevelMap, tool: &str) -> u32 {
        levels.level(tool).unwrap()
    }

    #[test]
    fn init_single_path_uses_positions() {
        let paths = paths_of(&[&["A1", "A2", "B", "M"]]);
        let (levels, occ) = init_levels(&paths).unwrap();
        assert_eq!(level_of(&levels, "A1"), 0);
        assert_eq!(level_of(&levels, "A2"), 1);
        assert_eq!(level_of(&levels, "B"), 2);
        assert_eq!(level_of(&levels, "M"), 3);
        assert_eq!(occ.occurrences("B"), &[(0, 2)]);
    }

    #[test]
    fn init_takes_min_position_across_paths() {
        let paths = paths_of(&[&["A1", "A2", "B", "M"], &["A1", "A2", "M", "B"]]);
        let (levels, _) = init_levels(&paths).unwrap();
        assert_eq!(level_of(&levels, "M"), 2);
        assert_eq!(level_of(&levels, "B"), 2);
    }

    #[test]
    fn init_singleton_path() {
        let paths = paths_of(&[&["A1"]]);
        let (levels, _) = init_levels(&paths).unwrap();
        assert_eq!(level_of(&levels, "A1"), 0);
        assert_eq!(levels.len(), 1);
    }

    #[test]
    fn init_empty_corpus_errors() {
        assert_eq!(init_levels(&[]).unwrap_err(), HierarchyError::EmptyCorpus);
        let with_empty = vec![vec!["A".to_string()], vec![]];
        assert_eq!(
            init_levels(&with_empty).unwrap_err(),
            HierarchyError::EmptyCorpus
        );
    }

    #[test]
    fn refresh_prefix_clamp_lowers_m() {
        let path: Vec<String> = ["A1", "A2", "M", "B"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut levels = LevelMap::from_internal(
            [("A1", 0), ("A2", 1), ("M", 3), ("B", 2)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        );
        let delta = refresh_path_from_anchor(&path, 3, &mut levels);
        assert_eq!(delta, BTreeSet::from(["M".to_string()]));
        assert_eq!(level_of(&levels, "M"), 2);
    }

    #[test]
    fn refresh_fixpoint_returns_empty() {
        let path: Vec<String> = ["A1", "A2", "B"].iter().map(|s| s.to_string()).collect();
        let mut levels = LevelMap::from_internal(
            [("A1", 0), ("A2", 1), ("B", 2)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        );
        let delta = refresh_path_from_anchor(&path, 2, &mut levels);
        assert!(delta.is_empty());
    }

    #[test]
    fn refresh_baseline_shrink_keeps_c() {
        let path: Vec<String> = ["A1", "A2", "B", "C"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut levels = LevelMap::from_internal(
            [("A1", 0), ("A2", 1), ("B", 2), ("C", 3)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        );
        let delta = refresh_path_from_anchor(&path, 2, &mut levels);
        assert!(delta.is_empty());
        assert_eq!(level_of(&levels, "C"), 3);
    }

    #[test]
    fn refresh_flatten_collapses_block() {
        // Y sits between X and Z; Z's lower level pulls Y down with it.
        let path: Vec<String> = ["X", "Y", "Z"].iter().map(|s| s.to_string()).collect();
        let mut levels = LevelMap::from_internal(
            [("X", 0), ("Y", 1), ("Z", 0)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        );
        let delta = refresh_path_from_anchor(&path, 0, &mut levels);
        assert_eq!(delta, BTreeSet::from(["Y".to_string()]));
        assert_eq!(level_of(&levels, "Y"), 0);
    }

    #[test]
    fn propagate_two_path_corpus() {
        let paths = paths_of(&[&["A1", "A2", "B", "M"], &["A1", "A2", "M", "B"]]);
        let levels = propagate(&paths).unwrap();
        assert_eq!(level_of(&levels, "A1"), 0);
        assert_eq!(level_of(&levels, "A2"), 1);
        assert_eq!(level_of(&levels, "B"), 2);
        assert_eq!(level_of(&levels, "M"), 2);
        // Display convention: L1/L2/L3.
        assert_eq!(levels.display_levels()["A1"], 1);
        assert_eq!(levels.display_levels()["M"], 3);
        assert_eq!(levels, propagate_oracle(&paths).unwrap());
    }

    #[test]
    fn propagate_single_path_keeps_positions() {
        let paths = paths_of(&[&["A", "B", "C"]]);
        let levels = propagate(&paths).unwrap();
        assert_eq!(level_of(&levels, "A"), 0);
        assert_eq!(level_of(&levels, "B"), 1);
        assert_eq!(level_of(&levels, "C"), 2);
    }

    fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
        let tool_count = rng.random_range(1..=6usize);
        let tools: Vec<String> = (0..tool_count).map(|i| format!("T{i}")).collect();
        let path_count = rng.random_range(1..=5usize);
        (0..path_count)
            .map(|_| {
                let len = rng.random_range(1..=6usize);
                (0..len)
                    .map(|_| tools[rng.random_range(0..tool_count)].clone())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn propagate_matches_oracle_on_random_corpora() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let corpus = random_corpus(&mut rng);
            assert_eq!(
                propagate(&corpus).unwrap(),
                propagate_oracle(&corpus).unwrap(),
                "corpus: {corpus:?}"
            );
        }
    }

    #[test]
    fn propagate_is_order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let mut corpus = random_corpus(&mut rng);
            let fifo = propagate_with_order(&corpus, QueueOrder::Fifo).unwrap();
            let lifo = propagate_with_order(&corpus, QueueOrder::Lifo).unwrap();
            assert_eq!(fifo, lifo);
            corpus.shuffle(&mut rng);
            let shuffled = propagate(&corpus).unwrap();
            assert_eq!(fifo, shuffled);
        }
    }

    #[test]
    fn propagation_never_raises_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let corpus = random_corpus(&mut rng);
            let (init, _) = init_levels(&corpus).unwrap();
            let fixed = propagate(&corpus).unwrap();
            for (tool, level) in fixed.iter() {
                assert!(level <= init.level(tool).unwrap());
            }
        }
    }

    #[test]
    fn relations_on_worked_corpus() {
        let paths = paths_of(&[&["A1", "A2", "B", "M"], &["A1", "A2", "M", "B"]]);
        let levels = propagate(&paths).unwrap();
        let rel = relations(&paths, &levels);
        let expect_dom: BTreeSet<(String, String)> = [("A1", "A2"), ("A2", "B"), ("A2", "M")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert_eq!(rel.dominance, expect_dom);
        assert_eq!(
            rel.interchangeable,
            BTreeSet::from([("B".to_string(), "M".to_string())])
        );
    }

    #[test]
    fn relations_single_path_has_no_interchange() {
        let paths = paths_of(&[&["A", "B", "C"]]);
        let levels = propagate(&paths).unwrap();
        let rel = relations(&paths, &levels);
        assert!(rel.interchangeable.is_empty());
        assert_eq!(rel.dominance.len(), 2);
    }

    #[test]
    fn relations_grow_under_corpus_union() {
        // Relations visible in each half, evaluated under the combined
        // fixpoint, never exceed what the union itself yields.
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let corpus = random_corpus(&mut rng);
            if corpus.len() < 2 {
                continue;
            }
            let split = rng.random_range(1..corpus.len());
            let (l1, l2) = corpus.split_at(split);
            let levels = propagate(&corpus).unwrap();
            let combined = relations(&corpus, &levels);
            assert!(combined.is_superset_of(&relations(l1, &levels)));
            assert!(combined.is_superset_of(&relations(l2, &levels)));
        }
    }

    #[test]
    fn interchangeability_is_level_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let corpus = random_corpus(&mut rng);
            let levels = propagate(&corpus).unwrap();
            let rel = relations(&corpus, &levels);
            for (a, b) in &rel.interchangeable {
                assert!(a < b, "stored sorted");
                assert_eq!(levels.level(a), levels.level(b));
            }
        }
    }

    proptest! {
        // A second propagation over an already-fixed corpus changes nothing.
        #[test]
        fn fixpoint_is_stable(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let corpus = random_corpus(&mut rng);
            let mut levels = propagate(&corpus).unwrap();
            for path in &corpus {
                for j in 0..path.len() {
                    prop_assert!(refresh_path_from_anchor(path, j, &mut levels).is_empty());
                }
            }
        }
    }
}
