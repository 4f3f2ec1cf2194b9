//! Frontier-seeking drill-down counting over a segmentation tree.
//!
//! The root is asked first. Any node whose aggregated count reaches `k` is
//! expanded and all of its children are asked; nodes below `k` join the
//! frontier. Answers on a frontier sum to the image count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::SyntheticImage;
use crate::rng::RngSeed;
use crate::segtree::{FrontierSet, NodeId, SegTree};
use crate::worker::CountingCrowd;

/// Lower median of the answers.
pub fn aggregate_median(answers: &[u64]) -> Result<u64> {
    if answers.is_empty() {
        return Err(Error::EmptyAnswers);
    }
    let mut sorted = answers.to_vec();
    sorted.sort_unstable();
    Ok(sorted[(sorted.len() - 1) / 2])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub node: NodeId,
    pub answers: Vec<u64>,
    pub aggregated: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRunReport {
    pub questions: Vec<Question>,
    pub final_frontier: FrontierSet,
    pub final_count: u64,
    pub total_tasks: u64,
    /// Frontier leaves whose aggregated count still reached `k`.
    pub saturated_leaves: Vec<NodeId>,
}

impl CountRunReport {
    pub fn asked(&self) -> std::collections::BTreeSet<NodeId> {
        self.questions.iter().map(|q| q.node).collect()
    }

    pub fn questions_asked(&self) -> usize {
        self.questions.len()
    }

    /// Graphviz rendering of `tree` with each asked node's aggregated count;
    /// frontier nodes are filled, unasked nodes dashed.
    pub fn to_dot(&self, tree: &SegTree) -> String {
        let counts: BTreeMap<NodeId, u64> = self.questions.iter().map(|q| (q.node, q.aggregated)).collect();
        let mut out = String::from("digraph count {\n");
        for v in tree.ids() {
            let (label, style) = match counts.get(&v) {
                Some(c) if self.final_frontier.contains(v) => (format!("V{} = {c}", v.0), ", style=filled"),
                Some(c) => (format!("V{} = {c}", v.0), ""),
                None => (format!("V{}", v.0), ", style=dashed"),
            };
            out.push_str(&format!("  v{} [label=\"{label}\"{style}];\n", v.0));
        }
        for v in tree.ids() {
            for c in tree.children(v) {
                out.push_str(&format!("  v{} -> v{};\n", v.0, c.0));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Runs drill-down counting with simulated workers.
///
/// Questions are asked level by level; within a level, in node-id order.
/// Answer `j` to the question on node `v` is drawn with seed
/// `seed.derive2(v, j)`, so it does not depend on traversal order.
pub fn frontier_count(
    tree: &SegTree,
    image: &SyntheticImage,
    crowd: &CountingCrowd,
    k: u64,
    answers_per_question: usize,
    seed: RngSeed,
) -> Result<CountRunReport> {
    if answers_per_question == 0 {
        return Err(Error::Config("answers_per_question must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::Config("threshold k must be at least 1".into()));
    }
    crowd.validate()?;
    let truth = tree.true_counts(image)?;
    drill(tree, &truth, k, answers_per_question, |node, slot| {
        crowd.answer(slot, truth[&node], seed.derive2(node.0 as u64, slot as u64))
    })
}

/// The traversal itself, over arbitrary answer sources.
pub fn drill(
    tree: &SegTree,
    truth: &BTreeMap<NodeId, u64>,
    k: u64,
    answers_per_question: usize,
    mut ask: impl FnMut(NodeId, usize) -> u64,
) -> Result<CountRunReport> {
    debug_assert!(tree.ids().all(|id| truth.contains_key(&id)));
    let mut questions = Vec::new();
    let mut frontier = FrontierSet::default();
    let mut saturated = Vec::new();
    let mut final_count = 0u64;
    let mut level = vec![tree.root()];
    while !level.is_empty() {
        level.sort_unstable();
        let mut next = Vec::new();
        for node in level {
            let answers: Vec<u64> = (0..answers_per_question).map(|j| ask(node, j)).collect();
            let aggregated = aggregate_median(&answers)?;
            questions.push(Question {
                node,
                answers,
                aggregated,
            });
            if aggregated >= k && !tree.is_leaf(node) {
                next.extend(tree.children(node));
            } else {
                if aggregated >= k {
                    saturated.push(node);
                }
                frontier.nodes.insert(node);
                final_count += aggregated;
            }
        }
        level = next;
    }
    let total_tasks = questions.iter().map(|q| q.answers.len() as u64).sum();
    Ok(CountRunReport {
        questions,
        final_frontier: frontier,
        final_count,
        total_tasks,
        saturated_leaves: saturated,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFrontier {
    pub frontier: FrontierSet,
    pub saturated: Vec<NodeId>,
}

/// The shallowest frontier whose nodes all have true count below `k`,
/// computed from ground truth. Leaves that reach `k` are included and
/// flagged.
pub fn minimal_frontier_oracle(tree: &SegTree, image: &SyntheticImage, k: u64) -> Result<OracleFrontier> {
    let truth = tree.true_counts(image)?;
    let mut frontier = FrontierSet::default();
    let mut saturated = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(node) = stack.pop() {
        if truth[&node] < k {
            frontier.nodes.insert(node);
        } else if tree.is_leaf(node) {
            frontier.nodes.insert(node);
            saturated.push(node);
        } else {
            stack.extend(tree.children(node));
        }
    }
    saturated.sort_unstable();
    Ok(OracleFrontier { frontier, saturated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_level_scenario;
    use crate::worker::CountingWorkerModel;

    #[test]
    fn median_examples() {
        assert_eq!(aggregate_median(&[5, 7, 5]).unwrap(), 5);
        assert_eq!(aggregate_median(&[18, 18, 40]).unwrap(), 18);
        assert_eq!(aggregate_median(&[4]).unwrap(), 4);
        assert_eq!(aggregate_median(&[9, 3, 5, 7]).unwrap(), 5);
        assert_eq!(aggregate_median(&[]), Err(Error::EmptyAnswers));
    }

    #[test]
    fn two_level_trace() {
        let (image, tree) = two_level_scenario();
        let crowd = CountingCrowd::uniform(CountingWorkerModel::noiseless(20));
        let report = frontier_count(&tree, &image, &crowd, 20, 3, RngSeed(0)).unwrap();
        let asked: Vec<u32> = report.questions.iter().map(|q| q.node.0).collect();
        assert_eq!(asked, vec![0, 1, 2, 5, 6, 7]);
        assert_eq!(report.final_frontier, FrontierSet::new([1, 5, 6, 7].map(NodeId)));
        assert_eq!(report.final_count, 45);
        assert_eq!(report.total_tasks, 18);

        let oracle = minimal_frontier_oracle(&tree, &image, 20).unwrap();
        assert_eq!(oracle.frontier, report.final_frontier);
        assert!(oracle.saturated.is_empty());

        let dot = report.to_dot(&tree);
        assert!(dot.contains("v1 [label=\"V1 = 18\", style=filled]"));
        assert!(dot.contains("v3 [label=\"V3\", style=dashed]"));
    }

    #[test]
    fn root_below_threshold_asks_once() {
        let (image, tree) = two_level_scenario();
        let crowd = CountingCrowd::uniform(CountingWorkerModel::noiseless(100));
        let report = frontier_count(&tree, &image, &crowd, 100, 3, RngSeed(0)).unwrap();
        assert_eq!(report.questions.len(), 1);
        assert_eq!(report.final_count, 45);
        let oracle = minimal_frontier_oracle(&tree, &image, 100).unwrap();
        assert_eq!(oracle.frontier, FrontierSet::new([NodeId(0)]));
    }

    #[test]
    fn saturated_leaves_are_flagged() {
        let (image, tree) = two_level_scenario();
        let crowd = CountingCrowd::uniform(CountingWorkerModel::noiseless(1));
        let report = frontier_count(&tree, &image, &crowd, 1, 1, RngSeed(0)).unwrap();
        assert_eq!(report.final_frontier, FrontierSet::new(tree.leaves()));
        assert_eq!(report.final_count, 45);
        let oracle = minimal_frontier_oracle(&tree, &image, 1).unwrap();
        assert_eq!(oracle.saturated.len(), tree.leaves().len());
    }

    #[test]
    fn adversary_is_outvoted() {
        let (image, tree) = two_level_scenario();
        let crowd = CountingCrowd::with_adversary(CountingWorkerModel::noiseless(20), 2, 1000);
        for s in 0..20 {
            let report = frontier_count(&tree, &image, &crowd, 20, 3, RngSeed(s)).unwrap();
            assert_eq!(report.final_count, 45);
        }
    }

    #[test]
    fn zero_answers_rejected() {
        let (image, tree) = two_level_scenario();
        let crowd = CountingCrowd::uniform(CountingWorkerModel::noiseless(20));
        assert!(frontier_count(&tree, &image, &crowd, 20, 0, RngSeed(0)).is_err());
    }
}
