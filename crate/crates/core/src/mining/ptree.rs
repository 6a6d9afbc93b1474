//! Private prefix-tree partitioner and gram extraction.
//!
//! The tree is grown top-down. Every node queries, for each symbol in
//! alphabet order, the noisy size of the sub-partition whose records extend
//! the node's prefix by that symbol; children are kept only when the noisy
//! count clears the empty-partition threshold θ. Sibling queries touch
//! disjoint records, so privacy loss adds up along root-to-leaf paths only.
//!
//! Once built, the tree is post-processed to satisfy the consistency
//! constraints and then traversed: each prefix ω = αx adds its count to every
//! suffix x with length in `q_min..=q_max`. Extraction is free of privacy
//! cost and can be repeated with other `(q_min, q_max, k)`, except for
//! hybrid trees whose budget schedule depends on `q_max`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{top_k, ScoredGram};
use crate::dp::{noisy_count_in, LaplaceSampler, PrivacyBudget};
use crate::error::{Error, Result};
use crate::records::{Alphabet, Dataset, RecordId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Allocation {
    Linear,
    Exponential,
    Adaptive,
    Hybrid,
}

impl std::str::FromStr for Allocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Allocation::Linear),
            "exponential" => Ok(Allocation::Exponential),
            "adaptive" => Ok(Allocation::Adaptive),
            "hybrid" => Ok(Allocation::Hybrid),
            other => Err(Error::invalid(format!("unknown allocation strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub epsilon: f64,
    pub h_max: usize,
    /// Fixed empty-partition threshold; `None` uses `sqrt(2) / ε̃` per query.
    #[serde(default)]
    pub theta: Option<f64>,
    pub strategy: Allocation,
    pub q_min: usize,
    pub q_max: usize,
    pub k: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            epsilon: 0.1,
            h_max: 8,
            theta: None,
            strategy: Allocation::Hybrid,
            q_min: 1,
            q_max: 3,
            k: 75,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if self.q_min == 0 || self.q_min > self.q_max {
            return Err(Error::invalid("need 1 <= q_min <= q_max"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if let Some(t) = self.theta {
            if !t.is_finite() {
                return Err(Error::invalid("theta must be finite"));
            }
        }
        Ok(())
    }

    /// Grams of length `q_max` cannot be extracted from a shallower tree.
    pub fn depth_warning(&self) -> Option<String> {
        (self.h_max < self.q_max).then(|| {
            format!(
                "h_max {} < q_max {}: grams longer than h_max are never extracted",
                self.h_max, self.q_max
            )
        })
    }

    pub fn theta_for(&self, epsilon_query: f64) -> f64 {
        self.theta.unwrap_or_else(|| std::f64::consts::SQRT_2 / epsilon_query)
    }
}

/// Per-level schedule before adaptive switching and clamping. `level` is
/// the depth of the nodes being queried, starting at 1.
pub fn scheduled_budget(strategy: Allocation, epsilon: f64, h_max: usize, q_max: usize, level: usize) -> f64 {
    match strategy {
        Allocation::Linear => epsilon / h_max as f64,
        Allocation::Exponential | Allocation::Adaptive => {
            epsilon * 2f64.powi(level as i32 - 1) / (2f64.powi(h_max as i32 + 1) - 1.0)
        }
        Allocation::Hybrid => {
            if level <= q_max {
                epsilon * level as f64 / (q_max * (q_max + 1)) as f64
            } else {
                let tail_levels = h_max.saturating_sub(q_max) as i32;
                epsilon * 2f64.powi((level - q_max - 1) as i32) / (2.0 * (2f64.powi(tail_levels) - 1.0))
            }
        }
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct PrefixTreeNode {
    pub label: String,
    pub noisy_count: f64,
    /// Records having `label` as a prefix, sorted by id. Private state.
    pub partition: Vec<RecordId>,
    /// Charge of the query that created this node (0 for the root).
    pub epsilon_used: f64,
    pub budget_accumulated: f64,
    pub depth: usize,
    /// Threshold the node cleared when it was created.
    pub theta: f64,
    /// Charge of the queries issued for this node's children, if expanded.
    pub child_query_epsilon: Option<f64>,
    pub children: Vec<(char, NodeId)>,
}

#[derive(Debug, Clone)]
pub struct PrefixTree {
    nodes: Vec<PrefixTreeNode>,
    epsilon: f64,
    strategy: Allocation,
    h_max: usize,
    built_q_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDumpNode {
    pub label: String,
    pub noisy_count: f64,
    pub epsilon_used: f64,
    pub depth: usize,
    pub children: Vec<char>,
}

impl PrefixTree {
    pub fn root(&self) -> &PrefixTreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &PrefixTreeNode {
        &self.nodes[id]
    }

    /// Nodes in creation (pre-)order; parents precede children.
    pub fn nodes(&self) -> &[PrefixTreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn strategy(&self) -> Allocation {
        self.strategy
    }

    pub fn h_max(&self) -> usize {
        self.h_max
    }

    pub fn find(&self, label: &str) -> Option<&PrefixTreeNode> {
        let mut cur = 0;
        for c in label.chars() {
            cur = self.nodes[cur].children.iter().find(|(s, _)| *s == c)?.1;
        }
        Some(&self.nodes[cur])
    }

    /// Privacy spent along every root-to-leaf chain, including the queries a
    /// leaf issued for children that did not pass the threshold.
    pub fn path_totals(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter(|n| n.children.is_empty())
            .map(|n| n.budget_accumulated + n.child_query_epsilon.unwrap_or(0.0))
            .collect()
    }

    /// Node count per depth, index 0 being the root.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for n in &self.nodes {
            if sizes.len() <= n.depth {
                sizes.resize(n.depth + 1, 0);
            }
            sizes[n.depth] += 1;
        }
        sizes
    }

    /// Shareable view of the tree: counts, charges and shape, never the
    /// partitions.
    pub fn dump(&self) -> Vec<TreeDumpNode> {
        self.nodes
            .iter()
            .map(|n| TreeDumpNode {
                label: n.label.clone(),
                noisy_count: n.noisy_count,
                epsilon_used: n.epsilon_used,
                depth: n.depth,
                children: n.children.iter().map(|(c, _)| *c).collect(),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.dump())?)
    }
}

/// Charge for the queries on `node`'s children under `config`, clamped to the
/// budget left on the node's path.
pub fn allocate_budget(node: &PrefixTreeNode, config: &TreeConfig) -> f64 {
    let remaining = (config.epsilon - node.budget_accumulated).max(0.0);
    let level = node.depth + 1;
    // A node created with a count barely above the empty threshold is a
    // non-frequent prefix; the root never is.
    let infrequent = node.depth > 0 && node.noisy_count <= 2.0 * node.theta;
    let scheduled = scheduled_budget(config.strategy, config.epsilon, config.h_max, config.q_max, level);
    let amount = match config.strategy {
        Allocation::Adaptive if infrequent => remaining,
        Allocation::Hybrid if infrequent && node.depth >= config.q_max => remaining,
        _ => scheduled,
    };
    amount.min(remaining)
}

struct Builder<'a> {
    config: &'a TreeConfig,
    alphabet: &'a Alphabet,
    texts: Vec<Vec<char>>,
    ids: Vec<RecordId>,
    nodes: Vec<PrefixTreeNode>,
}

impl Builder<'_> {
    fn expand(
        &mut self,
        id: NodeId,
        members: &[u32],
        scope: &mut Vec<u32>,
        budget: &mut PrivacyBudget,
        sampler: &mut LaplaceSampler,
    ) -> Result<()> {
        let node = &self.nodes[id];
        let remaining = self.config.epsilon - node.budget_accumulated;
        if node.depth >= self.config.h_max || remaining <= self.config.epsilon * 1e-12 {
            return Ok(());
        }
        let eps = allocate_budget(node, self.config);
        if eps <= 0.0 {
            return Ok(());
        }
        let depth = node.depth;
        let accumulated = node.budget_accumulated;
        let label = node.label.clone();
        self.nodes[id].child_query_epsilon = Some(eps);

        // Refine the sorted member list into one sorted list per symbol.
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); self.alphabet.len()];
        for &m in members {
            if let Some(&c) = self.texts[m as usize].get(depth) {
                if let Some(a) = self.alphabet.index_of(c) {
                    buckets[a].push(m);
                }
            }
        }

        let theta = self.config.theta_for(eps);
        for (a, bucket) in buckets.into_iter().enumerate() {
            let symbol = self.alphabet.symbol(a);
            let mut child_label = label.clone();
            child_label.push(symbol);
            scope.push(a as u32);
            let count = noisy_count_in(
                bucket.len() as u64,
                eps,
                budget,
                sampler,
                scope,
                &format!("ptree {child_label}"),
            )?;
            if count > theta {
                let child = self.nodes.len();
                self.nodes.push(PrefixTreeNode {
                    label: child_label,
                    noisy_count: count,
                    partition: bucket.iter().map(|&m| self.ids[m as usize]).collect(),
                    epsilon_used: eps,
                    budget_accumulated: accumulated + eps,
                    depth: depth + 1,
                    theta,
                    child_query_epsilon: None,
                    children: Vec::new(),
                });
                self.nodes[id].children.push((symbol, child));
                self.expand(child, &bucket, scope, budget, sampler)?;
            }
            scope.pop();
        }
        Ok(())
    }
}

/// Grows the noisy prefix tree. Every query is charged to `budget` in the
/// scope of the prefix it counts.
pub fn build_tree(
    dataset: &Dataset,
    alphabet: &Alphabet,
    config: &TreeConfig,
    budget: &mut PrivacyBudget,
    sampler: &mut LaplaceSampler,
) -> Result<PrefixTree> {
    config.validate()?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by_key(|&i| dataset.records()[i].id);
    let records = dataset.records();
    let texts: Vec<Vec<char>> = order.iter().map(|&i| records[i].text.chars().collect()).collect();
    let ids: Vec<RecordId> = order.iter().map(|&i| records[i].id).collect();
    let root = PrefixTreeNode {
        label: String::new(),
        noisy_count: 0.0,
        partition: ids.clone(),
        epsilon_used: 0.0,
        budget_accumulated: 0.0,
        depth: 0,
        theta: 0.0,
        child_query_epsilon: None,
        children: Vec::new(),
    };
    let members: Vec<u32> = (0..ids.len() as u32).collect();
    let mut builder = Builder {
        config,
        alphabet,
        texts,
        ids,
        nodes: vec![root],
    };
    builder.expand(0, &members, &mut Vec::new(), budget, sampler)?;
    let mut nodes = builder.nodes;
    // The root count is never queried; report the sum of its children.
    nodes[0].noisy_count = nodes[0]
        .children
        .iter()
        .map(|&(_, c)| nodes[c].noisy_count.max(0.0))
        .sum();
    Ok(PrefixTree {
        nodes,
        epsilon: config.epsilon,
        strategy: config.strategy,
        h_max: config.h_max,
        built_q_max: config.q_max,
    })
}

/// Post-processes noisy counts so that every node is at least each child and
/// at least the sum of its children. Top-down: clamp each child into
/// `[0, parent]`, then scale the children by `parent / sum` when their sum
/// still exceeds the parent.
pub fn enforce_consistency(mut tree: PrefixTree) -> PrefixTree {
    let root_children: Vec<NodeId> = tree.nodes[0].children.iter().map(|&(_, c)| c).collect();
    for &c in &root_children {
        tree.nodes[c].noisy_count = tree.nodes[c].noisy_count.max(0.0);
    }
    tree.nodes[0].noisy_count = root_children.iter().map(|&c| tree.nodes[c].noisy_count).sum();

    for id in 0..tree.nodes.len() {
        let parent = tree.nodes[id].noisy_count.max(0.0);
        tree.nodes[id].noisy_count = parent;
        let kids: Vec<NodeId> = tree.nodes[id].children.iter().map(|&(_, c)| c).collect();
        if kids.is_empty() {
            continue;
        }
        let mut counts: Vec<f64> = kids
            .iter()
            .map(|&c| tree.nodes[c].noisy_count.clamp(0.0, parent))
            .collect();
        let sum: f64 = counts.iter().sum();
        if sum > parent {
            let factor = parent / sum;
            for v in &mut counts {
                *v *= factor;
            }
            // Rounding can leave the scaled sum a few ulps above the parent.
            loop {
                let sum: f64 = counts.iter().sum();
                if sum <= parent {
                    break;
                }
                let (imax, _) = counts
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .expect("non-empty");
                let lowered = (counts[imax] - (sum - parent)).min(counts[imax].next_down());
                counts[imax] = lowered.max(0.0);
            }
        }
        for (&c, v) in kids.iter().zip(counts) {
            tree.nodes[c].noisy_count = v;
        }
    }
    tree
}

/// Accumulates every prefix count into the suffixes of the prefix and
/// returns the `k` grams with the largest accumulated frequency.
pub fn extract_grams(tree: &PrefixTree, q_min: usize, q_max: usize, k: usize) -> Result<Vec<ScoredGram>> {
    if q_min == 0 || q_min > q_max {
        return Err(Error::invalid("need 1 <= q_min <= q_max"));
    }
    if tree.strategy == Allocation::Hybrid && q_max != tree.built_q_max {
        return Err(Error::invalid(format!(
            "hybrid tree was built for q_max {}; rebuild to extract q_max {q_max}",
            tree.built_q_max
        )));
    }
    let mut freq: HashMap<String, f64> = HashMap::new();
    for node in tree.nodes.iter().skip(1) {
        if node.noisy_count <= 0.0 {
            continue;
        }
        let chars: Vec<char> = node.label.chars().collect();
        let len = chars.len();
        if len < q_min {
            continue;
        }
        for q in q_min..=q_max.min(len) {
            let suffix: String = chars[len - q..].iter().collect();
            *freq.entry(suffix).or_insert(0.0) += node.noisy_count;
        }
    }
    let grams = freq.into_iter().map(|(g, f)| ScoredGram::new(g, f)).collect();
    Ok(top_k(grams, k))
}

/// Build, post-process and extract. The tree is returned for re-extraction.
pub fn ptree_mine(
    dataset: &Dataset,
    alphabet: &Alphabet,
    config: &TreeConfig,
    budget: &mut PrivacyBudget,
    sampler: &mut LaplaceSampler,
) -> Result<(PrefixTree, Vec<ScoredGram>)> {
    let tree = enforce_consistency(build_tree(dataset, alphabet, config, budget, sampler)?);
    let grams = extract_grams(&tree, config.q_min, config.q_max, config.k)?;
    Ok((tree, grams))
}
