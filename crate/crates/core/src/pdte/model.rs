//! Decision tree models: JSON schema, validation, cleartext evaluation and synthetic trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Decision,
    Leaf,
}

/// One node of the exchange format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: u64,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attr: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub precision: u32,
    pub num_attributes: usize,
    pub root: u64,
    pub nodes: Vec<NodeJson>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateId(u64),
    MissingRoot(u64),
    DanglingChild { node: u64, child: u64 },
    Cycle(u64),
    SharedChild(u64),
    Unreachable(u64),
    MissingField { node: u64, field: &'static str },
    UnexpectedField { node: u64, field: &'static str },
    ThresholdOverflow { node: u64, threshold: u64, precision: u32 },
    AttributeOutOfRange { node: u64, attr: usize, num_attributes: usize },
    BadPrecision(u32),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "duplicate id {id}"),
            Violation::MissingRoot(id) => write!(f, "root {id} is not a node"),
            Violation::DanglingChild { node, child } => write!(f, "node {node}: dangling child {child}"),
            Violation::Cycle(id) => write!(f, "cycle through node {id}"),
            Violation::SharedChild(id) => write!(f, "node {id} has more than one parent"),
            Violation::Unreachable(id) => write!(f, "node {id} is unreachable from the root"),
            Violation::MissingField { node, field } => write!(f, "node {node}: missing {field}"),
            Violation::UnexpectedField { node, field } => write!(f, "node {node}: unexpected {field}"),
            Violation::ThresholdOverflow { node, threshold, precision } => {
                write!(f, "node {node}: threshold overflow ({threshold} does not fit in {precision} bits)")
            }
            Violation::AttributeOutOfRange { node, attr, num_attributes } => {
                write!(f, "node {node}: attribute {attr} out of range ({num_attributes} attributes)")
            }
            Violation::BadPrecision(n) => write!(f, "precision {n} is outside 1..=63"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("malformed tree JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("attribute {index} missing: {len} attributes supplied")]
    AttributeIndex { index: usize, len: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Decision { attr: usize, threshold: u64, left: usize, right: usize },
    Leaf { value: u64 },
}

/// A validated tree. Node indices are internal; `ids` keeps the external ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionTreeModel {
    pub precision: u32,
    pub num_attributes: usize,
    pub root: usize,
    pub nodes: Vec<Node>,
    pub ids: Vec<u64>,
}

/// Checks every structural invariant and reports all violations found.
pub fn validate(tree: &TreeJson) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(1..=63).contains(&tree.precision) {
        out.push(Violation::BadPrecision(tree.precision));
    }
    let mut index: HashMap<u64, usize> = HashMap::new();
    for (i, n) in tree.nodes.iter().enumerate() {
        if index.insert(n.id, i).is_some() {
            out.push(Violation::DuplicateId(n.id));
        }
    }
    for n in &tree.nodes {
        match n.kind {
            NodeKind::Decision => {
                for (field, present) in
                    [("attr", n.attr.is_some()), ("threshold", n.threshold.is_some()), ("left", n.left.is_some()), ("right", n.right.is_some())]
                {
                    if !present {
                        out.push(Violation::MissingField { node: n.id, field });
                    }
                }
                if n.value.is_some() {
                    out.push(Violation::UnexpectedField { node: n.id, field: "value" });
                }
                if let Some(t) = n.threshold {
                    if tree.precision < 64 && t >> tree.precision.min(63) != 0 {
                        out.push(Violation::ThresholdOverflow { node: n.id, threshold: t, precision: tree.precision });
                    }
                }
                if let Some(a) = n.attr {
                    if a >= tree.num_attributes {
                        out.push(Violation::AttributeOutOfRange { node: n.id, attr: a, num_attributes: tree.num_attributes });
                    }
                }
                for child in [n.left, n.right].into_iter().flatten() {
                    if child == n.id {
                        out.push(Violation::Cycle(n.id));
                    } else if !index.contains_key(&child) {
                        out.push(Violation::DanglingChild { node: n.id, child });
                    }
                }
            }
            NodeKind::Leaf => {
                if n.value.is_none() {
                    out.push(Violation::MissingField { node: n.id, field: "value" });
                }
                for (field, present) in
                    [("attr", n.attr.is_some()), ("threshold", n.threshold.is_some()), ("left", n.left.is_some()), ("right", n.right.is_some())]
                {
                    if present {
                        out.push(Violation::UnexpectedField { node: n.id, field });
                    }
                }
            }
        }
    }
    if !index.contains_key(&tree.root) {
        out.push(Violation::MissingRoot(tree.root));
        return out;
    }
    // walk from the root; a revisit is either a cycle or a shared child
    let mut parents: HashMap<u64, usize> = HashMap::new();
    let mut seen: HashSet<u64> = HashSet::new();
    let mut on_path: HashSet<u64> = HashSet::new();
    fn walk(
        tree: &TreeJson,
        index: &HashMap<u64, usize>,
        id: u64,
        seen: &mut HashSet<u64>,
        on_path: &mut HashSet<u64>,
        parents: &mut HashMap<u64, usize>,
        out: &mut Vec<Violation>,
    ) {
        seen.insert(id);
        on_path.insert(id);
        let n = &tree.nodes[index[&id]];
        if n.kind == NodeKind::Decision {
            for child in [n.left, n.right].into_iter().flatten() {
                if child == id || !index.contains_key(&child) {
                    continue; // reported above
                }
                let count = parents.entry(child).or_insert(0);
                *count += 1;
                if on_path.contains(&child) {
                    out.push(Violation::Cycle(child));
                } else if *count > 1 {
                    out.push(Violation::SharedChild(child));
                } else if !seen.contains(&child) {
                    walk(tree, index, child, seen, on_path, parents, out);
                }
            }
        }
        on_path.remove(&id);
    }
    walk(tree, &index, tree.root, &mut seen, &mut on_path, &mut parents, &mut out);
    if parents.contains_key(&tree.root) && !out.iter().any(|v| matches!(v, Violation::Cycle(_))) {
        out.push(Violation::Cycle(tree.root));
    }
    for n in &tree.nodes {
        if !seen.contains(&n.id) {
            out.push(Violation::Unreachable(n.id));
        }
    }
    out
}

impl DecisionTreeModel {
    pub fn from_json(tree: &TreeJson) -> Result<Self, ModelError> {
        let violations = validate(tree);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let index: HashMap<u64, usize> = tree.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let nodes = tree
            .nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::Decision => Node::Decision {
                    attr: n.attr.unwrap(),
                    threshold: n.threshold.unwrap(),
                    left: index[&n.left.unwrap()],
                    right: index[&n.right.unwrap()],
                },
                NodeKind::Leaf => Node::Leaf { value: n.value.unwrap() },
            })
            .collect();
        Ok(Self {
            precision: tree.precision,
            num_attributes: tree.num_attributes,
            root: index[&tree.root],
            nodes,
            ids: tree.nodes.iter().map(|n| n.id).collect(),
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        Self::from_json(&serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> TreeJson {
        let nodes = self
            .nodes
            .iter()
            .zip(&self.ids)
            .map(|(n, &id)| match *n {
                Node::Decision { attr, threshold, left, right } => NodeJson {
                    id,
                    kind: NodeKind::Decision,
                    attr: Some(attr),
                    threshold: Some(threshold),
                    left: Some(self.ids[left]),
                    right: Some(self.ids[right]),
                    value: None,
                },
                Node::Leaf { value } => NodeJson {
                    id,
                    kind: NodeKind::Leaf,
                    attr: None,
                    threshold: None,
                    left: None,
                    right: None,
                    value: Some(value),
                },
            })
            .collect();
        TreeJson { precision: self.precision, num_attributes: self.num_attributes, root: self.ids[self.root], nodes }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("tree serialises")
    }

    /// Walks from the root, going left iff `x[attr] <= threshold`.
    pub fn eval_clear(&self, x: &[u64]) -> Result<u64, ModelError> {
        let mut at = self.root;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return Ok(value),
                Node::Decision { attr, threshold, left, right } => {
                    let v = *x.get(attr).ok_or(ModelError::AttributeIndex { index: attr, len: x.len() })?;
                    at = if v <= threshold { left } else { right };
                }
            }
        }
    }

    /// Position in [`Self::leaves`] of the leaf reached by `x`.
    pub fn eval_leaf_index(&self, x: &[u64]) -> Result<usize, ModelError> {
        let target = {
            let mut at = self.root;
            while let Node::Decision { attr, threshold, left, right } = self.nodes[at] {
                let v = *x.get(attr).ok_or(ModelError::AttributeIndex { index: attr, len: x.len() })?;
                at = if v <= threshold { left } else { right };
            }
            at
        };
        Ok(self.leaves().iter().position(|&l| l == target).expect("reached leaf is listed"))
    }

    /// Node indices in depth-first order, left child first.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(i) = stack.pop() {
            out.push(i);
            if let Node::Decision { left, right, .. } = self.nodes[i] {
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }

    /// Leaves in canonical left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        self.preorder().into_iter().filter(|&i| matches!(self.nodes[i], Node::Leaf { .. })).collect()
    }

    pub fn decision_nodes(&self) -> Vec<usize> {
        self.preorder().into_iter().filter(|&i| matches!(self.nodes[i], Node::Decision { .. })).collect()
    }

    pub fn leaf_values(&self) -> Vec<u64> {
        self.leaves()
            .into_iter()
            .map(|i| match self.nodes[i] {
                Node::Leaf { value } => value,
                Node::Decision { .. } => unreachable!(),
            })
            .collect()
    }

    /// Number of decision nodes on the longest root-to-leaf path.
    pub fn comparison_depth(&self) -> usize {
        fn go(m: &DecisionTreeModel, i: usize) -> usize {
            match m.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Decision { left, right, .. } => 1 + go(m, left).max(go(m, right)),
            }
        }
        go(self, self.root)
    }
}

/// Builder that assigns ids in creation order.
struct Builder {
    nodes: Vec<Node>,
}

impl Builder {
    fn push(&mut self, n: Node) -> usize {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn finish(self, precision: u32, num_attributes: usize, root: usize) -> DecisionTreeModel {
        let ids = (0..self.nodes.len() as u64).collect();
        DecisionTreeModel { precision, num_attributes, root, nodes: self.nodes, ids }
    }
}

fn random_decision<R: Rng>(rng: &mut R, n: u32, num_attributes: usize) -> (usize, u64) {
    (rng.gen_range(0..num_attributes), rng.gen_range(0..1u64 << n))
}

const LEAF_VALUES: u64 = 256;

/// Balanced tree with `2^(depth - 1) - 1` decision nodes (a tree of depth 6 has 31), uniform
/// attributes and thresholds, and leaf values below 256.
pub fn synth_tree(depth: u32, n: u32, num_attributes: usize, seed: u64) -> DecisionTreeModel {
    assert!(depth >= 1 && depth <= 20 && num_attributes >= 1 && (1..=63).contains(&n));
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut b = Builder { nodes: Vec::new() };
    fn build<R: Rng>(b: &mut Builder, rng: &mut R, levels: u32, n: u32, attrs: usize) -> usize {
        if levels == 0 {
            let value = rng.gen_range(0..LEAF_VALUES);
            return b.push(Node::Leaf { value });
        }
        let (attr, threshold) = random_decision(rng, n, attrs);
        let at = b.push(Node::Leaf { value: 0 });
        let left = build(b, rng, levels - 1, n, attrs);
        let right = build(b, rng, levels - 1, n, attrs);
        b.nodes[at] = Node::Decision { attr, threshold, left, right };
        at
    }
    let root = build(&mut b, &mut rng, depth - 1, n, num_attributes);
    b.finish(n, num_attributes, root)
}

/// Random, generally unbalanced tree with at most `max_depth - 1` comparisons on any path.
pub fn random_tree(max_depth: u32, n: u32, num_attributes: usize, seed: u64) -> DecisionTreeModel {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut b = Builder { nodes: Vec::new() };
    fn build<R: Rng>(b: &mut Builder, rng: &mut R, levels: u32, n: u32, attrs: usize, first: bool) -> usize {
        if levels == 0 || (!first && rng.gen_bool(0.3)) {
            let value = rng.gen_range(0..LEAF_VALUES);
            return b.push(Node::Leaf { value });
        }
        let (attr, threshold) = random_decision(rng, n, attrs);
        let at = b.push(Node::Leaf { value: 0 });
        let left = build(b, rng, levels - 1, n, attrs, false);
        let right = build(b, rng, levels - 1, n, attrs, false);
        b.nodes[at] = Node::Decision { attr, threshold, left, right };
        at
    }
    let root = build(&mut b, &mut rng, max_depth.saturating_sub(1), n, num_attributes, true);
    b.finish(n, num_attributes, root)
}

/// A single decision node and two leaves.
pub fn stump(attr: usize, threshold: u64, left_value: u64, right_value: u64, n: u32, num_attributes: usize) -> DecisionTreeModel {
    DecisionTreeModel {
        precision: n,
        num_attributes,
        root: 0,
        nodes: vec![
            Node::Decision { attr, threshold, left: 1, right: 2 },
            Node::Leaf { value: left_value },
            Node::Leaf { value: right_value },
        ],
        ids: vec![0, 1, 2],
    }
}
