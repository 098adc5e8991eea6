//! Causal graphs with latent confounders (ADMGs) and the exploration sets
//! derived from them.
//!
//! A [`CausalGraph`] holds directed edges, bidirected edges (an unobserved
//! common cause between two observed nodes) and a role for every node. The
//! minimal intervention sets are enumerated with the graphical criterion: a
//! subset `S` of the treatments is kept when every member of `S` is still an
//! ancestor of the target after cutting the edges into `S`.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::cmp::Reverse;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("invalid node name {0:?}")]
    InvalidName(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("node {0} declared twice")]
    DuplicateNode(String),
    #[error("directed cycle through {}", join(.0))]
    CycleDetected(Vec<NodeId>),
    #[error("graph has no target node")]
    NoTarget,
    #[error("graph has several target nodes: {}", join(.0))]
    MultipleTargets(Vec<NodeId>),
    #[error("node {node} declared both {first} and {second}")]
    RoleConflict {
        node: NodeId,
        first: Role,
        second: Role,
    },
    #[error("confounder must connect two distinct nodes, got {0} <-> {0}")]
    SelfConfounder(NodeId),
    #[error("cannot intervene on non-treatment node {0}")]
    NonManipulativeCut(NodeId),
    #[error("exploration set contains non-treatment node {0}")]
    NotTreatment(NodeId),
    #[error("no POMIS list registered for this graph")]
    PomisUnavailable,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn join(nodes: &[NodeId]) -> String {
    nodes.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(", ")
}

/// Name of an observed variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Result<Self, GraphError> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(GraphError::InvalidName(name));
        }
        Ok(NodeId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

/// A set of nodes; iteration order is the lexicographic name order.
pub type NodeSet = BTreeSet<NodeId>;

/// Builds a [`NodeSet`] from names, panicking on invalid names. Handy in tests
/// and for bundled data.
pub fn node_set<I, S>(names: I) -> NodeSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    names
        .into_iter()
        .map(|n| NodeId::new(n).expect("valid node name"))
        .collect()
}

/// `∅` for the empty set, `{B,D}` otherwise.
pub fn format_set(set: &NodeSet) -> String {
    if set.is_empty() {
        "∅".to_string()
    } else {
        let names: Vec<&str> = set.iter().map(NodeId::as_str).collect();
        format!("{{{}}}", names.join(","))
    }
}

/// Deterministic set order: by size, then lexicographically.
pub fn sort_sets(sets: &mut [NodeSet]) {
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Role {
    Treatment,
    NonManipulative,
    Target,
}

impl Role {
    fn keyword(self) -> &'static str {
        match self {
            Role::Treatment => "treatment",
            Role::NonManipulative => "context",
            Role::Target => "target",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExplorationSetKind {
    Mis,
    Pomis,
    Bo,
    Custom(Vec<NodeSet>),
}

#[derive(Debug, Clone, Default)]
pub struct CausalGraph {
    nodes: Vec<NodeId>,
    roles: Vec<Role>,
    index: HashMap<NodeId, usize>,
    directed: BTreeSet<(usize, usize)>,
    bidirected: BTreeSet<(usize, usize)>,
}

impl CausalGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node. Re-declaring a node with the same role is a no-op; a
    /// different role is a [`GraphError::RoleConflict`].
    pub fn add_node(&mut self, name: &str, role: Role) -> Result<(), GraphError> {
        let id = NodeId::new(name)?;
        if let Some(&i) = self.index.get(&id) {
            if self.roles[i] != role {
                return Err(GraphError::RoleConflict {
                    node: id,
                    first: self.roles[i],
                    second: role,
                });
            }
            return Ok(());
        }
        self.index.insert(id.clone(), self.nodes.len());
        self.nodes.push(id);
        self.roles.push(role);
        Ok(())
    }

    pub fn add_edge(&mut self, from: &str, to: &str) -> Result<(), GraphError> {
        let (a, b) = (self.idx(from)?, self.idx(to)?);
        self.directed.insert((a, b));
        Ok(())
    }

    pub fn add_confounder(&mut self, a: &str, b: &str) -> Result<(), GraphError> {
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        if i == j {
            return Err(GraphError::SelfConfounder(self.nodes[i].clone()));
        }
        self.bidirected.insert((i.min(j), i.max(j)));
        Ok(())
    }

    fn idx(&self, name: &str) -> Result<usize, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn role(&self, name: &str) -> Option<Role> {
        self.node_index(name).map(|i| self.roles[i])
    }

    pub fn nodes_with_role(&self, role: Role) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .nodes
            .iter()
            .zip(&self.roles)
            .filter(|(_, r)| **r == role)
            .map(|(n, _)| n.clone())
            .collect();
        out.sort();
        out
    }

    pub fn treatments(&self) -> Vec<NodeId> {
        self.nodes_with_role(Role::Treatment)
    }

    /// The unique target node. Call on a validated graph.
    pub fn target(&self) -> Option<&NodeId> {
        self.roles
            .iter()
            .position(|r| *r == Role::Target)
            .map(|i| &self.nodes[i])
    }

    pub fn directed_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.directed
            .iter()
            .map(|&(a, b)| (self.nodes[a].clone(), self.nodes[b].clone()))
            .collect()
    }

    pub fn bidirected_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.bidirected
            .iter()
            .map(|&(a, b)| (self.nodes[a].clone(), self.nodes[b].clone()))
            .collect()
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.node_index(from), self.node_index(to)) {
            (Some(a), Some(b)) => self.directed.contains(&(a, b)),
            _ => false,
        }
    }

    pub fn has_confounder(&self, a: &str, b: &str) -> bool {
        match (self.node_index(a), self.node_index(b)) {
            (Some(i), Some(j)) => self.bidirected.contains(&(i.min(j), i.max(j))),
            _ => false,
        }
    }

    pub fn parents(&self, name: &str) -> Result<NodeSet, GraphError> {
        let i = self.idx(name)?;
        Ok(self
            .directed
            .iter()
            .filter(|(_, b)| *b == i)
            .map(|(a, _)| self.nodes[*a].clone())
            .collect())
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let targets = self.nodes_with_role(Role::Target);
        match targets.len() {
            0 => return Err(GraphError::NoTarget),
            1 => {}
            _ => return Err(GraphError::MultipleTargets(targets)),
        }
        for &(a, b) in &self.bidirected {
            if a == b {
                return Err(GraphError::SelfConfounder(self.nodes[a].clone()));
            }
        }
        self.topological_order().map(|_| ())
    }

    /// Topological order over directed edges. Ties are broken by node name, so
    /// the order does not depend on declaration order.
    pub fn topological_order(&self) -> Result<Vec<usize>, GraphError> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        for &(_, b) in &self.directed {
            indegree[b] += 1;
        }
        let mut ready: BinaryHeap<Reverse<(&NodeId, usize)>> = (0..n)
            .filter(|&i| indegree[i] == 0)
            .map(|i| Reverse((&self.nodes[i], i)))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse((_, i))) = ready.pop() {
            order.push(i);
            for &(a, b) in self.directed.range((i, 0)..=(i, usize::MAX)) {
                debug_assert_eq!(a, i);
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    ready.push(Reverse((&self.nodes[b], b)));
                }
            }
        }
        if order.len() < n {
            let mut stuck: Vec<NodeId> = (0..n)
                .filter(|&i| indegree[i] > 0 && self.on_cycle(i))
                .map(|i| self.nodes[i].clone())
                .collect();
            stuck.sort();
            return Err(GraphError::CycleDetected(stuck));
        }
        Ok(order)
    }

    fn on_cycle(&self, start: usize) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = self.children_idx(start).collect();
        while let Some(v) = queue.pop_front() {
            if v == start {
                return true;
            }
            if !std::mem::replace(&mut seen[v], true) {
                queue.extend(self.children_idx(v));
            }
        }
        false
    }

    fn children_idx(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.directed.range((i, 0)..=(i, usize::MAX)).map(|&(_, b)| b)
    }

    fn ancestor_mask(&self, target: usize) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([target]);
        while let Some(v) = queue.pop_front() {
            for &(a, b) in &self.directed {
                if b == v && !mask[a] {
                    mask[a] = true;
                    queue.push_back(a);
                }
            }
        }
        mask
    }

    /// All nodes with a directed path into `name`, excluding `name`.
    pub fn ancestors(&self, name: &str) -> Result<NodeSet, GraphError> {
        let i = self.idx(name)?;
        let mask = self.ancestor_mask(i);
        Ok(self
            .nodes
            .iter()
            .enumerate()
            .filter(|(j, _)| mask[*j] && *j != i)
            .map(|(_, n)| n.clone())
            .collect())
    }

    /// Copy of the graph with every edge into a node of `cut` removed,
    /// bidirected edges incident to `cut` included.
    pub fn mutilate(&self, cut: &NodeSet) -> Result<CausalGraph, GraphError> {
        let mut idx = BTreeSet::new();
        for node in cut {
            let i = self.idx(node.as_str())?;
            if self.roles[i] != Role::Treatment {
                return Err(GraphError::NonManipulativeCut(node.clone()));
            }
            idx.insert(i);
        }
        let mut out = self.clone();
        out.directed.retain(|(_, b)| !idx.contains(b));
        out.bidirected
            .retain(|(a, b)| !idx.contains(a) && !idx.contains(b));
        Ok(out)
    }

    /// Minimal intervention sets, including `∅`, ordered by size then name.
    pub fn enumerate_mis(&self) -> Vec<NodeSet> {
        let target = match self.roles.iter().position(|r| *r == Role::Target) {
            Some(t) => t,
            None => return vec![NodeSet::new()],
        };
        let treatments = self.treatments();
        assert!(treatments.len() < 32, "too many treatment nodes to enumerate");
        let mut out = Vec::new();
        for mask in 0u32..(1 << treatments.len()) {
            let set: NodeSet = treatments
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, n)| n.clone())
                .collect();
            let cut = self.mutilate(&set).expect("treatments are manipulable");
            let anc = cut.ancestor_mask(target);
            if set.iter().all(|n| anc[self.index[n]]) {
                out.push(set);
            }
        }
        sort_sets(&mut out);
        out
    }

    pub fn exploration_set(
        &self,
        kind: &ExplorationSetKind,
        registry: &PomisRegistry,
    ) -> Result<Vec<NodeSet>, GraphError> {
        match kind {
            ExplorationSetKind::Mis => Ok(self.enumerate_mis()),
            ExplorationSetKind::Bo => Ok(vec![self.treatments().into_iter().collect()]),
            ExplorationSetKind::Pomis => registry
                .lookup(self)
                .map(<[NodeSet]>::to_vec)
                .ok_or(GraphError::PomisUnavailable),
            ExplorationSetKind::Custom(sets) => {
                for set in sets {
                    for node in set {
                        if self.role(node.as_str()) != Some(Role::Treatment) {
                            return Err(GraphError::NotTreatment(node.clone()));
                        }
                    }
                }
                Ok(sets.clone())
            }
        }
    }

    /// Causal intrinsic dimensionality: the number of parents of the target.
    pub fn causal_dimension(&self) -> usize {
        match self.roles.iter().position(|r| *r == Role::Target) {
            Some(t) => self.directed.iter().filter(|(_, b)| *b == t).count(),
            None => 0,
        }
    }

    /// Canonical text form: nodes, edges and confounders sorted by name.
    pub fn to_text(&self) -> String {
        let mut nodes: Vec<(&NodeId, Role)> =
            self.nodes.iter().zip(self.roles.iter().copied()).collect();
        nodes.sort();
        let mut out = String::new();
        for (n, r) in nodes {
            out.push_str(&format!("node {n} {r}\n"));
        }
        let mut edges = self.directed_edges();
        edges.sort();
        for (a, b) in edges {
            out.push_str(&format!("edge {a} -> {b}\n"));
        }
        let mut conf: Vec<(NodeId, NodeId)> = self
            .bidirected_edges()
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        conf.sort();
        for (a, b) in conf {
            out.push_str(&format!("confounder {a} <-> {b}\n"));
        }
        out
    }
}

/// Structural equality: same nodes, roles and edges, whatever the declaration
/// order.
impl PartialEq for CausalGraph {
    fn eq(&self, other: &Self) -> bool {
        self.to_text() == other.to_text()
    }
}

/// Published POMIS lists keyed by graph structure.
#[derive(Debug, Clone, Default)]
pub struct PomisRegistry {
    entries: Vec<(String, Vec<NodeSet>)>,
}

impl PomisRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, graph: &CausalGraph, sets: Vec<NodeSet>) {
        self.entries.push((graph.to_text(), sets));
    }

    pub fn lookup(&self, graph: &CausalGraph) -> Option<&[NodeSet]> {
        let key = graph.to_text();
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, sets)| sets.as_slice())
    }
}

/// Returns true when `line` is a graph declaration (`node`, `edge`,
/// `confounder`).
pub(crate) fn is_graph_line(line: &str) -> bool {
    matches!(
        line.split_whitespace().next(),
        Some("node" | "edge" | "confounder")
    )
}

/// Applies one graph declaration line to `graph`.
pub(crate) fn apply_graph_line(
    graph: &mut CausalGraph,
    line: &str,
    lineno: usize,
) -> Result<(), GraphError> {
    let parse_err = |message: String| GraphError::Parse {
        line: lineno,
        message,
    };
    let tokens: Vec<&str> = line.split_whitespace().collect();
    match tokens.as_slice() {
        ["node", name] => graph.add_node(name, Role::NonManipulative),
        ["node", name, role] => {
            let role = match *role {
                "treatment" => Role::Treatment,
                "context" => Role::NonManipulative,
                "target" => Role::Target,
                other => return Err(parse_err(format!("unknown role {other:?}"))),
            };
            graph.add_node(name, role)
        }
        ["edge", a, "->", b] => graph.add_edge(a, b),
        ["confounder", a, "<->", b] => graph.add_confounder(a, b),
        _ => Err(parse_err(format!("cannot parse {line:?}"))),
    }
    .map_err(|e| match e {
        GraphError::Parse { .. } => e,
        other => parse_err(other.to_string()),
    })
}

/// Parses the line-oriented graph format:
///
/// ```text
/// # comment
/// node X treatment
/// node Y target
/// edge X -> Y
/// confounder X <-> Y
/// ```
///
/// The result is syntactically well formed but not yet validated.
pub fn parse_graph(text: &str) -> Result<CausalGraph, GraphError> {
    let mut graph = CausalGraph::new();
    for (k, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        apply_graph_line(&mut graph, line, k + 1)?;
    }
    Ok(graph)
}

pub(crate) fn strip_comment(raw: &str) -> &str {
    match raw.find('#') {
        Some(p) => raw[..p].trim(),
        None => raw.trim(),
    }
}

/// Parses a set written as `∅`, `{}`, `{B,D}` or `B,D`.
pub fn parse_set(text: &str) -> Result<NodeSet, GraphError> {
    let t = text.trim();
    if t == "∅" || t == "{}" || t.is_empty() {
        return Ok(NodeSet::new());
    }
    let inner = t.trim_start_matches('{').trim_end_matches('}');
    inner
        .split(',')
        .map(|s| NodeId::new(s.trim()))
        .collect()
}

/// Per-node lookup used by the scenario tables.
pub type NodeMap<T> = BTreeMap<NodeId, T>;

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> CausalGraph {
        parse_graph(
            "node X treatment\nnode Z treatment\nnode Y target\nedge X -> Z\nedge Z -> Y\n",
        )
        .unwrap()
    }

    /// Fig. 2 (top) graph without the auxiliary F node.
    fn synthetic_core() -> CausalGraph {
        parse_graph(
            "node A context\nnode B treatment\nnode C context\nnode D treatment\n\
             node E treatment\nnode Y target\n\
             edge B -> C\nedge C -> D\nedge C -> E\nedge A -> E\nedge D -> Y\nedge E -> Y\n\
             confounder B <-> Y\nconfounder A <-> Y\n",
        )
        .unwrap()
    }

    #[test]
    fn validate_accepts_toy_and_single_node() {
        toy().validate().unwrap();
        let single = parse_graph("node Y target").unwrap();
        single.validate().unwrap();
    }

    #[test]
    fn validate_reports_cycle_nodes() {
        let g = parse_graph(
            "node X treatment\nnode Z treatment\nnode Y target\nedge X -> Z\nedge Z -> X\nedge Z -> Y",
        )
        .unwrap();
        assert_eq!(
            g.validate(),
            Err(GraphError::CycleDetected(vec![
                NodeId::new("X").unwrap(),
                NodeId::new("Z").unwrap()
            ]))
        );
    }

    #[test]
    fn validate_target_count() {
        let none = parse_graph("node X treatment").unwrap();
        assert_eq!(none.validate(), Err(GraphError::NoTarget));
        let two = parse_graph("node Y target\nnode W target").unwrap();
        assert!(matches!(two.validate(), Err(GraphError::MultipleTargets(v)) if v.len() == 2));
    }

    #[test]
    fn redeclaring_with_other_role_conflicts() {
        let err = parse_graph("node X treatment\nnode X context").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
        let mut g = CausalGraph::new();
        g.add_node("X", Role::Treatment).unwrap();
        assert!(matches!(
            g.add_node("X", Role::Target),
            Err(GraphError::RoleConflict { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_graph("# header\nnode X treatment\nedge X => Y\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }));
        let err = parse_graph("node X wizard").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
    }

    #[test]
    fn ancestors_examples() {
        let g = toy();
        assert_eq!(g.ancestors("Y").unwrap(), node_set(["X", "Z"]));
        assert!(g.ancestors("X").unwrap().is_empty());
        assert_eq!(
            synthetic_core().ancestors("Y").unwrap(),
            node_set(["A", "B", "C", "D", "E"])
        );
        assert!(matches!(g.ancestors("Q"), Err(GraphError::UnknownNode(_))));
    }

    #[test]
    fn mutilate_examples() {
        let g = toy();
        let cut = g.mutilate(&node_set(["Z"])).unwrap();
        assert!(!cut.has_edge("X", "Z"));
        assert!(cut.has_edge("Z", "Y"));
        assert_eq!(g.mutilate(&NodeSet::new()).unwrap(), g);

        let s = synthetic_core();
        let cut = s.mutilate(&node_set(["D", "E"])).unwrap();
        assert!(!cut.has_edge("C", "D"));
        assert!(!cut.has_edge("C", "E"));
        assert!(!cut.has_edge("A", "E"));
        assert!(cut.has_edge("B", "C"));
        // Neither confounder touches D or E.
        assert!(cut.has_confounder("A", "Y"));
        assert!(cut.has_confounder("B", "Y"));

        let cut = s.mutilate(&node_set(["B"])).unwrap();
        assert!(!cut.has_confounder("B", "Y"));
        assert!(cut.has_confounder("A", "Y"));
    }

    #[test]
    fn mutilate_rejects_context_and_unknown() {
        let s = synthetic_core();
        assert!(matches!(
            s.mutilate(&node_set(["C"])),
            Err(GraphError::NonManipulativeCut(_))
        ));
        assert!(matches!(
            s.mutilate(&node_set(["Q"])),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn mis_examples() {
        assert_eq!(
            toy().enumerate_mis(),
            vec![NodeSet::new(), node_set(["X"]), node_set(["Z"])]
        );
        assert_eq!(
            synthetic_core().enumerate_mis(),
            vec![
                NodeSet::new(),
                node_set(["B"]),
                node_set(["D"]),
                node_set(["E"]),
                node_set(["B", "D"]),
                node_set(["B", "E"]),
                node_set(["D", "E"]),
            ]
        );
    }

    #[test]
    fn exploration_set_kinds() {
        let g = toy();
        let mut reg = PomisRegistry::new();
        assert_eq!(
            g.exploration_set(&ExplorationSetKind::Pomis, &reg),
            Err(GraphError::PomisUnavailable)
        );
        reg.register(&g, vec![node_set(["Z"])]);
        assert_eq!(
            g.exploration_set(&ExplorationSetKind::Pomis, &reg).unwrap(),
            vec![node_set(["Z"])]
        );
        assert_eq!(
            g.exploration_set(&ExplorationSetKind::Bo, &reg).unwrap(),
            vec![node_set(["X", "Z"])]
        );
        let custom = ExplorationSetKind::Custom(vec![node_set(["Z"]), NodeSet::new()]);
        assert_eq!(
            g.exploration_set(&custom, &reg).unwrap(),
            vec![node_set(["Z"]), NodeSet::new()]
        );
        let bad = ExplorationSetKind::Custom(vec![node_set(["Y"])]);
        assert!(matches!(
            g.exploration_set(&bad, &reg),
            Err(GraphError::NotTreatment(_))
        ));
    }

    #[test]
    fn causal_dimension_examples() {
        assert_eq!(toy().causal_dimension(), 1);
        assert_eq!(parse_graph("node Y target").unwrap().causal_dimension(), 0);

        let mut chain = CausalGraph::new();
        chain.add_node("Y", Role::Target).unwrap();
        for prefix in ["X", "Z"] {
            for k in 1..=100 {
                chain.add_node(&format!("{prefix}{k}"), Role::Treatment).unwrap();
                if k > 1 {
                    chain
                        .add_edge(&format!("{prefix}{}", k - 1), &format!("{prefix}{k}"))
                        .unwrap();
                }
            }
            chain.add_edge(&format!("{prefix}100"), "Y").unwrap();
        }
        chain.validate().unwrap();
        assert_eq!(chain.nodes().len(), 201);
        assert_eq!(chain.causal_dimension(), 2);
    }

    #[test]
    fn structural_equality_ignores_declaration_order() {
        let a = toy();
        let b = parse_graph(
            "node Y target\nnode Z treatment\nnode X treatment\nedge Z -> Y\nedge X -> Z\n",
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn set_text_round_trip() {
        assert_eq!(format_set(&NodeSet::new()), "∅");
        assert_eq!(format_set(&node_set(["D", "B"])), "{B,D}");
        assert_eq!(parse_set("{B,D}").unwrap(), node_set(["B", "D"]));
        assert_eq!(parse_set("∅").unwrap(), NodeSet::new());
        assert_eq!(parse_set(" B , D ").unwrap(), node_set(["B", "D"]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// Random DAG over nodes t0..t{k-1} (treatments), c0.. (context) and
        /// Y, with edges only from lower to higher index.
        fn arb_graph() -> impl Strategy<Value = CausalGraph> {
            (2usize..6, 0usize..3).prop_flat_map(|(nt, nc)| {
                let n = nt + nc + 1;
                let pairs = n * (n - 1) / 2;
                (
                    Just((nt, nc)),
                    proptest::collection::vec(any::<bool>(), pairs),
                    proptest::collection::vec(any::<bool>(), pairs),
                )
                    .prop_map(|((nt, nc), edges, conf)| {
                        let mut names: Vec<(String, Role)> = (0..nt)
                            .map(|i| (format!("t{i}"), Role::Treatment))
                            .chain((0..nc).map(|i| (format!("c{i}"), Role::NonManipulative)))
                            .collect();
                        names.push(("Y".into(), Role::Target));
                        let mut g = CausalGraph::new();
                        for (name, role) in &names {
                            g.add_node(name, *role).unwrap();
                        }
                        let mut k = 0;
                        for i in 0..names.len() {
                            for j in (i + 1)..names.len() {
                                if edges[k] {
                                    g.add_edge(&names[i].0, &names[j].0).unwrap();
                                }
                                if conf[k] && k % 3 == 0 {
                                    g.add_confounder(&names[i].0, &names[j].0).unwrap();
                                }
                                k += 1;
                            }
                        }
                        g
                    })
            })
        }

        proptest! {
            #[test]
            fn mis_members_are_ancestors_after_cut(g in arb_graph()) {
                let mis = g.enumerate_mis();
                prop_assert!(mis.contains(&NodeSet::new()));
                for set in &mis {
                    let anc = g.mutilate(set).unwrap().ancestors("Y").unwrap();
                    prop_assert!(set.is_subset(&anc));
                }
                let all: NodeSet = g.treatments().into_iter().collect();
                let all_anc = g.mutilate(&all).unwrap().ancestors("Y").unwrap();
                prop_assert_eq!(mis.contains(&all), all.is_subset(&all_anc));
                let mut sorted = mis.clone();
                sort_sets(&mut sorted);
                prop_assert_eq!(sorted, mis);
            }

            #[test]
            fn mutilate_is_idempotent(g in arb_graph(), mask in 0u32..32) {
                let cut: NodeSet = g
                    .treatments()
                    .into_iter()
                    .enumerate()
                    .filter(|(k, _)| mask & (1 << k) != 0)
                    .map(|(_, n)| n)
                    .collect();
                let once = g.mutilate(&cut).unwrap();
                let twice = once.mutilate(&cut).unwrap();
                prop_assert_eq!(once, twice);
            }
        }
    }
}
