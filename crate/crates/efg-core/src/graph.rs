//! Colored directed graph model: node/edge identity, structural queries, and
//! the well-formedness checks every algorithm relies on.
//!
//! A graph is a simple digraph (at most one edge per ordered pair, self-loops
//! permitted) with a unique entry and exit, a set of colored (event) nodes,
//! and per-edge provenance anchors that record where a rerouted edge attaches
//! in the pre-reduction graph.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Stable node identifier, unique within one graph. A node that survives a
/// transformation keeps its id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Entry,
    Exit,
    Event,
    Branch,
    Plain,
    /// Transient kind used between steps 2 and 5 of the EFG pipeline; never
    /// present in ingested input or in a final EFG.
    ContractedScc,
}

/// Branch label merged from edges with conflicting labels. Free-form labels
/// ("T"/"F", switch arms) survive only while an edge's source is the original
/// branch node; ambiguous provenance collapses to this sentinel.
pub const MERGED_LABEL: &str = "merged";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeAttrs {
    pub label: Option<String>,
    /// Target-side provenance. `None` means the canonical `{target}`.
    pub(crate) anchors: Option<BTreeSet<NodeId>>,
    /// Source-side provenance. `None` means the canonical `{source}`.
    pub(crate) sources: Option<BTreeSet<NodeId>>,
}

impl EdgeAttrs {
    pub fn labeled(label: impl Into<String>) -> Self {
        EdgeAttrs {
            label: Some(label.into()),
            anchors: None,
            sources: None,
        }
    }

    pub fn anchors(&self, target: NodeId) -> BTreeSet<NodeId> {
        match &self.anchors {
            Some(set) => set.clone(),
            None => BTreeSet::from([target]),
        }
    }

    pub fn source_anchors(&self, source: NodeId) -> BTreeSet<NodeId> {
        match &self.sources {
            Some(set) => set.clone(),
            None => BTreeSet::from([source]),
        }
    }

    pub(crate) fn with_anchors(mut self, anchors: BTreeSet<NodeId>) -> Self {
        self.anchors = Some(anchors);
        self
    }

    pub(crate) fn with_sources(mut self, sources: BTreeSet<NodeId>) -> Self {
        self.sources = Some(sources);
        self
    }

    pub(crate) fn with_label(mut self, label: Option<String>) -> Self {
        self.label = label;
        self
    }

    /// Collapse anchor sets equal to the canonical singleton back to `None`
    /// so that structurally equal edges compare equal regardless of the
    /// transformation history that produced them.
    fn canonicalize(mut self, source: NodeId, target: NodeId) -> Self {
        if let Some(set) = &self.anchors {
            if set.len() == 1 && set.contains(&target) {
                self.anchors = None;
            }
        }
        if let Some(set) = &self.sources {
            if set.len() == 1 && set.contains(&source) {
                self.sources = None;
            }
        }
        self
    }

    /// Label for an edge produced by merging `self` with `other`.
    pub(crate) fn merge_label(a: &Option<String>, b: &Option<String>) -> Option<String> {
        match (a, b) {
            (Some(x), Some(y)) if x == y => Some(x.clone()),
            (Some(_), Some(_)) => Some(MERGED_LABEL.to_string()),
            (Some(x), None) | (None, Some(x)) => Some(x.clone()),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NodeData {
    name: String,
    kind: NodeKind,
}

/// A non-empty set of nodes of one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    members: BTreeSet<NodeId>,
}

impl Subgraph {
    pub fn new(members: BTreeSet<NodeId>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::SpecMismatch("subgraph must be non-empty".into()));
        }
        Ok(Subgraph { members })
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }
}

impl FromIterator<NodeId> for Subgraph {
    fn from_iter<T: IntoIterator<Item = NodeId>>(iter: T) -> Self {
        let members: BTreeSet<NodeId> = iter.into_iter().collect();
        assert!(!members.is_empty(), "subgraph must be non-empty");
        Subgraph { members }
    }
}

/// The working graph G = (V, E, C, entry, exit).
///
/// Values are immutable from the caller's view once constructed;
/// transformations operate on private working copies and return new graphs.
#[derive(Debug, Clone)]
pub struct ColoredDirectedGraph {
    nodes: Vec<Option<NodeData>>,
    out: Vec<BTreeMap<NodeId, EdgeAttrs>>,
    preds: Vec<BTreeSet<NodeId>>,
    colored: BTreeSet<NodeId>,
    entry: NodeId,
    exit: NodeId,
    live: usize,
}

impl ColoredDirectedGraph {
    pub fn entry(&self) -> NodeId {
        self.entry
    }

    pub fn exit(&self) -> NodeId {
        self.exit
    }

    /// Entry and exit may never be removed or contracted.
    pub fn is_protected(&self, u: NodeId) -> bool {
        u == self.entry || u == self.exit
    }

    pub fn is_colored(&self, u: NodeId) -> bool {
        self.colored.contains(&u)
    }

    pub fn colored(&self) -> &BTreeSet<NodeId> {
        &self.colored
    }

    pub fn contains(&self, u: NodeId) -> bool {
        u.index() < self.nodes.len() && self.nodes[u.index()].is_some()
    }

    pub fn node_count(&self) -> usize {
        self.live
    }

    pub fn edge_count(&self) -> usize {
        self.node_ids().map(|u| self.out[u.index()].len()).sum()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_some())
            .map(|(i, _)| NodeId(i as u32))
    }

    pub fn kind(&self, u: NodeId) -> NodeKind {
        self.nodes[u.index()].as_ref().expect("live node").kind
    }

    pub fn name(&self, u: NodeId) -> &str {
        &self.nodes[u.index()].as_ref().expect("live node").name
    }

    /// Linear scan; intended for tests and CLI resolution, not hot paths.
    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.node_ids().find(|&u| self.name(u) == name)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.contains(u) && self.out[u.index()].contains_key(&v)
    }

    pub fn edge(&self, u: NodeId, v: NodeId) -> Option<&EdgeAttrs> {
        self.out.get(u.index()).and_then(|m| m.get(&v))
    }

    /// Out-edges of `u` in target order, with attributes.
    pub fn out_edges(&self, u: NodeId) -> impl Iterator<Item = (NodeId, &EdgeAttrs)> + '_ {
        self.out[u.index()].iter().map(|(v, a)| (*v, a))
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out[u.index()].len()
    }

    pub fn predecessors(&self, u: NodeId) -> &BTreeSet<NodeId> {
        &self.preds[u.index()]
    }

    pub fn has_self_loop(&self, u: NodeId) -> bool {
        self.out[u.index()].contains_key(&u)
    }

    /// suc(u): the set of nodes v != u with an edge (u, v). A self-loop
    /// contributes nothing.
    pub fn successors_of_node(&self, u: NodeId) -> Result<BTreeSet<NodeId>> {
        if !self.contains(u) {
            return Err(Error::NotFound(u));
        }
        Ok(self.out[u.index()]
            .keys()
            .copied()
            .filter(|&v| v != u)
            .collect())
    }

    /// suc(S): the set of nodes v outside S with an edge from some member.
    pub fn successors_of_subgraph(&self, s: &Subgraph) -> Result<BTreeSet<NodeId>> {
        let mut result = BTreeSet::new();
        for &u in s.members() {
            if !self.contains(u) {
                return Err(Error::NotFound(u));
            }
            for (&v, _) in self.out[u.index()].iter() {
                if !s.members().contains(&v) {
                    result.insert(v);
                }
            }
        }
        Ok(result)
    }

    /// boundary(S): the members of S with at least one successor outside S.
    pub fn boundary(&self, s: &Subgraph) -> Result<BTreeSet<NodeId>> {
        let outside = self.successors_of_subgraph(s)?;
        let mut result = BTreeSet::new();
        for &u in s.members() {
            let suc = self.successors_of_node(u)?;
            if suc.intersection(&outside).next().is_some() {
                result.insert(u);
            }
        }
        Ok(result)
    }

    // ---- crate-internal mutation, used by the transformation passes ----

    pub(crate) fn fresh_node(&mut self, name: String, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Some(NodeData { name, kind }));
        self.out.push(BTreeMap::new());
        self.preds.push(BTreeSet::new());
        self.live += 1;
        id
    }

    pub(crate) fn set_kind(&mut self, u: NodeId, kind: NodeKind) {
        self.nodes[u.index()].as_mut().expect("live node").kind = kind;
    }

    pub(crate) fn set_colored(&mut self, u: NodeId, colored: bool) {
        if colored {
            self.colored.insert(u);
        } else {
            self.colored.remove(&u);
        }
    }

    /// Insert an edge, merging attributes when the (u, v) pair already exists:
    /// labels merge per the label rule, anchor sets union.
    pub(crate) fn insert_edge(&mut self, u: NodeId, v: NodeId, attrs: EdgeAttrs) {
        debug_assert!(self.contains(u) && self.contains(v));
        let attrs = match self.out[u.index()].remove(&v) {
            Some(existing) => {
                let label = EdgeAttrs::merge_label(&existing.label, &attrs.label);
                let mut anchors = existing.anchors(v);
                anchors.extend(attrs.anchors(v));
                let mut sources = existing.source_anchors(u);
                sources.extend(attrs.source_anchors(u));
                EdgeAttrs {
                    label,
                    anchors: Some(anchors),
                    sources: Some(sources),
                }
            }
            None => attrs,
        };
        self.out[u.index()].insert(v, attrs.canonicalize(u, v));
        self.preds[v.index()].insert(u);
    }

    pub(crate) fn remove_edge(&mut self, u: NodeId, v: NodeId) -> Option<EdgeAttrs> {
        let attrs = self.out[u.index()].remove(&v)?;
        self.preds[v.index()].remove(&u);
        Some(attrs)
    }

    /// Remove a node together with all incident edges.
    pub(crate) fn remove_node(&mut self, u: NodeId) {
        debug_assert!(self.contains(u));
        let succs: Vec<NodeId> = self.out[u.index()].keys().copied().collect();
        for v in succs {
            self.preds[v.index()].remove(&u);
        }
        self.out[u.index()].clear();
        let preds: Vec<NodeId> = self.preds[u.index()].iter().copied().collect();
        for p in preds {
            self.out[p.index()].remove(&u);
        }
        self.preds[u.index()].clear();
        self.nodes[u.index()] = None;
        self.colored.remove(&u);
        self.live -= 1;
    }

    /// Nodes forward-reachable from `start` along out-edges.
    pub fn reachable_from(&self, start: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for (&v, _) in self.out[u.index()].iter() {
                if seen.insert(v) {
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Nodes backward-reachable to `target` along in-edges.
    pub fn coreachable_to(&self, target: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::from([target]);
        let mut stack = vec![target];
        while let Some(u) = stack.pop() {
            for &p in self.preds[u.index()].iter() {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// Reverse post-order from the entry node, iterative to stay stack-safe on
    /// large graphs. Nodes unreachable from entry (none, in a well-formed
    /// graph) are appended in id order.
    pub fn reverse_post_order(&self) -> Vec<NodeId> {
        let n = self.nodes.len();
        let mut visited = vec![false; n];
        let mut post = Vec::with_capacity(self.live);
        // (node, out-edge cursor)
        let mut stack: Vec<(NodeId, Vec<NodeId>, usize)> = Vec::new();
        visited[self.entry.index()] = true;
        let succs: Vec<NodeId> = self.out[self.entry.index()].keys().copied().collect();
        stack.push((self.entry, succs, 0));
        while let Some((u, succs, i)) = stack.last_mut() {
            if *i < succs.len() {
                let v = succs[*i];
                *i += 1;
                if !visited[v.index()] {
                    visited[v.index()] = true;
                    let vs: Vec<NodeId> = self.out[v.index()].keys().copied().collect();
                    stack.push((v, vs, 0));
                }
            } else {
                post.push(*u);
                stack.pop();
            }
        }
        post.reverse();
        for u in self.node_ids() {
            if !visited[u.index()] {
                post.push(u);
            }
        }
        post
    }

    /// Structural well-formedness of an ingested or generated graph: entry
    /// in-degree 0, exit out-degree 0, every node on some entry-to-exit walk,
    /// colored nodes live and unprotected, anchors non-empty.
    pub fn validate(&self) -> Result<()> {
        use crate::error::{Diagnostic, DiagnosticCode};
        let diag = |code, message: String| Error::Ingest(Diagnostic {
            code,
            message,
            position: None,
        });
        if !self.preds[self.entry.index()].is_empty() {
            return Err(diag(
                DiagnosticCode::EntryHasPredecessors,
                format!("entry node '{}' has incoming edges", self.name(self.entry)),
            ));
        }
        if !self.out[self.exit.index()].is_empty() {
            return Err(diag(
                DiagnosticCode::ExitHasSuccessors,
                format!("exit node '{}' has outgoing edges", self.name(self.exit)),
            ));
        }
        let fwd = self.reachable_from(self.entry);
        let bwd = self.coreachable_to(self.exit);
        for u in self.node_ids() {
            if !fwd.contains(&u) || !bwd.contains(&u) {
                return Err(diag(
                    DiagnosticCode::UnreachableNode,
                    format!("node '{}' is on no entry-to-exit walk", self.name(u)),
                ));
            }
        }
        for &c in &self.colored {
            if !self.contains(c) || self.is_protected(c) {
                return Err(diag(
                    DiagnosticCode::UnknownAttributeValue,
                    format!("colored set contains invalid node {c}"),
                ));
            }
        }
        Ok(())
    }

    /// Structural equality: same live nodes (name, kind), edges (with labels
    /// and anchors), colored set, entry and exit. Dead id slots are ignored.
    pub fn structural_eq(&self, other: &Self) -> bool {
        if self.entry != other.entry
            || self.exit != other.exit
            || self.colored != other.colored
            || self.live != other.live
        {
            return false;
        }
        for u in self.node_ids() {
            if !other.contains(u) {
                return false;
            }
            if self.nodes[u.index()] != other.nodes[u.index()] {
                return false;
            }
            if self.out[u.index()] != other.out[u.index()] {
                return false;
            }
        }
        true
    }

    /// Count of structural branch points: nodes with two or more out-edges
    /// (self-loops included in the count of edges).
    pub fn structural_branch_count(&self) -> usize {
        self.node_ids().filter(|&u| self.out_degree(u) >= 2).count()
    }

    /// Count of surviving Branch-kind nodes.
    pub fn branch_kind_count(&self) -> usize {
        self.node_ids()
            .filter(|&u| self.kind(u) == NodeKind::Branch)
            .count()
    }
}

/// Incremental constructor used by ingest, the generator, and tests.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    names: BTreeMap<String, NodeId>,
    nodes: Vec<(String, NodeKind)>,
    edges: Vec<(NodeId, NodeId, Option<String>)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a node; re-adding an existing name returns the original id.
    pub fn node(&mut self, name: &str, kind: NodeKind) -> NodeId {
        if let Some(&id) = self.names.get(name) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.names.insert(name.to_string(), id);
        self.nodes.push((name.to_string(), kind));
        id
    }

    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.names.get(name).copied()
    }

    pub fn set_kind(&mut self, id: NodeId, kind: NodeKind) {
        self.nodes[id.index()].1 = kind;
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.index()].1
    }

    pub fn edge(&mut self, from: NodeId, to: NodeId, label: Option<&str>) {
        self.edges.push((from, to, label.map(str::to_string)));
    }

    /// Build without validating; callers that ingest untrusted input run
    /// `validate` themselves so they can attach positions to diagnostics.
    pub fn finish_unchecked(self) -> Result<ColoredDirectedGraph> {
        let mut entry = None;
        let mut exit = None;
        for (i, (_, kind)) in self.nodes.iter().enumerate() {
            match kind {
                NodeKind::Entry => entry = Some(NodeId(i as u32)),
                NodeKind::Exit => exit = Some(NodeId(i as u32)),
                _ => {}
            }
        }
        let entry = entry.ok_or_else(|| {
            Error::Ingest(crate::error::Diagnostic {
                code: crate::error::DiagnosticCode::MissingEntry,
                message: "no entry node".into(),
                position: None,
            })
        })?;
        let exit = exit.ok_or_else(|| {
            Error::Ingest(crate::error::Diagnostic {
                code: crate::error::DiagnosticCode::MissingExit,
                message: "no exit node".into(),
                position: None,
            })
        })?;
        let n = self.nodes.len();
        let mut g = ColoredDirectedGraph {
            nodes: Vec::with_capacity(n),
            out: vec![BTreeMap::new(); n],
            preds: vec![BTreeSet::new(); n],
            colored: BTreeSet::new(),
            entry,
            exit,
            live: n,
        };
        for (name, kind) in self.nodes {
            if kind == NodeKind::Event {
                g.colored.insert(NodeId(g.nodes.len() as u32));
            }
            g.nodes.push(Some(NodeData { name, kind }));
        }
        for (u, v, label) in self.edges {
            g.insert_edge(
                u,
                v,
                EdgeAttrs {
                    label,
                    anchors: None,
                    sources: None,
                },
            );
        }
        Ok(g)
    }

    pub fn finish(self) -> Result<ColoredDirectedGraph> {
        let g = self.finish_unchecked()?;
        g.validate()?;
        Ok(g)
    }
}
