//! The three basic graph transformations and the fixpoint driver that applies
//! them until no precondition holds anywhere.
//!
//! T1 consumes a non-colored node with a single successor, T2 drops a
//! non-colored self-loop, T3 consumes a node whose out-edges all target one
//! node. Under the simple-graph edge model T3 coincides with T1 after edge
//! deduplication; it is recorded separately when the consumed node is a
//! branch node so that branch-elimination statistics stay faithful.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{ColoredDirectedGraph, EdgeAttrs, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformationKind {
    T1,
    T2,
    T3,
}

/// One applied transformation. `anchors` snapshots the consumed node's
/// outgoing anchor set at consumption time; the EFG pipeline resolves SCC
/// landings from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReductionStep {
    /// T1/T3: `node` consumed by `survivor`.
    ConsumeNode {
        kind: TransformationKind,
        node: NodeId,
        survivor: NodeId,
        anchors: BTreeSet<NodeId>,
    },
    /// T2: self-loop removed from `node`.
    RemoveSelfLoop { node: NodeId },
}

impl ReductionStep {
    pub fn kind(&self) -> TransformationKind {
        match self {
            ReductionStep::ConsumeNode { kind, .. } => *kind,
            ReductionStep::RemoveSelfLoop { .. } => TransformationKind::T2,
        }
    }
}

/// Provenance ledger for one reduction run. Replaying the steps against the
/// input graph reproduces the output graph exactly.
#[derive(Debug, Clone, Default)]
pub struct ReductionRecord {
    pub steps: Vec<ReductionStep>,
}

impl ReductionRecord {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn count(&self, kind: TransformationKind) -> usize {
        self.steps.iter().filter(|s| s.kind() == kind).count()
    }

    /// Final anchor map of the surviving edges: edge -> original anchors.
    pub fn anchor_map(
        &self,
        output: &ColoredDirectedGraph,
    ) -> std::collections::BTreeMap<(NodeId, NodeId), BTreeSet<NodeId>> {
        let mut map = std::collections::BTreeMap::new();
        for u in output.node_ids() {
            for (v, attrs) in output.out_edges(u) {
                map.insert((u, v), attrs.anchors(v));
            }
        }
        map
    }

    /// Apply the recorded steps to `input`, returning the reconstructed
    /// output. Fails if a step's precondition does not hold during replay.
    pub fn replay(&self, input: &ColoredDirectedGraph) -> Result<ColoredDirectedGraph> {
        let mut g = input.clone();
        for step in &self.steps {
            match step {
                ReductionStep::RemoveSelfLoop { node } => apply_t2_in_place(&mut g, *node)?,
                ReductionStep::ConsumeNode { node, survivor, .. } => {
                    let m = consume_in_place(&mut g, *node)?;
                    if m != *survivor {
                        return Err(Error::TransformNotApplicable {
                            node: *node,
                            reason: format!("replay survivor {m} differs from recorded {survivor}"),
                        });
                    }
                }
            }
        }
        Ok(g)
    }
}

/// Order in which the fixpoint driver treats candidate nodes. The default is
/// a deterministic reverse post-order from the entry; the shuffled variant
/// exists so confluence can be tested over arbitrary orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOrder {
    ReversePostOrder,
    Shuffled(u64),
}

fn check_consumable(g: &ColoredDirectedGraph, n: NodeId) -> Result<NodeId> {
    if !g.contains(n) {
        return Err(Error::NotFound(n));
    }
    if g.is_colored(n) {
        return Err(Error::TransformNotApplicable {
            node: n,
            reason: "node is colored".into(),
        });
    }
    if g.is_protected(n) {
        return Err(Error::TransformNotApplicable {
            node: n,
            reason: "node is protected".into(),
        });
    }
    if g.has_self_loop(n) {
        return Err(Error::TransformNotApplicable {
            node: n,
            reason: "node has a self-loop; T2 must fire first".into(),
        });
    }
    let suc = g.successors_of_node(n)?;
    if suc.len() != 1 {
        return Err(Error::TransformNotApplicable {
            node: n,
            reason: format!("node has {} successors, expected 1", suc.len()),
        });
    }
    Ok(*suc.iter().next().expect("single successor"))
}

/// Consume `n` by its unique successor: every predecessor p of n gains an
/// edge (p, m) carrying n's outgoing anchors; p's label toward n survives
/// because p stays the source. Returns the survivor.
fn consume_in_place(g: &mut ColoredDirectedGraph, n: NodeId) -> Result<NodeId> {
    let m = check_consumable(g, n)?;
    let out_attrs = g.edge(n, m).expect("edge to survivor").clone();
    let anchors = out_attrs.anchors(m);
    let preds: Vec<NodeId> = g.predecessors(n).iter().copied().collect();
    let mut rerouted = Vec::with_capacity(preds.len());
    for p in preds {
        let incoming = g.remove_edge(p, n).expect("incoming edge");
        rerouted.push((
            p,
            EdgeAttrs::default()
                .with_anchors(anchors.clone())
                .with_sources(incoming.source_anchors(p))
                .with_label(incoming.label),
        ));
    }
    g.remove_node(n);
    for (p, attrs) in rerouted {
        g.insert_edge(p, m, attrs);
    }
    Ok(m)
}

fn apply_t2_in_place(g: &mut ColoredDirectedGraph, n: NodeId) -> Result<()> {
    if !g.contains(n) {
        return Err(Error::NotFound(n));
    }
    if g.is_colored(n) {
        return Err(Error::TransformNotApplicable {
            node: n,
            reason: "node is colored; loop over an event is material".into(),
        });
    }
    if g.is_protected(n) {
        return Err(Error::TransformNotApplicable {
            node: n,
            reason: "node is protected".into(),
        });
    }
    if !g.has_self_loop(n) {
        return Err(Error::TransformNotApplicable {
            node: n,
            reason: "node has no self-loop".into(),
        });
    }
    g.remove_edge(n, n);
    Ok(())
}

/// T1: consumption of a non-branching, non-colored node by its single
/// successor.
pub fn apply_t1(g: &ColoredDirectedGraph, n: NodeId) -> Result<ColoredDirectedGraph> {
    let mut out = g.clone();
    consume_in_place(&mut out, n)?;
    Ok(out)
}

/// T2: removal of a self-loop edge on a non-colored node.
pub fn apply_t2(g: &ColoredDirectedGraph, n: NodeId) -> Result<ColoredDirectedGraph> {
    let mut out = g.clone();
    apply_t2_in_place(&mut out, n)?;
    Ok(out)
}

/// T3: consumption of a node whose out-edges all point at one successor.
/// Identical in effect to T1 under the deduplicated edge model.
pub fn apply_t3(g: &ColoredDirectedGraph, n: NodeId) -> Result<ColoredDirectedGraph> {
    let mut out = g.clone();
    consume_in_place(&mut out, n)?;
    Ok(out)
}

/// Apply T1/T2/T3 until none is applicable. Returns the reduced graph and
/// the step record. Terminates because each step strictly decreases
/// |nodes| + |edges|.
pub fn reduce_to_t_irreducible(
    g: &ColoredDirectedGraph,
) -> (ColoredDirectedGraph, ReductionRecord) {
    reduce_to_t_irreducible_ordered(g, ReduceOrder::ReversePostOrder)
}

pub fn reduce_to_t_irreducible_ordered(
    g: &ColoredDirectedGraph,
    order: ReduceOrder,
) -> (ColoredDirectedGraph, ReductionRecord) {
    let mut out = g.clone();
    let record = reduce_in_place(&mut out, order);
    (out, record)
}

pub(crate) fn reduce_in_place(
    g: &mut ColoredDirectedGraph,
    order: ReduceOrder,
) -> ReductionRecord {
    // Priority index per node id; lower is treated first.
    let ordering = match order {
        ReduceOrder::ReversePostOrder => g.reverse_post_order(),
        ReduceOrder::Shuffled(seed) => {
            let mut nodes: Vec<NodeId> = g.node_ids().collect();
            nodes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            nodes
        }
    };
    let max_id = g
        .node_ids()
        .map(|u| u.index())
        .max()
        .map(|i| i + 1)
        .unwrap_or(0);
    let mut priority = vec![usize::MAX; max_id];
    for (i, u) in ordering.iter().enumerate() {
        priority[u.index()] = i;
    }
    let mut record = ReductionRecord::default();
    let mut worklist: BTreeSet<(usize, NodeId)> =
        ordering.iter().map(|&u| (priority[u.index()], u)).collect();
    while let Some(&(p, n)) = worklist.iter().next() {
        worklist.remove(&(p, n));
        if !g.contains(n) || g.is_colored(n) || g.is_protected(n) {
            continue;
        }
        // Eager T2 before T1 so survivors never receive transient self-edges.
        if g.has_self_loop(n) {
            g.remove_edge(n, n);
            record.steps.push(ReductionStep::RemoveSelfLoop { node: n });
        }
        let suc = g.successors_of_node(n).expect("live node");
        if suc.len() == 1 {
            let m = *suc.iter().next().unwrap();
            let kind = if g.kind(n) == NodeKind::Branch {
                TransformationKind::T3
            } else {
                TransformationKind::T1
            };
            let anchors = g.edge(n, m).expect("edge to survivor").anchors(m);
            let affected: Vec<NodeId> = g.predecessors(n).iter().copied().collect();
            consume_in_place(g, n).expect("preconditions checked");
            record.steps.push(ReductionStep::ConsumeNode {
                kind,
                node: n,
                survivor: m,
                anchors,
            });
            for a in affected {
                if g.contains(a) {
                    worklist.insert((priority[a.index()], a));
                }
            }
            if g.contains(m) {
                worklist.insert((priority[m.index()], m));
            }
        }
    }
    record
}

/// True when no transformation precondition holds anywhere in the graph.
pub fn is_t_irreducible(g: &ColoredDirectedGraph) -> bool {
    g.node_ids().all(|n| {
        g.is_colored(n)
            || g.is_protected(n)
            || (!g.has_self_loop(n) && g.successors_of_node(n).map(|s| s.len() != 1).unwrap_or(true))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use std::collections::BTreeSet;

    fn chain() -> ColoredDirectedGraph {
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let a = b.node("a", NodeKind::Plain);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, a, None);
        b.edge(a, bot, None);
        b.finish().unwrap()
    }

    #[test]
    fn t1_consumes_chain_node() {
        let g = chain();
        let a = g.node_by_name("a").unwrap();
        let g2 = apply_t1(&g, a).unwrap();
        assert_eq!(g2.node_count(), 2);
        assert!(g2.has_edge(g2.entry(), g2.exit()));
    }

    #[test]
    fn t1_rejects_colored_and_protected() {
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let e = b.node("e", NodeKind::Event);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, e, None);
        b.edge(e, bot, None);
        let g = b.finish().unwrap();
        let e = g.node_by_name("e").unwrap();
        assert!(apply_t1(&g, e).is_err());
        assert!(apply_t1(&g, g.entry()).is_err());
    }

    #[test]
    fn t1_preserves_target_color() {
        // a -> n -> m with m colored: n consumed, m still colored.
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let n = b.node("n", NodeKind::Plain);
        let m = b.node("m", NodeKind::Event);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, n, None);
        b.edge(n, m, None);
        b.edge(m, bot, None);
        let g = b.finish().unwrap();
        let n = g.node_by_name("n").unwrap();
        let m = g.node_by_name("m").unwrap();
        let g2 = apply_t1(&g, n).unwrap();
        assert!(g2.is_colored(m));
        assert!(g2.has_edge(g2.entry(), m));
    }

    #[test]
    fn t1_blocked_by_self_loop() {
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let n = b.node("n", NodeKind::Plain);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, n, None);
        b.edge(n, n, None);
        b.edge(n, bot, None);
        let g = b.finish().unwrap();
        let n = g.node_by_name("n").unwrap();
        assert!(apply_t1(&g, n).is_err());
        let g2 = apply_t2(&g, n).unwrap();
        assert!(!g2.has_self_loop(n));
        // After T2 the node is consumable.
        assert!(apply_t1(&g2, n).is_ok());
    }

    #[test]
    fn t2_rejects_colored_self_loop() {
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let e = b.node("e", NodeKind::Event);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, e, None);
        b.edge(e, e, None);
        b.edge(e, bot, None);
        let g = b.finish().unwrap();
        let e = g.node_by_name("e").unwrap();
        assert!(apply_t2(&g, e).is_err());
    }

    #[test]
    fn t3_consumes_branch_with_converged_edges() {
        // branch c with T and F edges both to m (deduplicated at build).
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let c = b.node("c", NodeKind::Branch);
        let m = b.node("m", NodeKind::Plain);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, c, None);
        b.edge(c, m, Some("T"));
        b.edge(c, m, Some("F"));
        b.edge(m, bot, None);
        let g = b.finish().unwrap();
        let c = g.node_by_name("c").unwrap();
        let m = g.node_by_name("m").unwrap();
        let g2 = apply_t3(&g, c).unwrap();
        assert!(!g2.contains(c));
        assert!(g2.has_edge(g2.entry(), m));
    }

    #[test]
    fn t3_rejects_diverging_branch() {
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let c = b.node("c", NodeKind::Branch);
        let m1 = b.node("m1", NodeKind::Plain);
        let m2 = b.node("m2", NodeKind::Plain);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, c, None);
        b.edge(c, m1, Some("T"));
        b.edge(c, m2, Some("F"));
        b.edge(m1, bot, None);
        b.edge(m2, bot, None);
        let g = b.finish().unwrap();
        let c = g.node_by_name("c").unwrap();
        assert!(apply_t3(&g, c).is_err());
    }

    #[test]
    fn reduce_eventless_graph_to_entry_exit() {
        // Any acyclic eventless graph collapses to entry -> exit.
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let c = b.node("c", NodeKind::Branch);
        let a = b.node("a", NodeKind::Plain);
        let x = b.node("x", NodeKind::Plain);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, c, None);
        b.edge(c, a, Some("T"));
        b.edge(c, x, Some("F"));
        b.edge(a, bot, None);
        b.edge(x, bot, None);
        let g = b.finish().unwrap();
        let (r, record) = reduce_to_t_irreducible(&g);
        assert_eq!(r.node_count(), 2);
        assert!(r.has_edge(r.entry(), r.exit()));
        assert!(is_t_irreducible(&r));
        // One of the recorded steps is the branch elimination.
        assert_eq!(record.count(TransformationKind::T3), 1);
    }

    #[test]
    fn reduce_is_idempotent_on_irreducible_graph() {
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let e = b.node("e", NodeKind::Event);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, e, None);
        b.edge(e, bot, None);
        let g = b.finish().unwrap();
        let (r, record) = reduce_to_t_irreducible(&g);
        assert!(record.is_empty());
        assert!(r.structural_eq(&g));
    }

    #[test]
    fn reduce_preserves_colored_set() {
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let x1 = b.node("x1", NodeKind::Plain);
        let e1 = b.node("e1", NodeKind::Event);
        let x2 = b.node("x2", NodeKind::Plain);
        let e2 = b.node("e2", NodeKind::Event);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, x1, None);
        b.edge(x1, e1, None);
        b.edge(e1, x2, None);
        b.edge(x2, e2, None);
        b.edge(e2, bot, None);
        let g = b.finish().unwrap();
        let colored_before = g.colored().clone();
        let (r, _) = reduce_to_t_irreducible(&g);
        assert_eq!(r.colored(), &colored_before);
        assert_eq!(r.node_count(), 4);
    }

    #[test]
    fn record_replays_to_output() {
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let c = b.node("c", NodeKind::Branch);
        let a = b.node("a", NodeKind::Plain);
        let x = b.node("x", NodeKind::Plain);
        let e = b.node("e", NodeKind::Event);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, c, None);
        b.edge(c, a, Some("T"));
        b.edge(c, x, Some("F"));
        b.edge(a, a, None);
        b.edge(a, e, None);
        b.edge(x, e, None);
        b.edge(e, bot, None);
        let g = b.finish().unwrap();
        let (r, record) = reduce_to_t_irreducible(&g);
        let replayed = record.replay(&g).unwrap();
        assert!(replayed.structural_eq(&r));
    }

    #[test]
    fn termination_bound_holds() {
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let mut prev = top;
        for i in 0..40 {
            let n = b.node(&format!("x{i}"), NodeKind::Plain);
            b.edge(prev, n, None);
            prev = n;
        }
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(prev, bot, None);
        let g = b.finish().unwrap();
        let budget = g.node_count() + g.edge_count();
        let (_, record) = reduce_to_t_irreducible(&g);
        assert!(record.steps.len() <= budget);
    }

    #[test]
    fn labels_survive_while_source_is_original_branch() {
        // c -T-> a -> m, c -F-> m: after consuming a, edge (c, m) carries
        // label merged from T and F provenance.
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let c = b.node("c", NodeKind::Branch);
        let a = b.node("a", NodeKind::Plain);
        let m = b.node("m", NodeKind::Event);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, c, None);
        b.edge(c, a, Some("T"));
        b.edge(c, m, Some("F"));
        b.edge(a, m, None);
        b.edge(m, bot, None);
        let g = b.finish().unwrap();
        let a = g.node_by_name("a").unwrap();
        let c = g.node_by_name("c").unwrap();
        let m = g.node_by_name("m").unwrap();
        let g2 = apply_t1(&g, a).unwrap();
        assert_eq!(
            g2.edge(c, m).unwrap().label.as_deref(),
            Some(crate::graph::MERGED_LABEL)
        );
        // Anchor of the rerouted edge is the consumed node's continuation.
        assert_eq!(g2.edge(c, m).unwrap().anchors(m), BTreeSet::from([m]));
    }
}
