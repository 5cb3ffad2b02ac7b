//! The five-step pipeline that compacts a CFG into its event-flow graph:
//! T-irreducible reduction, condensation of the non-colored induced subgraph
//! into strongly-connected components, re-attachment of colored nodes, a
//! second reduction, and expansion of the surviving components.
//!
//! Also hosts the exponential subset oracle used to certify that outputs
//! contain no irrelevant branch nodes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::graph::{ColoredDirectedGraph, EdgeAttrs, NodeId, NodeKind};
use crate::reduce::{
    reduce_in_place, ReduceOrder, ReductionRecord, ReductionStep,
};

/// Identifier of a contracted strongly-connected component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SccId(pub u32);

/// Default universe bound for the subset oracles; subset enumeration is
/// exponential in the number of non-colored nodes.
pub const DEFAULT_ORACLE_UNIVERSE: usize = 16;

#[derive(Debug, Clone)]
pub struct EfgResult {
    /// The event-flow graph: all colored nodes, the members of every
    /// surviving component (the relevant branch nodes), entry and exit.
    pub efg: ColoredDirectedGraph,
    /// The condensed EFG after the second reduction, with contracted
    /// components still in place. Kept for inspection and statistics.
    pub condensed_efg: ColoredDirectedGraph,
    /// Steps of the first reduction, replayable against the input.
    pub reduce_record: ReductionRecord,
    /// Steps of the second reduction, replayable against the colored
    /// condensation graph.
    pub condense_record: ReductionRecord,
    /// Members of each contracted (multi-node) component.
    pub scc_map: BTreeMap<SccId, BTreeSet<NodeId>>,
}

impl EfgResult {
    /// Branch nodes eliminated across both reduction phases.
    pub fn branch_eliminations(&self) -> usize {
        use crate::reduce::TransformationKind::T3;
        self.reduce_record.count(T3) + self.condense_record.count(T3)
    }
}

/// Tarjan's strongly-connected components of the subgraph induced by
/// `universe`, iterative to stay stack-safe on large graphs. Components are
/// returned sorted by their smallest member.
pub fn tarjan_scc(g: &ColoredDirectedGraph, universe: &BTreeSet<NodeId>) -> Vec<BTreeSet<NodeId>> {
    let cap = universe.iter().map(|u| u.index() + 1).max().unwrap_or(0);
    let mut index: Vec<Option<u32>> = vec![None; cap];
    let mut low: Vec<u32> = vec![0; cap];
    let mut on_stack: Vec<bool> = vec![false; cap];
    let mut in_universe: Vec<bool> = vec![false; cap];
    for &u in universe {
        in_universe[u.index()] = true;
    }
    let mut counter: u32 = 0;
    let mut stack: Vec<NodeId> = Vec::new();
    let mut components: Vec<BTreeSet<NodeId>> = Vec::new();

    for &root in universe {
        if index[root.index()].is_some() {
            continue;
        }
        // Explicit call stack: (node, successors restricted to the universe,
        // cursor into them).
        let mut call: Vec<(NodeId, Vec<NodeId>, usize)> = Vec::new();
        index[root.index()] = Some(counter);
        low[root.index()] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root.index()] = true;
        let succs: Vec<NodeId> = g
            .out_edges(root)
            .map(|(v, _)| v)
            .filter(|v| v.index() < cap && in_universe[v.index()])
            .collect();
        call.push((root, succs, 0));
        while let Some((v, succs, i)) = call.last_mut() {
            if *i < succs.len() {
                let w = succs[*i];
                *i += 1;
                if index[w.index()].is_none() {
                    index[w.index()] = Some(counter);
                    low[w.index()] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w.index()] = true;
                    let ws: Vec<NodeId> = g
                        .out_edges(w)
                        .map(|(x, _)| x)
                        .filter(|x| x.index() < cap && in_universe[x.index()])
                        .collect();
                    call.push((w, ws, 0));
                } else if on_stack[w.index()] {
                    let v_idx = v.index();
                    low[v_idx] = low[v_idx].min(index[w.index()].unwrap());
                }
            } else {
                let v = *v;
                if low[v.index()] == index[v.index()].unwrap() {
                    let mut comp = BTreeSet::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w.index()] = false;
                        comp.insert(w);
                        if w == v {
                            break;
                        }
                    }
                    components.push(comp);
                }
                call.pop();
                if let Some((parent, _, _)) = call.last() {
                    let p = parent.index();
                    low[p] = low[p].min(low[v.index()]);
                }
            }
        }
    }
    components.sort_by_key(|c| *c.iter().next().expect("non-empty component"));
    components
}

pub fn build_efg(cfg: &ColoredDirectedGraph) -> Result<EfgResult> {
    build_efg_ordered(cfg, ReduceOrder::ReversePostOrder)
}

/// Pipeline with an explicit reduction order; the output is invariant under
/// the order, which the confluence suite exercises.
pub fn build_efg_ordered(cfg: &ColoredDirectedGraph, order: ReduceOrder) -> Result<EfgResult> {
    cfg.validate()?;

    // Step 1: T-irreducible reduction.
    let mut tirr = cfg.clone();
    let reduce_record = reduce_in_place(&mut tirr, order);

    // Step 2: condense the subgraph induced by the non-colored,
    // non-protected nodes. Every such survivor has >= 2 distinct successors,
    // so they are all branch nodes.
    let universe: BTreeSet<NodeId> = tirr
        .node_ids()
        .filter(|&u| !tirr.is_colored(u) && !tirr.is_protected(u))
        .collect();
    let components = tarjan_scc(&tirr, &universe);

    let mut scc_map: BTreeMap<SccId, BTreeSet<NodeId>> = BTreeMap::new();
    // Representative in the condensation for every universe node, and the
    // component id behind every contracted node.
    let mut repr: HashMap<NodeId, NodeId> = HashMap::new();
    let mut contracted: HashMap<NodeId, SccId> = HashMap::new();
    let mut ccg = tirr.clone();
    for comp in &components {
        if comp.len() == 1 {
            let u = *comp.iter().next().unwrap();
            repr.insert(u, u);
        } else {
            let scc_id = SccId(scc_map.len() as u32);
            let node = ccg.fresh_node(format!("scc_{}", scc_id.0), NodeKind::ContractedScc);
            for &u in comp {
                repr.insert(u, node);
            }
            contracted.insert(node, scc_id);
            scc_map.insert(scc_id, comp.clone());
        }
    }

    // Step 3: colored condensation graph. Re-route every edge incident to a
    // contracted member; anchors keep the original endpoint on each side.
    let contracted_members: BTreeSet<NodeId> = scc_map.values().flatten().copied().collect();
    let mut remapped: Vec<(NodeId, NodeId, EdgeAttrs)> = Vec::new();
    for u in tirr.node_ids() {
        for (v, attrs) in tirr.out_edges(u) {
            let ru = repr.get(&u).copied().unwrap_or(u);
            let rv = repr.get(&v).copied().unwrap_or(v);
            if ru == u && rv == v {
                continue; // untouched edge stays as in the clone
            }
            remapped.push((
                ru,
                rv,
                EdgeAttrs::default()
                    .with_label(attrs.label.clone())
                    .with_anchors(BTreeSet::from([v]))
                    .with_sources(BTreeSet::from([u])),
            ));
        }
    }
    for &u in &contracted_members {
        ccg.remove_node(u);
    }
    for (u, v, attrs) in remapped {
        ccg.insert_edge(u, v, attrs);
    }
    debug_assert!(ccg.validate().is_ok());

    // Step 4: reduce the colored condensation to the condensed EFG.
    // Contraction self-loops fall to T2; contracted nodes with a unique
    // successor are consumed like any other non-colored node.
    let mut cefg = ccg;
    let condense_record = reduce_in_place(&mut cefg, order);

    // Step 5: expand each surviving contracted component and re-attach
    // external edges at their recorded anchors.
    let mut kept: BTreeSet<NodeId> = tirr.colored().clone();
    kept.insert(tirr.entry());
    kept.insert(tirr.exit());
    for u in cefg.node_ids() {
        if cefg.is_colored(u) || cefg.is_protected(u) {
            continue;
        }
        if cefg.kind(u) == NodeKind::ContractedScc {
            let scc_id = contracted[&u];
            kept.extend(scc_map[&scc_id].iter().copied());
        } else {
            kept.insert(u);
        }
    }

    // Where does each consumed condensation node drain to? Resolved in
    // reverse consumption order, so later landings are available earlier.
    let mut landing: HashMap<NodeId, BTreeSet<NodeId>> = HashMap::new();
    for step in condense_record.steps.iter().rev() {
        if let ReductionStep::ConsumeNode { node, anchors, .. } = step {
            let mut dest = BTreeSet::new();
            for &a in anchors {
                resolve_destination(a, &kept, &repr, &landing, &mut dest);
            }
            landing.insert(*node, dest);
        }
    }

    let mut efg = tirr.clone();
    let mut rerouted: Vec<(NodeId, NodeId, EdgeAttrs)> = Vec::new();
    for u in tirr.node_ids() {
        if !kept.contains(&u) {
            continue;
        }
        for (w, attrs) in tirr.out_edges(u) {
            if kept.contains(&w) {
                continue;
            }
            let mut dest = BTreeSet::new();
            resolve_destination(w, &kept, &repr, &landing, &mut dest);
            for d in dest {
                rerouted.push((u, d, EdgeAttrs::default().with_label(attrs.label.clone())));
            }
        }
    }
    let dropped: Vec<NodeId> = efg.node_ids().filter(|u| !kept.contains(u)).collect();
    for u in dropped {
        efg.remove_node(u);
    }
    for (u, v, attrs) in rerouted {
        efg.insert_edge(u, v, attrs);
    }
    debug_assert!(efg.validate().is_ok());

    Ok(EfgResult {
        efg,
        condensed_efg: cefg,
        reduce_record,
        condense_record,
        scc_map,
    })
}

/// Map a pre-condensation target to the kept nodes every path through it
/// must first reach.
fn resolve_destination(
    a: NodeId,
    kept: &BTreeSet<NodeId>,
    repr: &HashMap<NodeId, NodeId>,
    landing: &HashMap<NodeId, BTreeSet<NodeId>>,
    dest: &mut BTreeSet<NodeId>,
) {
    if kept.contains(&a) {
        dest.insert(a);
        return;
    }
    let rep = repr.get(&a).copied().unwrap_or(a);
    match landing.get(&rep) {
        Some(set) => dest.extend(set.iter().copied()),
        None => unreachable!("non-kept node {a} has no recorded landing"),
    }
}

/// Brute-force check for Definition-7 irrelevant branch nodes: a branch node
/// c is irrelevant when some subgraph S of non-colored, non-protected nodes
/// contains c and all targets of its branch edges, and |suc(S)| = 1.
///
/// Exponential in the universe size; refuses universes larger than
/// `max_universe`.
pub fn find_irrelevant_branch_nodes_bruteforce(
    g: &ColoredDirectedGraph,
    max_universe: usize,
) -> Result<BTreeSet<NodeId>> {
    let universe: Vec<NodeId> = g
        .node_ids()
        .filter(|&u| !g.is_colored(u) && !g.is_protected(u))
        .collect();
    if universe.len() > max_universe {
        return Err(Error::OracleTooLarge(format!(
            "{} non-colored nodes exceed the subset bound {max_universe}",
            universe.len()
        )));
    }
    let universe_set: BTreeSet<NodeId> = universe.iter().copied().collect();
    let mut result = BTreeSet::new();
    for &c in &universe {
        if g.out_degree(c) < 2 {
            continue; // not a branch node
        }
        let targets: BTreeSet<NodeId> = g.out_edges(c).map(|(v, _)| v).collect();
        if !targets.iter().all(|t| universe_set.contains(t)) {
            continue; // a branch edge leaves the candidate universe
        }
        let mut base = targets;
        base.insert(c);
        let rest: Vec<NodeId> = universe
            .iter()
            .copied()
            .filter(|u| !base.contains(u))
            .collect();
        if subset_with_unique_successor(g, &base, &rest) {
            result.insert(c);
        }
    }
    Ok(result)
}

fn subset_with_unique_successor(
    g: &ColoredDirectedGraph,
    base: &BTreeSet<NodeId>,
    rest: &[NodeId],
) -> bool {
    let n = rest.len();
    debug_assert!(n < usize::BITS as usize);
    for mask in 0u64..(1u64 << n) {
        let mut s = base.clone();
        for (i, &u) in rest.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.insert(u);
            }
        }
        let mut outside = BTreeSet::new();
        for &u in &s {
            for (v, _) in g.out_edges(u) {
                if !s.contains(&v) {
                    outside.insert(v);
                }
            }
        }
        if outside.len() == 1 {
            return true;
        }
    }
    false
}

/// Minimum |suc(S)| over all non-empty subsets S of the non-colored,
/// non-protected nodes, with one witness subset. `None` when the universe is
/// empty. Supports the condensed-EFG two-successor certificate.
pub fn noncolored_subset_min_successors(
    g: &ColoredDirectedGraph,
    max_universe: usize,
) -> Result<Option<(usize, BTreeSet<NodeId>)>> {
    let universe: Vec<NodeId> = g
        .node_ids()
        .filter(|&u| !g.is_colored(u) && !g.is_protected(u))
        .collect();
    if universe.len() > max_universe {
        return Err(Error::OracleTooLarge(format!(
            "{} non-colored nodes exceed the subset bound {max_universe}",
            universe.len()
        )));
    }
    if universe.is_empty() {
        return Ok(None);
    }
    let n = universe.len();
    let mut best: Option<(usize, BTreeSet<NodeId>)> = None;
    for mask in 1u64..(1u64 << n) {
        let s: BTreeSet<NodeId> = universe
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &u)| u)
            .collect();
        let mut outside = BTreeSet::new();
        for &u in &s {
            for (v, _) in g.out_edges(u) {
                if !s.contains(&v) {
                    outside.insert(v);
                }
            }
        }
        if best.as_ref().map(|(k, _)| outside.len() < *k).unwrap_or(true) {
            best = Some((outside.len(), s));
        }
    }
    Ok(best)
}
