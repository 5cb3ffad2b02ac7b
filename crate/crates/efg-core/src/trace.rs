//! Bounded path enumeration, projection onto event traces, equivalence
//! classes, and the path/class correspondence check between a CFG and its
//! event-flow graph.
//!
//! Loops are handled by a re-visit budget: a walk may visit each node at
//! most `k + 1` times, i.e. every loop is taken at most `k` extra times.
//! The budget is counted on nodes rather than edges because projection
//! preserves the visit counts of surviving nodes: enumerating both the CFG
//! and its EFG under the same `k` then yields the same bounded trace family,
//! and any mismatch is a genuine trace-preservation failure. (An edge-usage
//! budget is not preserved by projection: compacting a shared merge chain
//! can turn one reused edge into two distinct edges.)

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::efg::build_efg;
use crate::error::{Error, Result};
use crate::graph::{ColoredDirectedGraph, NodeId};

/// Default ceiling on enumerated paths before the oracle refuses.
pub const DEFAULT_PATH_CEILING: usize = 1_000_000;

/// One entry-to-exit walk under a re-visit budget: no node appears more
/// than `back_edge_budget + 1` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedPath {
    pub nodes: Vec<NodeId>,
    pub back_edge_budget: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceRole {
    Entry,
    Exit,
    Event,
    RelevantBranch,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceItem {
    pub node: NodeId,
    pub role: TraceRole,
    /// Label of the out-edge the path actually took at this node, when the
    /// edge carries one.
    pub taken_label: Option<String>,
}

/// A projected path: entry, the relevant items in order, exit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventTrace {
    pub items: Vec<TraceItem>,
}

impl EventTrace {
    /// Trace identity per the node-subsequence semantics: two traces are the
    /// same event trace when they visit the same relevant nodes in the same
    /// order. Taken labels are diagnostic payload, not identity.
    pub fn key(&self) -> Vec<NodeId> {
        self.items.iter().map(|i| i.node).collect()
    }

    /// Rendering: `TOP e1 c1[F] e2 BOT`.
    pub fn render(&self, g: &ColoredDirectedGraph) -> String {
        let mut parts = Vec::with_capacity(self.items.len());
        for item in &self.items {
            match item.role {
                TraceRole::Entry => parts.push("TOP".to_string()),
                TraceRole::Exit => parts.push("BOT".to_string()),
                _ => {
                    let name = g.name(item.node);
                    match &item.taken_label {
                        Some(l) => parts.push(format!("{name}[{l}]")),
                        None => parts.push(name.to_string()),
                    }
                }
            }
        }
        parts.join(" ")
    }
}

/// An equivalence class of bounded CFG paths: the representative trace and
/// how many enumerated paths project to it.
#[derive(Debug, Clone)]
pub struct EquivalenceClass {
    pub trace: EventTrace,
    pub member_count: usize,
}

/// All entry-to-exit walks visiting each node at most `k + 1` times, in
/// lexicographic successor order. Iterative so path length is not limited by
/// the call stack.
pub fn enumerate_bounded_paths(
    g: &ColoredDirectedGraph,
    k: u32,
    max_paths: usize,
) -> Result<Vec<BoundedPath>> {
    assert!(k >= 1, "budget must be positive");
    let mut paths = Vec::new();
    let mut visits: HashMap<NodeId, u32> = HashMap::new();
    // Stack frame: (node, successor list, cursor). The path is the stack's
    // node column.
    let mut stack: Vec<(NodeId, Vec<NodeId>, usize)> = Vec::new();
    let succs = |u: NodeId| -> Vec<NodeId> { g.out_edges(u).map(|(v, _)| v).collect() };
    visits.insert(g.entry(), 1);
    stack.push((g.entry(), succs(g.entry()), 0));
    while !stack.is_empty() {
        let top = stack.len() - 1;
        let u = stack[top].0;
        if u == g.exit() {
            if paths.len() >= max_paths {
                return Err(Error::OracleTooLarge(format!(
                    "more than {max_paths} bounded paths"
                )));
            }
            paths.push(BoundedPath {
                nodes: stack.iter().map(|(n, _, _)| *n).collect(),
                back_edge_budget: k,
            });
            stack.pop();
            *visits.get_mut(&u).expect("visited node") -= 1;
            continue;
        }
        let mut advanced = false;
        while stack[top].2 < stack[top].1.len() {
            let v = stack[top].1[stack[top].2];
            stack[top].2 += 1;
            let count = visits.entry(v).or_insert(0);
            if *count < k + 1 {
                *count += 1;
                let vs = succs(v);
                stack.push((v, vs, 0));
                advanced = true;
                break;
            }
        }
        if !advanced {
            stack.pop();
            *visits.get_mut(&u).expect("visited node") -= 1;
        }
    }
    Ok(paths)
}

/// Project a path onto entry, exit, and the `relevant` nodes. Colored nodes
/// project as events, everything else relevant as a branch; each interior
/// item carries the label of the out-edge the path took.
pub fn project_to_event_trace(
    g: &ColoredDirectedGraph,
    path: &BoundedPath,
    relevant: &BTreeSet<NodeId>,
) -> EventTrace {
    let mut items = Vec::new();
    for (i, &u) in path.nodes.iter().enumerate() {
        let role = if u == g.entry() {
            TraceRole::Entry
        } else if u == g.exit() {
            TraceRole::Exit
        } else if relevant.contains(&u) {
            if g.is_colored(u) {
                TraceRole::Event
            } else {
                TraceRole::RelevantBranch
            }
        } else {
            continue;
        };
        let taken_label = match role {
            TraceRole::Exit => None,
            _ => path
                .nodes
                .get(i + 1)
                .and_then(|&next| g.edge(u, next))
                .and_then(|attrs| attrs.label.clone()),
        };
        items.push(TraceItem {
            node: u,
            role,
            taken_label,
        });
    }
    EventTrace { items }
}

/// Group the bounded paths of `g` by event trace. The relevant branch set is
/// taken from the node set of the event-flow graph.
pub fn equivalence_classes(
    g: &ColoredDirectedGraph,
    k: u32,
    max_paths: usize,
) -> Result<Vec<EquivalenceClass>> {
    let efg = build_efg(g)?.efg;
    let relevant: BTreeSet<NodeId> = efg.node_ids().collect();
    let paths = enumerate_bounded_paths(g, k, max_paths)?;
    let mut classes: BTreeMap<Vec<NodeId>, EquivalenceClass> = BTreeMap::new();
    for path in &paths {
        let trace = project_to_event_trace(g, path, &relevant);
        classes
            .entry(trace.key())
            .and_modify(|c| c.member_count += 1)
            .or_insert(EquivalenceClass {
                trace,
                member_count: 1,
            });
    }
    Ok(classes.into_values().collect())
}

/// Traces of the bounded paths of an EFG itself: every node is relevant.
pub fn efg_path_traces(
    efg: &ColoredDirectedGraph,
    k: u32,
    max_paths: usize,
) -> Result<Vec<EventTrace>> {
    let relevant: BTreeSet<NodeId> = efg.node_ids().collect();
    let paths = enumerate_bounded_paths(efg, k, max_paths)?;
    let mut traces: BTreeMap<Vec<NodeId>, EventTrace> = BTreeMap::new();
    for path in &paths {
        let trace = project_to_event_trace(efg, path, &relevant);
        traces.entry(trace.key()).or_insert(trace);
    }
    Ok(traces.into_values().collect())
}

/// Outcome of the class/path correspondence check at budget `k`.
#[derive(Debug, Clone)]
pub struct BijectionReport {
    pub ok: bool,
    pub cfg_classes: Vec<EquivalenceClass>,
    pub efg_traces: Vec<EventTrace>,
    /// Trace keys the CFG produced that the EFG did not, and vice versa.
    pub missing_in_efg: Vec<EventTrace>,
    pub missing_in_cfg: Vec<EventTrace>,
}

/// Check that the distinct event traces of the bounded CFG paths coincide
/// with the traces of the bounded EFG paths under the same budget.
pub fn verify_bijection(
    cfg: &ColoredDirectedGraph,
    k: u32,
    max_paths: usize,
) -> Result<BijectionReport> {
    let efg = build_efg(cfg)?.efg;
    let cfg_classes = equivalence_classes(cfg, k, max_paths)?;
    let efg_traces = efg_path_traces(&efg, k, max_paths)?;
    let cfg_keys: BTreeSet<Vec<NodeId>> = cfg_classes.iter().map(|c| c.trace.key()).collect();
    let efg_keys: BTreeSet<Vec<NodeId>> = efg_traces.iter().map(|t| t.key()).collect();
    let missing_in_efg = cfg_classes
        .iter()
        .filter(|c| !efg_keys.contains(&c.trace.key()))
        .map(|c| c.trace.clone())
        .collect::<Vec<_>>();
    let missing_in_cfg = efg_traces
        .iter()
        .filter(|t| !cfg_keys.contains(&t.key()))
        .cloned()
        .collect::<Vec<_>>();
    Ok(BijectionReport {
        ok: missing_in_efg.is_empty() && missing_in_cfg.is_empty(),
        cfg_classes,
        efg_traces,
        missing_in_efg,
        missing_in_cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, NodeKind};

    #[test]
    fn chain_has_one_path() {
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let a = b.node("a", NodeKind::Plain);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, a, None);
        b.edge(a, bot, None);
        let g = b.finish().unwrap();
        let paths = enumerate_bounded_paths(&g, 1, 1000).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes.len(), 3);
    }

    #[test]
    fn diamond_has_two_paths() {
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
        let paths = enumerate_bounded_paths(&g, 1, 1000).unwrap();
        assert_eq!(paths.len(), 2);
    }

    #[test]
    fn ceiling_is_enforced() {
        // Wide fan of branches to overflow a tiny ceiling.
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let bot = b.node("bot", NodeKind::Exit);
        let mut prev = top;
        for i in 0..6 {
            let c = b.node(&format!("c{i}"), NodeKind::Branch);
            let l = b.node(&format!("l{i}"), NodeKind::Plain);
            let r = b.node(&format!("r{i}"), NodeKind::Plain);
            let m = b.node(&format!("m{i}"), NodeKind::Plain);
            b.edge(prev, c, None);
            b.edge(c, l, Some("T"));
            b.edge(c, r, Some("F"));
            b.edge(l, m, None);
            b.edge(r, m, None);
            prev = m;
        }
        b.edge(prev, bot, None);
        let g = b.finish().unwrap();
        assert!(matches!(
            enumerate_bounded_paths(&g, 1, 10),
            Err(Error::OracleTooLarge(_))
        ));
    }

    #[test]
    fn projection_keeps_relevant_subsequence() {
        // top x1 e1 c1 x2 e2 bot projects to TOP e1 c1 e2 BOT.
        let mut b = GraphBuilder::new();
        let top = b.node("top", NodeKind::Entry);
        let x1 = b.node("x1", NodeKind::Plain);
        let e1 = b.node("e1", NodeKind::Event);
        let c1 = b.node("c1", NodeKind::Branch);
        let x2 = b.node("x2", NodeKind::Plain);
        let e2 = b.node("e2", NodeKind::Event);
        let bot = b.node("bot", NodeKind::Exit);
        b.edge(top, x1, None);
        b.edge(x1, e1, None);
        b.edge(e1, c1, None);
        b.edge(c1, x2, Some("F"));
        b.edge(c1, bot, Some("T"));
        b.edge(x2, e2, None);
        b.edge(e2, bot, None);
        let g = b.finish().unwrap();
        let path = BoundedPath {
            nodes: vec![top, x1, e1, c1, x2, e2, bot],
            back_edge_budget: 1,
        };
        let relevant = BTreeSet::from([e1, c1, e2]);
        let trace = project_to_event_trace(&g, &path, &relevant);
        assert_eq!(trace.render(&g), "TOP e1 c1[F] e2 BOT");
        // A path with nothing relevant projects to TOP BOT.
        let empty = project_to_event_trace(&g, &path, &BTreeSet::new());
        assert_eq!(empty.render(&g), "TOP BOT");
    }

    #[test]
    fn event_free_graph_has_one_class() {
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
        let classes = equivalence_classes(&g, 1, 1000).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].member_count, 2);
        assert_eq!(classes[0].trace.render(&g), "TOP BOT");
    }
}
