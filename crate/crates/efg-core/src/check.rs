//! Verification of 2-event properties on event-flow graphs: for an object p,
//! every first event (lock) must be followed by a second event (unlock)
//! before exit; data-flow events escape the object and poison verification.
//!
//! The checker runs a reachability fixpoint over (node, state) pairs, keeping
//! the incoming states of each node as a set rather than joining them, and
//! reconstructs witness traces by bounded path enumeration so they stay
//! comparable with the brute-force CFG oracle.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{ColoredDirectedGraph, NodeId};
use crate::trace::{enumerate_bounded_paths, project_to_event_trace, EventTrace, TraceRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    First,
    Second,
    Flow,
}

/// The declared event set for one object: which nodes are its events and
/// what they do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSpec {
    pub object_id: String,
    pub events: BTreeMap<NodeId, EventKind>,
}

impl EventSpec {
    pub fn has_first(&self) -> bool {
        self.events.values().any(|k| *k == EventKind::First)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum HeldState {
    NoneHeld,
    Held,
    Escaped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VerdictStatus {
    Safe,
    Violation,
    Escapes,
}

/// A violating or escaping trace together with the branch conditions taken
/// along it (every interior item that carries a taken label).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub trace: EventTrace,
    pub conditions: Vec<(NodeId, String)>,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub witnesses: Vec<Witness>,
}

fn step_state(state: HeldState, kind: Option<EventKind>) -> HeldState {
    match (state, kind) {
        (HeldState::Escaped, _) => HeldState::Escaped,
        (_, Some(EventKind::First)) => HeldState::Held,
        (HeldState::Held, Some(EventKind::Second)) => HeldState::NoneHeld,
        (HeldState::Held, Some(EventKind::Flow)) => HeldState::Escaped,
        (s, _) => s,
    }
}

fn trace_exit_state(path_nodes: &[NodeId], spec: &EventSpec) -> HeldState {
    let mut state = HeldState::NoneHeld;
    for node in path_nodes {
        state = step_state(state, spec.events.get(node).copied());
    }
    state
}

fn validate_spec(g: &ColoredDirectedGraph, spec: &EventSpec) -> Result<()> {
    if !spec.has_first() {
        return Err(Error::SpecMismatch(format!(
            "object '{}' declares no first event; nothing to verify",
            spec.object_id
        )));
    }
    for node in spec.events.keys() {
        if !g.contains(*node) {
            return Err(Error::SpecMismatch(format!(
                "object '{}' references node {node} absent from the graph",
                spec.object_id
            )));
        }
    }
    Ok(())
}

/// Exit-reaching states of the unbounded (node, state) reachability fixpoint.
fn reachable_exit_states(efg: &ColoredDirectedGraph, spec: &EventSpec) -> BTreeSet<HeldState> {
    let mut seen: BTreeSet<(NodeId, HeldState)> = BTreeSet::new();
    let entry_state = step_state(HeldState::NoneHeld, spec.events.get(&efg.entry()).copied());
    let mut stack = vec![(efg.entry(), entry_state)];
    seen.insert((efg.entry(), entry_state));
    while let Some((u, state)) = stack.pop() {
        for (v, _) in efg.out_edges(u) {
            let next = step_state(state, spec.events.get(&v).copied());
            if seen.insert((v, next)) {
                stack.push((v, next));
            }
        }
    }
    seen.iter()
        .filter(|(u, _)| *u == efg.exit())
        .map(|(_, s)| *s)
        .collect()
}

fn verdict_from_paths(
    g: &ColoredDirectedGraph,
    spec: &EventSpec,
    relevant: &BTreeSet<NodeId>,
    k: u32,
    max_paths: usize,
) -> Result<Verdict> {
    let paths = enumerate_bounded_paths(g, k, max_paths)?;
    let mut held = false;
    let mut escaped = false;
    let mut witnesses: BTreeMap<Vec<NodeId>, Witness> = BTreeMap::new();
    for path in &paths {
        let exit_state = trace_exit_state(&path.nodes, spec);
        if exit_state == HeldState::NoneHeld {
            continue;
        }
        held |= exit_state == HeldState::Held;
        escaped |= exit_state == HeldState::Escaped;
        let trace = project_to_event_trace(g, path, relevant);
        witnesses.entry(trace.key()).or_insert_with(|| {
            let conditions = trace
                .items
                .iter()
                .filter(|i| i.role != TraceRole::Entry && i.role != TraceRole::Exit)
                .filter_map(|i| i.taken_label.clone().map(|l| (i.node, l)))
                .collect();
            Witness { trace, conditions }
        });
    }
    let status = if held {
        VerdictStatus::Violation
    } else if escaped {
        VerdictStatus::Escapes
    } else {
        VerdictStatus::Safe
    };
    Ok(Verdict {
        status,
        witnesses: witnesses.into_values().collect(),
    })
}

/// Check a 2-event property on an EFG with the default witness budget of one
/// re-traversal per edge.
pub fn check_two_event(efg: &ColoredDirectedGraph, spec: &EventSpec) -> Result<Verdict> {
    check_two_event_with_budget(efg, spec, 1, crate::trace::DEFAULT_PATH_CEILING)
}

/// Check with an explicit edge budget for witness enumeration, comparable
/// with `check_on_cfg_oracle` at the same budget.
pub fn check_two_event_with_budget(
    efg: &ColoredDirectedGraph,
    spec: &EventSpec,
    k: u32,
    max_paths: usize,
) -> Result<Verdict> {
    validate_spec(efg, spec)?;
    let relevant: BTreeSet<NodeId> = efg.node_ids().collect();
    let verdict = verdict_from_paths(efg, spec, &relevant, k, max_paths)?;
    // The bounded verdict should agree with the unbounded state fixpoint on
    // these graphs; a disagreement would mean the budget hid a violating
    // loop shape.
    debug_assert!({
        let states = reachable_exit_states(efg, spec);
        let fix_status = if states.contains(&HeldState::Held) {
            VerdictStatus::Violation
        } else if states.contains(&HeldState::Escaped) {
            VerdictStatus::Escapes
        } else {
            VerdictStatus::Safe
        };
        fix_status == verdict.status
    });
    Ok(verdict)
}

/// Independent oracle: the same verdict computed from brute-force bounded
/// CFG path enumeration. Witness traces are projected onto the EFG's node
/// set so the two sides are comparable.
pub fn check_on_cfg_oracle(
    cfg: &ColoredDirectedGraph,
    spec: &EventSpec,
    k: u32,
    max_paths: usize,
) -> Result<Verdict> {
    validate_spec(cfg, spec)?;
    let efg = crate::efg::build_efg(cfg)?.efg;
    let relevant: BTreeSet<NodeId> = efg.node_ids().collect();
    verdict_from_paths(cfg, spec, &relevant, k, max_paths)
}
