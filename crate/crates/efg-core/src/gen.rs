//! Seeded random CFG generation for property testing, plus the synthetic
//! ladder shapes used for benchmarking.
//!
//! Graphs are built from a series-parallel skeleton (chains and binary
//! diamonds) constructed in topological order, after which back edges are
//! spliced in from plain nodes to earlier nodes and events are colored onto
//! plain nodes. Single entry/exit and full reachability hold by
//! construction, so no rejection sampling is needed.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::prelude::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::check::{EventKind, EventSpec};
use crate::error::{Error, Result};
use crate::graph::{ColoredDirectedGraph, EdgeAttrs, GraphBuilder, NodeId, NodeKind};

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Total node count including entry and exit.
    pub nodes: RangeInclusive<usize>,
    pub events: RangeInclusive<usize>,
    pub branch_probability: f64,
    pub loop_probability: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            nodes: 4..=12,
            events: 0..=3,
            branch_probability: 0.4,
            loop_probability: 0.3,
            seed: 0,
        }
    }
}

impl GenConfig {
    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() || self.events.is_empty() {
            return Err(Error::ConfigError("empty range".into()));
        }
        for p in [self.branch_probability, self.loop_probability] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ConfigError(format!("probability {p} outside [0,1]")));
            }
        }
        if *self.events.start() + 2 > *self.nodes.end() {
            return Err(Error::ConfigError(format!(
                "event count {} cannot fit into {} nodes",
                self.events.start(),
                self.nodes.end()
            )));
        }
        Ok(())
    }
}

struct Skeleton<'a> {
    builder: &'a mut GraphBuilder,
    rng: ChaCha8Rng,
    branch_probability: f64,
    next_id: usize,
}

impl Skeleton<'_> {
    fn fresh(&mut self, kind: NodeKind) -> NodeId {
        let name = format!("n{}", self.next_id);
        self.next_id += 1;
        self.builder.node(&name, kind)
    }

    /// Build a sub-region with one entry and one exit point, consuming at
    /// most `budget` nodes (at least 1). Returns (first, last, used).
    fn region(&mut self, budget: usize, depth: u32) -> (NodeId, NodeId, usize) {
        debug_assert!(budget >= 1);
        let diamond_possible = budget >= 4 && depth < 32;
        if diamond_possible && self.rng.random_bool(self.branch_probability) {
            let head = self.fresh(NodeKind::Branch);
            let arms_budget = budget - 2;
            let left_budget = self.rng.random_range(1..arms_budget);
            let right_budget = arms_budget - left_budget;
            let (lf, ll, lu) = self.region(left_budget, depth + 1);
            let (rf, rl, ru) = self.region(right_budget, depth + 1);
            let merge = self.fresh(NodeKind::Plain);
            self.builder.edge(head, lf, Some("T"));
            self.builder.edge(head, rf, Some("F"));
            self.builder.edge(ll, merge, None);
            self.builder.edge(rl, merge, None);
            (head, merge, 2 + lu + ru)
        } else {
            let len = self.rng.random_range(1..=budget.min(3));
            let first = self.fresh(NodeKind::Plain);
            let mut last = first;
            for _ in 1..len {
                let n = self.fresh(NodeKind::Plain);
                self.builder.edge(last, n, None);
                last = n;
            }
            (first, last, len)
        }
    }
}

/// Generate a well-formed CFG and its event specs, reproducible from the
/// seed.
pub fn generate_cfg(config: &GenConfig) -> Result<(ColoredDirectedGraph, Vec<EventSpec>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let node_target = rng.random_range(config.nodes.clone());
    let interior = node_target.saturating_sub(2);
    // Draw the event count from the part of the range the sampled node
    // count can hold.
    let event_cap = (*config.events.end()).min(interior);
    if *config.events.start() > event_cap {
        return Err(Error::ConfigError(format!(
            "at least {} events cannot fit into {node_target} nodes",
            config.events.start()
        )));
    }
    let event_target = rng.random_range(*config.events.start()..=event_cap);

    let mut builder = GraphBuilder::new();
    let top = builder.node("top", NodeKind::Entry);
    let bot = builder.node("bot", NodeKind::Exit);
    if interior == 0 {
        builder.edge(top, bot, None);
        let g = builder.finish()?;
        return Ok((g, Vec::new()));
    }

    let skeleton_seed: u64 = rng.random();
    {
        let mut skeleton = Skeleton {
            builder: &mut builder,
            rng: ChaCha8Rng::seed_from_u64(skeleton_seed),
            branch_probability: config.branch_probability,
            next_id: 0,
        };
        let mut prev = top;
        let mut remaining = interior;
        while remaining > 0 {
            let (first, last, used) = skeleton.region(remaining, 0);
            skeleton.builder.edge(prev, first, None);
            prev = last;
            remaining -= used;
        }
        skeleton.builder.edge(prev, bot, None);
    }
    // Skeleton nodes in creation (topological) order.
    let order: Vec<NodeId> = (0..interior)
        .map(|i| builder.get(&format!("n{i}")).expect("skeleton node"))
        .collect();
    let mut graph = builder.finish_unchecked()?;

    // Events first: color plain nodes before back edges can promote any of
    // them. The first drawn event is always a First so a non-empty spec is
    // checkable.
    let plains: Vec<NodeId> = graph
        .node_ids()
        .filter(|&u| graph.kind(u) == NodeKind::Plain)
        .collect();
    if event_target > plains.len() {
        return Err(Error::ConfigError(format!(
            "{event_target} events but only {} plain nodes in the skeleton",
            plains.len()
        )));
    }
    let mut chosen = plains;
    while chosen.len() > event_target {
        let idx = rng.random_range(0..chosen.len());
        chosen.remove(idx);
    }
    let mut events: BTreeMap<NodeId, EventKind> = BTreeMap::new();
    for (i, &u) in chosen.iter().enumerate() {
        graph.set_kind(u, NodeKind::Event);
        graph.set_colored(u, true);
        let kind = if i == 0 {
            EventKind::First
        } else {
            *[
                EventKind::First,
                EventKind::First,
                EventKind::Second,
                EventKind::Second,
                EventKind::Flow,
            ]
            .choose(&mut rng)
            .expect("non-empty")
        };
        events.insert(u, kind);
    }

    // Plain nodes still carry exactly one out-edge; remember it so a spliced
    // back edge can relabel the pair.
    let mut forward: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for u in graph.node_ids() {
        if graph.kind(u) == NodeKind::Plain && graph.out_degree(u) == 1 {
            let (v, _) = graph.out_edges(u).next().expect("single edge");
            forward.insert(u, v);
        }
    }

    // Back edges: up to two attempts, each taken with loop_probability.
    // Sources must be plain so the promoted branch keeps labeled binary
    // out-edges; targets are strictly earlier skeleton nodes.
    for _ in 0..2 {
        if order.len() < 2 || !rng.random_bool(config.loop_probability) {
            continue;
        }
        let from_idx = rng.random_range(1..order.len());
        let to_idx = rng.random_range(0..from_idx);
        let from = order[from_idx];
        let to = order[to_idx];
        let Some(&next) = forward.get(&from) else {
            continue;
        };
        if next == to || graph.has_edge(from, to) {
            continue;
        }
        graph.set_kind(from, NodeKind::Branch);
        let existing = graph.remove_edge(from, next).expect("tracked edge");
        graph.insert_edge(from, next, existing.with_label(Some("T".into())));
        graph.insert_edge(from, to, EdgeAttrs::labeled("F"));
        forward.remove(&from);
    }
    graph.validate()?;
    let specs = if events.is_empty() {
        Vec::new()
    } else {
        vec![EventSpec {
            object_id: "p".into(),
            events,
        }]
    };
    Ok((graph, specs))
}

/// Deterministic ladder: a chain of binary diamonds with an event every
/// `event_period` rungs and an event-free cycle every `loop_period` rungs
/// (0 disables either). Total node count is 2 + 4 * rungs.
pub fn generate_ladder(
    rungs: usize,
    event_period: usize,
    loop_period: usize,
) -> ColoredDirectedGraph {
    let mut b = GraphBuilder::new();
    let top = b.node("top", NodeKind::Entry);
    let bot = b.node("bot", NodeKind::Exit);
    let mut prev = top;
    for i in 0..rungs {
        let cyclic = loop_period > 0 && i % loop_period == loop_period - 1;
        let head = b.node(&format!("h{i}"), NodeKind::Branch);
        let left = b.node(&format!("l{i}"), NodeKind::Plain);
        let right_kind = if cyclic { NodeKind::Branch } else { NodeKind::Plain };
        let right = b.node(&format!("r{i}"), right_kind);
        let merge_kind = if event_period > 0 && i % event_period == event_period - 1 {
            NodeKind::Event
        } else {
            NodeKind::Plain
        };
        let merge = b.node(&format!("m{i}"), merge_kind);
        b.edge(prev, head, None);
        b.edge(head, left, Some("T"));
        b.edge(head, right, Some("F"));
        b.edge(left, merge, None);
        if cyclic {
            b.edge(right, merge, Some("T"));
            b.edge(right, head, Some("F"));
        } else {
            b.edge(right, merge, None);
        }
        prev = merge;
    }
    b.edge(prev, bot, None);
    b.finish().expect("ladder is well-formed by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_reproduces_graph() {
        let config = GenConfig {
            seed: 42,
            ..GenConfig::default()
        };
        let (g1, s1) = generate_cfg(&config).unwrap();
        let (g2, s2) = generate_cfg(&config).unwrap();
        assert!(g1.structural_eq(&g2));
        assert_eq!(s1, s2);
    }

    #[test]
    fn minimal_config_yields_chain() {
        let config = GenConfig {
            nodes: 3..=3,
            events: 0..=0,
            branch_probability: 0.0,
            loop_probability: 0.0,
            seed: 7,
        };
        let (g, specs) = generate_cfg(&config).unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(specs.is_empty());
    }

    #[test]
    fn impossible_event_count_is_config_error() {
        let config = GenConfig {
            nodes: 3..=3,
            events: 5..=5,
            ..GenConfig::default()
        };
        assert!(matches!(generate_cfg(&config), Err(Error::ConfigError(_))));
    }

    #[test]
    fn generated_graphs_are_well_formed() {
        for seed in 0..200 {
            let config = GenConfig {
                seed,
                ..GenConfig::default()
            };
            let (g, _) = generate_cfg(&config).unwrap();
            g.validate().unwrap();
            assert!(g.node_count() <= 12, "seed {seed} exceeded node bound");
            for u in g.node_ids() {
                if g.kind(u) == NodeKind::Branch {
                    assert!(g.out_degree(u) >= 2, "branch with one out-edge, seed {seed}");
                    for (_, attrs) in g.out_edges(u) {
                        assert!(attrs.label.is_some(), "unlabeled branch edge, seed {seed}");
                    }
                }
            }
        }
    }

    #[test]
    fn ladder_node_count_is_linear_in_rungs() {
        let g = generate_ladder(25, 4, 8);
        assert_eq!(g.node_count(), 2 + 4 * 25);
        g.validate().unwrap();
    }
}
