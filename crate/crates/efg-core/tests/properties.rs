//! Property suite over seeded random CFGs: structural laws of the graph
//! queries, reduction invariants, pipeline confluence, and the trace- and
//! verdict-preservation guarantees.

use std::collections::BTreeSet;

use proptest::prelude::*;

use efg_core::check::{check_on_cfg_oracle, check_two_event_with_budget};
use efg_core::efg::{build_efg, build_efg_ordered};
use efg_core::gen::{generate_cfg, GenConfig};
use efg_core::graph::{ColoredDirectedGraph, NodeId, Subgraph};
use efg_core::reduce::{is_t_irreducible, reduce_to_t_irreducible, reduce_to_t_irreducible_ordered, ReduceOrder};
use efg_core::trace::{enumerate_bounded_paths, equivalence_classes, project_to_event_trace};

const MAX_PATHS: usize = 200_000;

fn sample(seed: u64) -> (ColoredDirectedGraph, Vec<efg_core::check::EventSpec>) {
    let config = GenConfig {
        seed,
        ..GenConfig::default()
    };
    generate_cfg(&config).expect("default config is generable")
}

/// Node-name edge set with labels, for identity checks across renumbering.
fn name_edges(g: &ColoredDirectedGraph) -> BTreeSet<(String, String, Option<String>)> {
    let mut out = BTreeSet::new();
    for u in g.node_ids() {
        for (v, attrs) in g.out_edges(u) {
            out.insert((g.name(u).to_string(), g.name(v).to_string(), attrs.label.clone()));
        }
    }
    out
}

fn name_nodes(g: &ColoredDirectedGraph) -> BTreeSet<(String, bool)> {
    g.node_ids()
        .map(|u| (g.name(u).to_string(), g.is_colored(u)))
        .collect()
}

/// Distinct bounded trace keys of `g`, projected onto `relevant`.
fn trace_keys(
    g: &ColoredDirectedGraph,
    relevant: &BTreeSet<NodeId>,
    k: u32,
) -> BTreeSet<Vec<String>> {
    let paths = enumerate_bounded_paths(g, k, MAX_PATHS).expect("within ceiling");
    paths
        .iter()
        .map(|p| {
            project_to_event_trace(g, p, relevant)
                .items
                .iter()
                .map(|i| g.name(i.node).to_string())
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn singleton_subgraph_successors_match_node_successors(seed in any::<u64>()) {
        let (g, _) = sample(seed);
        for u in g.node_ids() {
            let s = Subgraph::from_iter([u]);
            prop_assert_eq!(
                g.successors_of_subgraph(&s).unwrap(),
                g.successors_of_node(u).unwrap()
            );
        }
    }

    #[test]
    fn fresh_graph_edges_anchor_at_endpoints(seed in any::<u64>()) {
        let (g, _) = sample(seed);
        for u in g.node_ids() {
            for (v, attrs) in g.out_edges(u) {
                prop_assert_eq!(attrs.anchors(v), BTreeSet::from([v]));
                prop_assert_eq!(attrs.source_anchors(u), BTreeSet::from([u]));
            }
        }
    }

    #[test]
    fn reduction_preserves_colored_and_protected(seed in any::<u64>()) {
        let (g, _) = sample(seed);
        let budget = g.node_count() + g.edge_count();
        let (r, record) = reduce_to_t_irreducible(&g);
        prop_assert_eq!(r.colored(), g.colored());
        prop_assert!(r.contains(g.entry()) && r.contains(g.exit()));
        prop_assert!(is_t_irreducible(&r));
        prop_assert!(record.steps.len() <= budget);
        // Replay reproduces the output exactly.
        let replayed = record.replay(&g).unwrap();
        prop_assert!(replayed.structural_eq(&r));
        // Reducing again changes nothing.
        let (r2, record2) = reduce_to_t_irreducible(&r);
        prop_assert!(record2.is_empty());
        prop_assert!(r2.structural_eq(&r));
    }

    #[test]
    fn reduction_is_confluent(seed in any::<u64>(), orders in prop::collection::vec(any::<u64>(), 4)) {
        let (g, _) = sample(seed);
        let (baseline, _) = reduce_to_t_irreducible(&g);
        for order_seed in orders {
            let (r, _) = reduce_to_t_irreducible_ordered(&g, ReduceOrder::Shuffled(order_seed));
            prop_assert!(r.structural_eq(&baseline), "order {} diverged", order_seed);
        }
    }

    #[test]
    fn efg_contains_exactly_colored_scc_members_and_terminals(seed in any::<u64>()) {
        let (g, _) = sample(seed);
        let result = build_efg(&g).unwrap();
        let efg = &result.efg;
        prop_assert!(efg.validate().is_ok());
        let mut expected: BTreeSet<NodeId> = g.colored().clone();
        expected.insert(g.entry());
        expected.insert(g.exit());
        for members in result.scc_map.values() {
            for &m in members {
                if efg.contains(m) {
                    expected.insert(m);
                }
            }
        }
        // Every colored node survives, entry/exit survive, all other
        // survivors are branch-kind relevant nodes.
        for &c in g.colored() {
            prop_assert!(efg.contains(c));
        }
        for u in efg.node_ids() {
            if !efg.is_colored(u) && !efg.is_protected(u) {
                prop_assert_eq!(efg.kind(u), efg_core::graph::NodeKind::Branch);
                prop_assert!(efg.out_degree(u) >= 2);
            }
        }
    }

    #[test]
    fn efg_is_idempotent(seed in any::<u64>()) {
        let (g, _) = sample(seed);
        let once = build_efg(&g).unwrap().efg;
        let twice = build_efg(&once).unwrap().efg;
        prop_assert!(once.structural_eq(&twice));
    }

    #[test]
    fn efg_is_confluent_across_orders(seed in any::<u64>(), order_seed in any::<u64>()) {
        let (g, _) = sample(seed);
        let a = build_efg(&g).unwrap().efg;
        let b = build_efg_ordered(&g, ReduceOrder::Shuffled(order_seed)).unwrap().efg;
        prop_assert!(a.structural_eq(&b));
    }

    #[test]
    fn efg_is_invariant_under_relabeling(seed in any::<u64>(), shuffle in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let (g, _) = sample(seed);
        // Rebuild the same named graph with a different id assignment.
        let mut nodes: Vec<NodeId> = g.node_ids().collect();
        nodes.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle));
        let mut b = efg_core::graph::GraphBuilder::new();
        for &u in &nodes {
            b.node(g.name(u), g.kind(u));
        }
        for u in g.node_ids() {
            for (v, attrs) in g.out_edges(u) {
                let from = b.get(g.name(u)).unwrap();
                let to = b.get(g.name(v)).unwrap();
                b.edge(from, to, attrs.label.as_deref());
            }
        }
        let permuted = b.finish().unwrap();
        let efg_a = build_efg(&g).unwrap().efg;
        let efg_b = build_efg(&permuted).unwrap().efg;
        prop_assert_eq!(name_nodes(&efg_a), name_nodes(&efg_b));
        prop_assert_eq!(name_edges(&efg_a), name_edges(&efg_b));
    }

    #[test]
    fn trace_set_is_invariant_under_each_reduction_step(seed in any::<u64>()) {
        let (g, _) = sample(seed);
        let efg = build_efg(&g).unwrap().efg;
        let relevant: BTreeSet<NodeId> = efg.node_ids().collect();
        let (_, record) = reduce_to_t_irreducible(&g);
        let baseline = trace_keys(&g, &relevant, 1);
        let mut prefix = efg_core::reduce::ReductionRecord::default();
        for step in &record.steps {
            prefix.steps.push(step.clone());
            let intermediate = prefix.replay(&g).unwrap();
            let keys = trace_keys(&intermediate, &relevant, 1);
            prop_assert_eq!(&keys, &baseline, "diverged after {} steps", prefix.steps.len());
        }
    }

    #[test]
    fn class_count_never_exceeds_path_count(seed in any::<u64>()) {
        let (g, _) = sample(seed);
        let paths = enumerate_bounded_paths(&g, 1, MAX_PATHS).unwrap();
        let classes = equivalence_classes(&g, 1, MAX_PATHS).unwrap();
        prop_assert!(classes.len() <= paths.len());
        let members: usize = classes.iter().map(|c| c.member_count).sum();
        prop_assert_eq!(members, paths.len());
    }

    #[test]
    fn projection_is_monotone_in_relevant_set(seed in any::<u64>()) {
        let (g, _) = sample(seed);
        let efg = build_efg(&g).unwrap().efg;
        let relevant: BTreeSet<NodeId> = efg.node_ids().collect();
        let full = trace_keys(&g, &relevant, 1);
        for &drop in &relevant {
            if drop == g.entry() || drop == g.exit() {
                continue;
            }
            let mut smaller = relevant.clone();
            smaller.remove(&drop);
            let reduced = trace_keys(&g, &smaller, 1);
            prop_assert!(reduced.len() <= full.len());
        }
    }

    #[test]
    fn verdicts_agree_between_efg_and_cfg_oracle(seed in any::<u64>()) {
        let (g, specs) = sample(seed);
        let Some(spec) = specs.first() else { return Ok(()); };
        if !spec.has_first() {
            return Ok(());
        }
        let efg = build_efg(&g).unwrap().efg;
        for k in [1u32, 2] {
            let fast = check_two_event_with_budget(&efg, spec, k, MAX_PATHS).unwrap();
            let slow = check_on_cfg_oracle(&g, spec, k, MAX_PATHS).unwrap();
            prop_assert_eq!(fast.status, slow.status, "status diverged at k={}", k);
            let a: BTreeSet<_> = fast.witnesses.iter().map(|w| w.trace.key()).collect();
            let b: BTreeSet<_> = slow.witnesses.iter().map(|w| w.trace.key()).collect();
            prop_assert_eq!(a, b, "witness sets diverged at k={}", k);
        }
    }
}
