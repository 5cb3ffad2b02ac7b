//! Reduction statistics: per-graph before/after counts with reduction
//! percentages, corpus-level bucket distributions, and plain-text table
//! renderers for both.

use serde::Serialize;

use crate::graph::ColoredDirectedGraph;

/// Per-graph reduction counts. The branch count uses structural branching
/// (two or more out-edges) on the input side and surviving Branch-kind nodes
/// on the output side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReductionStats {
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub branch_before: usize,
    pub branch_after: usize,
}

/// 100 * (before - after) / before, one-decimal precision; 0.0 when before
/// is zero.
pub fn reduction_percent(before: usize, after: usize) -> f64 {
    if before == 0 {
        return 0.0;
    }
    let pct = 100.0 * (before as f64 - after as f64) / before as f64;
    (pct * 10.0).round() / 10.0
}

impl ReductionStats {
    pub fn node_percent(&self) -> f64 {
        reduction_percent(self.nodes_before, self.nodes_after)
    }

    pub fn edge_percent(&self) -> f64 {
        reduction_percent(self.edges_before, self.edges_after)
    }

    pub fn branch_percent(&self) -> f64 {
        reduction_percent(self.branch_before, self.branch_after)
    }
}

pub fn compute_stats(
    before: &ColoredDirectedGraph,
    after: &ColoredDirectedGraph,
) -> ReductionStats {
    ReductionStats {
        nodes_before: before.node_count(),
        nodes_after: after.node_count(),
        edges_before: before.edge_count(),
        edges_after: after.edge_count(),
        branch_before: before.structural_branch_count(),
        branch_after: after.branch_kind_count(),
    }
}

const SIZE_BUCKETS: [&str; 5] = ["<=5", "6-10", "11-30", "31-50", ">50"];
const BRANCH_BUCKETS: [&str; 5] = ["=0", "1-5", "6-10", "11-30", ">30"];

fn size_bucket(x: usize) -> usize {
    match x {
        0..=5 => 0,
        6..=10 => 1,
        11..=30 => 2,
        31..=50 => 3,
        _ => 4,
    }
}

fn branch_bucket(x: usize) -> usize {
    match x {
        0 => 0,
        1..=5 => 1,
        6..=10 => 2,
        11..=30 => 3,
        _ => 4,
    }
}

/// Corpus-level histograms over nodes, edges, and branch nodes for the
/// input graphs and their EFGs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusBuckets {
    pub cfg_nodes: [usize; 5],
    pub cfg_edges: [usize; 5],
    pub cfg_branch: [usize; 5],
    pub efg_nodes: [usize; 5],
    pub efg_edges: [usize; 5],
    pub efg_branch: [usize; 5],
}

impl CorpusBuckets {
    pub fn add(&mut self, stats: &ReductionStats) {
        self.cfg_nodes[size_bucket(stats.nodes_before)] += 1;
        self.cfg_edges[size_bucket(stats.edges_before)] += 1;
        self.cfg_branch[branch_bucket(stats.branch_before)] += 1;
        self.efg_nodes[size_bucket(stats.nodes_after)] += 1;
        self.efg_edges[size_bucket(stats.edges_after)] += 1;
        self.efg_branch[branch_bucket(stats.branch_after)] += 1;
    }
}

fn render_bucket_row(out: &mut String, artifact: &str, labels: &[&str; 5], counts: &[usize; 5]) {
    out.push_str(&format!("  {artifact:<13}"));
    for l in labels {
        out.push_str(&format!("{l:>8}"));
    }
    out.push('\n');
    out.push_str(&format!("  {:<13}", ""));
    for c in counts {
        out.push_str(&format!("{c:>8}"));
    }
    out.push('\n');
}

/// Distribution table over a corpus, CFG side then EFG side.
pub fn render_distribution_table(buckets: &CorpusBuckets) -> String {
    let mut out = String::new();
    out.push_str("CFG\n");
    render_bucket_row(&mut out, "Nodes", &SIZE_BUCKETS, &buckets.cfg_nodes);
    render_bucket_row(&mut out, "Edges", &SIZE_BUCKETS, &buckets.cfg_edges);
    render_bucket_row(&mut out, "Branch Nodes", &BRANCH_BUCKETS, &buckets.cfg_branch);
    out.push_str("EFG\n");
    render_bucket_row(&mut out, "Nodes", &SIZE_BUCKETS, &buckets.efg_nodes);
    render_bucket_row(&mut out, "Edges", &SIZE_BUCKETS, &buckets.efg_edges);
    render_bucket_row(&mut out, "Branch Nodes", &BRANCH_BUCKETS, &buckets.efg_branch);
    out
}

/// Per-graph comparison table: nodes, edges, and branch nodes with their
/// reduction percentages.
pub fn render_comparison_table(rows: &[(String, ReductionStats)]) -> String {
    let name_width = rows
        .iter()
        .map(|(n, _)| n.len())
        .max()
        .unwrap_or(5)
        .max("Graph".len());
    let mut out = String::new();
    out.push_str(&format!(
        "{:<name_width$} | {:>6} {:>6} {:>6} | {:>6} {:>6} {:>6} | {:>6} {:>6} {:>6}\n",
        "Graph", "Nodes", "EFG", "P(%)", "Edges", "EFG", "P(%)", "Branch", "EFG", "P(%)"
    ));
    for (name, s) in rows {
        out.push_str(&format!(
            "{:<name_width$} | {:>6} {:>6} {:>6.1} | {:>6} {:>6} {:>6.1} | {:>6} {:>6} {:>6.1}\n",
            name,
            s.nodes_before,
            s.nodes_after,
            s.node_percent(),
            s.edges_before,
            s.edges_after,
            s.edge_percent(),
            s.branch_before,
            s.branch_after,
            s.branch_percent(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentage_formula() {
        assert_eq!(reduction_percent(1101, 8), 99.3);
        assert_eq!(reduction_percent(317, 4), 98.7);
        assert_eq!(reduction_percent(0, 0), 0.0);
        assert_eq!(reduction_percent(7, 7), 0.0);
    }

    #[test]
    fn identical_graphs_reduce_zero_percent() {
        let s = ReductionStats {
            nodes_before: 5,
            nodes_after: 5,
            edges_before: 5,
            edges_after: 5,
            branch_before: 1,
            branch_after: 1,
        };
        assert_eq!(s.node_percent(), 0.0);
        assert_eq!(s.edge_percent(), 0.0);
        assert_eq!(s.branch_percent(), 0.0);
    }

    #[test]
    fn buckets_partition_counts() {
        let mut b = CorpusBuckets::default();
        b.add(&ReductionStats {
            nodes_before: 21,
            nodes_after: 5,
            edges_before: 24,
            edges_after: 5,
            branch_before: 5,
            branch_after: 1,
        });
        assert_eq!(b.cfg_nodes, [0, 0, 1, 0, 0]);
        assert_eq!(b.efg_nodes, [1, 0, 0, 0, 0]);
        assert_eq!(b.cfg_branch, [0, 1, 0, 0, 0]);
        assert_eq!(b.efg_branch, [0, 1, 0, 0, 0]);
    }
}
