//! The JSON report document assembled by the CLI: per-graph reduction stats,
//! equivalence-class traces, verdicts with witnesses, and the optional
//! oracle cross-check.

use serde::Serialize;

use crate::check::{Verdict, VerdictStatus, Witness};
use crate::graph::ColoredDirectedGraph;
use crate::stats::ReductionStats;
use crate::trace::BijectionReport;

#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub nodes_percent: f64,
    pub edges_before: usize,
    pub edges_after: usize,
    pub edges_percent: f64,
    pub branch_before: usize,
    pub branch_after: usize,
    pub branch_percent: f64,
}

impl From<&ReductionStats> for StatsReport {
    fn from(s: &ReductionStats) -> Self {
        StatsReport {
            nodes_before: s.nodes_before,
            nodes_after: s.nodes_after,
            nodes_percent: s.node_percent(),
            edges_before: s.edges_before,
            edges_after: s.edges_after,
            edges_percent: s.edge_percent(),
            branch_before: s.branch_before,
            branch_after: s.branch_after,
            branch_percent: s.branch_percent(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub node: String,
    pub taken: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub trace: String,
    pub conditions: Vec<ConditionReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub object: String,
    pub status: String,
    pub witnesses: Vec<WitnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub ok: bool,
    pub budget: u32,
    pub cfg_class_count: usize,
    pub efg_trace_count: usize,
    pub missing_in_efg: Vec<String>,
    pub missing_in_cfg: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts_match: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub graph_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsReport>,
    pub classes: Vec<String>,
    pub verdicts: Vec<VerdictReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
}

pub fn status_str(status: VerdictStatus) -> &'static str {
    match status {
        VerdictStatus::Safe => "safe",
        VerdictStatus::Violation => "violation",
        VerdictStatus::Escapes => "escapes",
    }
}

pub fn witness_report(g: &ColoredDirectedGraph, w: &Witness) -> WitnessReport {
    WitnessReport {
        trace: w.trace.render(g),
        conditions: w
            .conditions
            .iter()
            .map(|(node, taken)| ConditionReport {
                node: g.name(*node).to_string(),
                taken: taken.clone(),
            })
            .collect(),
    }
}

pub fn verdict_report(
    g: &ColoredDirectedGraph,
    object: &str,
    verdict: &Verdict,
    note: Option<String>,
) -> VerdictReport {
    VerdictReport {
        object: object.to_string(),
        status: status_str(verdict.status).to_string(),
        witnesses: verdict.witnesses.iter().map(|w| witness_report(g, w)).collect(),
        note,
    }
}

pub fn oracle_report(
    cfg: &ColoredDirectedGraph,
    efg: &ColoredDirectedGraph,
    bijection: &BijectionReport,
    budget: u32,
    verdicts_match: Option<bool>,
) -> OracleReport {
    OracleReport {
        ok: bijection.ok && verdicts_match.unwrap_or(true),
        budget,
        cfg_class_count: bijection.cfg_classes.len(),
        efg_trace_count: bijection.efg_traces.len(),
        missing_in_efg: bijection.missing_in_efg.iter().map(|t| t.render(cfg)).collect(),
        missing_in_cfg: bijection.missing_in_cfg.iter().map(|t| t.render(efg)).collect(),
        verdicts_match,
    }
}
