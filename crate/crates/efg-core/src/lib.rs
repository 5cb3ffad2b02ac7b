//! Compaction of control-flow graphs into event-flow graphs.
//!
//! Given a CFG and a declared set of event nodes, the library reduces the
//! graph to the minimal derivative whose paths are in one-to-one
//! correspondence with the equivalence classes of CFG paths sharing an event
//! trace. On top of that it enumerates the classes, checks 2-event properties
//! (lock must be followed by unlock, and similar), and ships brute-force
//! oracles that validate the compaction on small instances.

pub mod check;
pub mod dot;
pub mod efg;
pub mod error;
pub mod gen;
pub mod graph;
pub mod reduce;
pub mod report;
pub mod stats;
pub mod trace;

pub use check::{check_on_cfg_oracle, check_two_event, EventKind, EventSpec, Verdict, VerdictStatus};
pub use efg::{build_efg, find_irrelevant_branch_nodes_bruteforce, tarjan_scc, EfgResult, SccId};
pub use error::{Diagnostic, DiagnosticCode, Error, Result};
pub use graph::{ColoredDirectedGraph, EdgeAttrs, GraphBuilder, NodeId, NodeKind, Subgraph};
pub use reduce::{
    apply_t1, apply_t2, apply_t3, reduce_to_t_irreducible, ReduceOrder, ReductionRecord,
    ReductionStep, TransformationKind,
};
pub use trace::{
    enumerate_bounded_paths, equivalence_classes, project_to_event_trace, verify_bijection,
    BijectionReport, BoundedPath, EquivalenceClass, EventTrace, TraceItem, TraceRole,
};
