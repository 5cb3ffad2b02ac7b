//! Command-line front end: compact CFGs to event-flow graphs, enumerate
//! trace classes, check 2-event properties, run the brute-force oracles, and
//! generate random CFGs.
//!
//! Exit codes: 0 success/safe, 1 usage, 2 ingest or spec error, 3 violation,
//! 4 escapes, 5 oracle too large.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{ArgAction, Parser, Subcommand};

use efg_core::check::{check_two_event_with_budget, EventSpec, VerdictStatus};
use efg_core::dot::{emit_dot, emit_json, ingest, GraphDocument};
use efg_core::efg::build_efg;
use efg_core::error::Error;
use efg_core::gen::{generate_cfg, GenConfig};
use efg_core::report::{
    oracle_report, verdict_report, OracleReport, ReportDocument, StatsReport, VerdictReport,
};
use efg_core::stats::{compute_stats, render_comparison_table, render_distribution_table, CorpusBuckets};
use efg_core::trace::{efg_path_traces, verify_bijection};

const EXIT_USAGE: u8 = 1;
const EXIT_INGEST: u8 = 2;
const EXIT_VIOLATION: u8 = 3;
const EXIT_ESCAPES: u8 = 4;
const EXIT_ORACLE_TOO_LARGE: u8 = 5;

#[derive(Parser)]
#[command(
    name = "efg",
    version,
    about = "Compact control-flow graphs into event-flow graphs and check 2-event properties",
    disable_help_subcommand = true
)]
struct Cli {
    /// Ceiling on enumerated paths in the bounded oracles.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    max_paths: usize,

    /// Suppress informational notes on stderr.
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compact a CFG into its event-flow graph and emit it.
    Build {
        /// Input file; stdin when omitted.
        input: Option<PathBuf>,
        /// Restrict the event coloring to one object's events.
        #[arg(long)]
        object: Option<String>,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Emit JSON instead of DOT.
        #[arg(long, action = ArgAction::SetTrue)]
        json: bool,
    },
    /// Reduction statistics for one or more CFGs.
    Stats {
        inputs: Vec<PathBuf>,
        /// Emit a JSON report array instead of tables.
        #[arg(long, action = ArgAction::SetTrue)]
        json: bool,
        /// Emit plain-text tables (default).
        #[arg(long, action = ArgAction::SetTrue)]
        table: bool,
    },
    /// Print one event trace per equivalence class within the budget.
    Classes {
        input: Option<PathBuf>,
        /// Loop re-visit budget.
        #[arg(short = 'k', long = "budget", default_value_t = 1)]
        budget: u32,
        #[arg(long)]
        object: Option<String>,
    },
    /// Check 2-event properties; exit 3 on violation, 4 on escapes.
    Check {
        inputs: Vec<PathBuf>,
        /// Check only this object.
        #[arg(long)]
        object: Option<String>,
        #[arg(long, action = ArgAction::SetTrue)]
        json: bool,
        /// Witness loop budget.
        #[arg(short = 'k', long = "budget", default_value_t = 1)]
        budget: u32,
    },
    /// Cross-validate the compaction against brute-force path enumeration.
    Oracle {
        input: Option<PathBuf>,
        #[arg(short = 'k', long = "budget", default_value_t = 1)]
        budget: u32,
        #[arg(long)]
        object: Option<String>,
        #[arg(long, action = ArgAction::SetTrue)]
        json: bool,
    },
    /// Emit a random well-formed CFG document.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Node count range, e.g. 8..20 (inclusive).
        #[arg(long, default_value = "4..12", value_parser = parse_range)]
        nodes: (usize, usize),
        /// Event count range, e.g. 0..3 (inclusive).
        #[arg(long, default_value = "0..3", value_parser = parse_range)]
        events: (usize, usize),
        #[arg(long, default_value_t = 0.4)]
        branch_probability: f64,
        #[arg(long, default_value_t = 0.3)]
        loop_probability: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got '{s}'"))?;
    let lo: usize = a.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: usize = b.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn read_input(path: Option<&PathBuf>) -> anyhow::Result<(String, String)> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("read {}", p.display()))?;
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            Ok((text, id))
        }
        None => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text).context("read stdin")?;
            Ok((text, "stdin".to_string()))
        }
    }
}

fn write_output(path: Option<&PathBuf>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).with_context(|| format!("write {}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::OracleTooLarge(_) => EXIT_ORACLE_TOO_LARGE,
        _ => EXIT_INGEST,
    }
}

fn fail(err: anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    let code = err
        .downcast_ref::<Error>()
        .map(exit_for)
        .unwrap_or(EXIT_INGEST);
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => fail(e),
    }
}

fn load(path: Option<&PathBuf>, object: Option<&str>) -> anyhow::Result<(GraphDocument, String)> {
    let (text, id) = read_input(path)?;
    let doc = ingest(&text)?;
    let doc = match object {
        Some(object) => restrict_to_object(&doc, object)?,
        None => doc,
    };
    Ok((doc, id))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Build { input, object, output, json } => {
            let (doc, _) = load(input.as_ref(), object.as_deref())?;
            let result = build_efg(&doc.graph)?;
            // Specs restricted to surviving nodes (events always survive).
            let content = if json {
                emit_json(&doc.name, &result.efg, &doc.specs) + "\n"
            } else {
                emit_dot(&doc.name, &result.efg, &doc.specs)
            };
            write_output(output.as_ref(), &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { inputs, json, table: _ } => {
            let mut rows = Vec::new();
            let mut buckets = CorpusBuckets::default();
            let mut docs = Vec::new();
            if inputs.is_empty() {
                let (doc, id) = load(None, None)?;
                docs.push((doc, id));
            }
            for path in &inputs {
                let (doc, id) = load(Some(path), None)?;
                docs.push((doc, id));
            }
            for (doc, id) in &docs {
                let result = build_efg(&doc.graph)?;
                let stats = compute_stats(&doc.graph, &result.efg);
                buckets.add(&stats);
                rows.push((id.clone(), stats));
            }
            if json {
                let reports: Vec<ReportDocument> = rows
                    .iter()
                    .map(|(id, stats)| ReportDocument {
                        graph_id: id.clone(),
                        stats: Some(StatsReport::from(stats)),
                        classes: Vec::new(),
                        verdicts: Vec::new(),
                        oracle: None,
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                print!("{}", render_comparison_table(&rows));
                if rows.len() > 1 {
                    println!();
                    print!("{}", render_distribution_table(&buckets));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Classes { input, budget, object } => {
            let (doc, _) = load(input.as_ref(), object.as_deref())?;
            let result = build_efg(&doc.graph)?;
            let traces = efg_path_traces(&result.efg, budget, cli.max_paths)?;
            let mut lines: Vec<String> = traces.iter().map(|t| t.render(&result.efg)).collect();
            lines.sort();
            for line in lines {
                println!("{line}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { inputs, object, json, budget } => {
            let mut reports = Vec::new();
            let mut worst = VerdictStatus::Safe;
            let mut docs = Vec::new();
            if inputs.is_empty() {
                docs.push(load(None, object.as_deref())?);
            }
            for path in &inputs {
                docs.push(load(Some(path), object.as_deref())?);
            }
            for (doc, id) in &docs {
                let result = build_efg(&doc.graph)?;
                let mut verdicts: Vec<VerdictReport> = Vec::new();
                for spec in selected_specs(doc, object.as_deref())? {
                    if !spec.has_first() {
                        if !cli.quiet {
                            eprintln!(
                                "note: {id}: object '{}' has no first event; skipped",
                                spec.object_id
                            );
                        }
                        verdicts.push(VerdictReport {
                            object: spec.object_id.clone(),
                            status: "skipped".into(),
                            witnesses: Vec::new(),
                            note: Some("no first event; nothing to verify".into()),
                        });
                        continue;
                    }
                    let verdict =
                        check_two_event_with_budget(&result.efg, &spec, budget, cli.max_paths)?;
                    worst = worst.max(verdict.status);
                    verdicts.push(verdict_report(&result.efg, &spec.object_id, &verdict, None));
                }
                reports.push(ReportDocument {
                    graph_id: id.clone(),
                    stats: Some(StatsReport::from(&compute_stats(&doc.graph, &result.efg))),
                    classes: {
                        let traces = efg_path_traces(&result.efg, budget, cli.max_paths)?;
                        let mut lines: Vec<String> =
                            traces.iter().map(|t| t.render(&result.efg)).collect();
                        lines.sort();
                        lines
                    },
                    verdicts,
                    oracle: None,
                });
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                for report in &reports {
                    for v in &report.verdicts {
                        println!("{}: {}: {}", report.graph_id, v.object, v.status);
                        for w in &v.witnesses {
                            let conds: Vec<String> = w
                                .conditions
                                .iter()
                                .map(|c| format!("{}={}", c.node, c.taken))
                                .collect();
                            println!("  witness: {}  [{}]", w.trace, conds.join(", "));
                        }
                    }
                }
            }
            Ok(match worst {
                VerdictStatus::Safe => ExitCode::SUCCESS,
                VerdictStatus::Violation => ExitCode::from(EXIT_VIOLATION),
                VerdictStatus::Escapes => ExitCode::from(EXIT_ESCAPES),
            })
        }
        Command::Oracle { input, budget, object, json } => {
            let (doc, id) = load(input.as_ref(), object.as_deref())?;
            let bijection = verify_bijection(&doc.graph, budget, cli.max_paths)?;
            let result = build_efg(&doc.graph)?;
            let mut verdicts_match = None;
            for spec in &doc.specs {
                if !spec.has_first() {
                    continue;
                }
                let fast = check_two_event_with_budget(&result.efg, spec, budget, cli.max_paths)?;
                let slow = efg_core::check::check_on_cfg_oracle(
                    &doc.graph,
                    spec,
                    budget,
                    cli.max_paths,
                )?;
                let matches = fast.status == slow.status
                    && fast
                        .witnesses
                        .iter()
                        .map(|w| w.trace.key())
                        .collect::<Vec<_>>()
                        == slow.witnesses.iter().map(|w| w.trace.key()).collect::<Vec<_>>();
                verdicts_match = Some(verdicts_match.unwrap_or(true) && matches);
            }
            let report: OracleReport =
                oracle_report(&doc.graph, &result.efg, &bijection, budget, verdicts_match);
            if json {
                let doc_report = ReportDocument {
                    graph_id: id,
                    stats: None,
                    classes: Vec::new(),
                    verdicts: Vec::new(),
                    oracle: Some(report.clone()),
                };
                println!("{}", serde_json::to_string_pretty(&[doc_report])?);
            } else {
                println!(
                    "{id}: {} (classes: {}, efg traces: {}, budget {})",
                    if report.ok { "ok" } else { "MISMATCH" },
                    report.cfg_class_count,
                    report.efg_trace_count,
                    report.budget,
                );
                for t in &report.missing_in_efg {
                    println!("  cfg-only: {t}");
                }
                for t in &report.missing_in_cfg {
                    println!("  efg-only: {t}");
                }
            }
            Ok(if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Gen {
            seed,
            nodes,
            events,
            branch_probability,
            loop_probability,
            output,
        } => {
            let config = GenConfig {
                nodes: nodes.0..=nodes.1,
                events: events.0..=events.1,
                branch_probability,
                loop_probability,
                seed,
            };
            let (graph, specs) = generate_cfg(&config)?;
            let content = emit_dot(&format!("gen_{seed}"), &graph, &specs);
            write_output(output.as_ref(), &content)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn selected_specs(doc: &GraphDocument, object: Option<&str>) -> anyhow::Result<Vec<EventSpec>> {
    match object {
        Some(object) => {
            let spec = doc
                .specs
                .iter()
                .find(|s| s.object_id == object)
                .ok_or_else(|| Error::SpecMismatch(format!("no event spec for object '{object}'")))?;
            Ok(vec![spec.clone()])
        }
        None => Ok(doc.specs.clone()),
    }
}
