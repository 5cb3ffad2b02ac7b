//! Graph interchange: a DOT digraph dialect carrying the node kinds, event
//! roles, object ids, and branch labels, plus deterministic emitters for DOT
//! and a JSON structural encoding.
//!
//! Dialect: `digraph name { n [kind=entry]; e [kind=event, event_role=first,
//! object="m"]; a -> b [label="T"]; }`. Node kinds are entry, exit, event,
//! branch, plain (default); undeclared edge endpoints are implicitly plain;
//! a plain node with two or more out-edges is promoted to branch.

use std::collections::BTreeMap;

use crate::check::{EventKind, EventSpec};
use crate::error::{Diagnostic, DiagnosticCode, Error, Result};
use crate::graph::{ColoredDirectedGraph, GraphBuilder, NodeId, NodeKind};

/// Parsed and validated document: the graph, the per-object event specs, and
/// the digraph name.
#[derive(Debug, Clone)]
pub struct GraphDocument {
    pub name: String,
    pub graph: ColoredDirectedGraph,
    pub specs: Vec<EventSpec>,
}

impl GraphDocument {
    /// The document with the coloring restricted to one object: every event
    /// node outside that object's spec demotes to plain (or branch, when it
    /// forks) and loses its color.
    pub fn restricted_to(&self, object: &str) -> Result<GraphDocument> {
        let spec = self
            .specs
            .iter()
            .find(|s| s.object_id == object)
            .ok_or_else(|| Error::SpecMismatch(format!("no event spec for object '{object}'")))?
            .clone();
        let mut graph = self.graph.clone();
        for u in graph.node_ids().collect::<Vec<_>>() {
            if graph.kind(u) == NodeKind::Event && !spec.events.contains_key(&u) {
                let kind = if graph.out_degree(u) >= 2 {
                    NodeKind::Branch
                } else {
                    NodeKind::Plain
                };
                graph.set_kind(u, kind);
                graph.set_colored(u, false);
            }
        }
        Ok(GraphDocument {
            name: self.name.clone(),
            graph,
            specs: vec![spec],
        })
    }
}

// ---------------------------------------------------------------- lexing --

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Id(String),
    Arrow,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Equals,
    Comma,
    Semicolon,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn parse_err(message: impl Into<String>, line: usize, col: usize) -> Error {
    Error::Ingest(Diagnostic {
        code: DiagnosticCode::Parse,
        message: message.into(),
        position: Some((line, col)),
    })
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;
    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '/' => {
                bump!();
                match chars.peek() {
                    Some('/') => {
                        while let Some(&c) = chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            bump!();
                        }
                    }
                    Some('*') => {
                        bump!();
                        let mut closed = false;
                        while let Some(c) = bump!() {
                            if c == '*' && chars.peek() == Some(&'/') {
                                bump!();
                                closed = true;
                                break;
                            }
                        }
                        if !closed {
                            return Err(parse_err("unterminated block comment", tline, tcol));
                        }
                    }
                    _ => return Err(parse_err("unexpected '/'", tline, tcol)),
                }
            }
            '{' => {
                bump!();
                tokens.push(Token { tok: Tok::LBrace, line: tline, col: tcol });
            }
            '}' => {
                bump!();
                tokens.push(Token { tok: Tok::RBrace, line: tline, col: tcol });
            }
            '[' => {
                bump!();
                tokens.push(Token { tok: Tok::LBracket, line: tline, col: tcol });
            }
            ']' => {
                bump!();
                tokens.push(Token { tok: Tok::RBracket, line: tline, col: tcol });
            }
            '=' => {
                bump!();
                tokens.push(Token { tok: Tok::Equals, line: tline, col: tcol });
            }
            ',' => {
                bump!();
                tokens.push(Token { tok: Tok::Comma, line: tline, col: tcol });
            }
            ';' => {
                bump!();
                tokens.push(Token { tok: Tok::Semicolon, line: tline, col: tcol });
            }
            '-' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    tokens.push(Token { tok: Tok::Arrow, line: tline, col: tcol });
                } else {
                    return Err(parse_err("expected '->' after '-'", tline, tcol));
                }
            }
            '"' => {
                bump!();
                let mut s = String::new();
                let mut closed = false;
                while let Some(c) = bump!() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match bump!() {
                            Some(e) => s.push(e),
                            None => break,
                        },
                        _ => s.push(c),
                    }
                }
                if !closed {
                    return Err(parse_err("unterminated string", tline, tcol));
                }
                tokens.push(Token { tok: Tok::Id(s), line: tline, col: tcol });
            }
            c if c.is_ascii_alphanumeric() || c == '_' || c == '.' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                tokens.push(Token { tok: Tok::Id(s), line: tline, col: tcol });
            }
            other => return Err(parse_err(format!("unexpected character '{other}'"), tline, tcol)),
        }
    }
    Ok(tokens)
}

// --------------------------------------------------------------- parsing --

#[derive(Debug)]
struct RawNode {
    name: String,
    attrs: Vec<(String, String, usize, usize)>,
    line: usize,
    col: usize,
}

#[derive(Debug)]
struct RawEdge {
    from: String,
    to: String,
    attrs: Vec<(String, String, usize, usize)>,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    fn expect_id(&mut self, what: &str) -> Result<(String, usize, usize)> {
        let (l, c) = self.here();
        match self.next() {
            Some(Token { tok: Tok::Id(s), line, col }) => Ok((s, line, col)),
            _ => Err(parse_err(format!("expected {what}"), l, c)),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let (l, c) = self.here();
        match self.next() {
            Some(t) if t.tok == tok => Ok(()),
            _ => Err(parse_err(format!("expected {what}"), l, c)),
        }
    }

    fn attr_list(&mut self) -> Result<Vec<(String, String, usize, usize)>> {
        let mut attrs = Vec::new();
        if !matches!(self.peek().map(|t| &t.tok), Some(Tok::LBracket)) {
            return Ok(attrs);
        }
        self.next();
        loop {
            match self.peek().map(|t| &t.tok) {
                Some(Tok::RBracket) => {
                    self.next();
                    break;
                }
                Some(Tok::Comma) => {
                    self.next();
                }
                Some(Tok::Id(_)) => {
                    let (key, line, col) = self.expect_id("attribute name")?;
                    self.expect(Tok::Equals, "'=' after attribute name")?;
                    let (value, _, _) = self.expect_id("attribute value")?;
                    attrs.push((key, value, line, col));
                }
                _ => {
                    let (l, c) = self.here();
                    return Err(parse_err("expected attribute or ']'", l, c));
                }
            }
        }
        Ok(attrs)
    }
}

fn parse(text: &str) -> Result<(String, Vec<RawNode>, Vec<RawEdge>)> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let (kw, l, c) = p.expect_id("'digraph'")?;
    if kw != "digraph" {
        return Err(parse_err("expected 'digraph'", l, c));
    }
    let name = match p.peek().map(|t| &t.tok) {
        Some(Tok::Id(_)) => p.expect_id("graph name")?.0,
        _ => String::from("g"),
    };
    p.expect(Tok::LBrace, "'{'")?;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    loop {
        match p.peek().map(|t| &t.tok) {
            Some(Tok::RBrace) => {
                p.next();
                break;
            }
            Some(Tok::Semicolon) => {
                p.next();
            }
            Some(Tok::Id(_)) => {
                let (first, line, col) = p.expect_id("node name")?;
                let mut chain = vec![first];
                while matches!(p.peek().map(|t| &t.tok), Some(Tok::Arrow)) {
                    p.next();
                    chain.push(p.expect_id("edge target")?.0);
                }
                let attrs = p.attr_list()?;
                if chain.len() == 1 {
                    nodes.push(RawNode {
                        name: chain.pop().expect("one name"),
                        attrs,
                        line,
                        col,
                    });
                } else {
                    for pair in chain.windows(2) {
                        edges.push(RawEdge {
                            from: pair[0].clone(),
                            to: pair[1].clone(),
                            attrs: attrs.clone(),
                        });
                    }
                }
            }
            None => {
                let (l, c) = p.here();
                return Err(parse_err("unexpected end of input", l, c));
            }
            _ => {
                let (l, c) = p.here();
                return Err(parse_err("expected statement", l, c));
            }
        }
    }
    Ok((name, nodes, edges))
}

// -------------------------------------------------------------- assembly --

fn diag(code: DiagnosticCode, message: String, line: usize, col: usize) -> Error {
    Error::Ingest(Diagnostic {
        code,
        message,
        position: Some((line, col)),
    })
}

/// Parse, validate, and assemble a document into a well-formed graph plus
/// the event specs grouped by object.
pub fn ingest(text: &str) -> Result<GraphDocument> {
    let (name, raw_nodes, raw_edges) = parse(text)?;
    let mut builder = GraphBuilder::new();
    // (node, role, object) triples collected while walking declarations.
    let mut roles: Vec<(NodeId, EventKind, String)> = Vec::new();
    let mut seen_entry: Option<String> = None;
    let mut seen_exit: Option<String> = None;

    for raw in &raw_nodes {
        let mut kind = NodeKind::Plain;
        let mut role: Option<EventKind> = None;
        let mut object: Option<String> = None;
        for (key, value, line, col) in &raw.attrs {
            match key.as_str() {
                "kind" => {
                    kind = match value.as_str() {
                        "entry" => NodeKind::Entry,
                        "exit" => NodeKind::Exit,
                        "event" => NodeKind::Event,
                        "branch" => NodeKind::Branch,
                        "plain" => NodeKind::Plain,
                        other => {
                            return Err(diag(
                                DiagnosticCode::UnknownAttributeValue,
                                format!("unknown kind '{other}' on node '{}'", raw.name),
                                *line,
                                *col,
                            ))
                        }
                    };
                }
                "event_role" => {
                    role = Some(match value.as_str() {
                        "first" => EventKind::First,
                        "second" => EventKind::Second,
                        "flow" => EventKind::Flow,
                        other => {
                            return Err(diag(
                                DiagnosticCode::UnknownAttributeValue,
                                format!("unknown event_role '{other}' on node '{}'", raw.name),
                                *line,
                                *col,
                            ))
                        }
                    });
                }
                "object" => object = Some(value.clone()),
                // Presentation attributes from graph tooling pass through.
                "label" | "shape" | "style" | "color" | "fillcolor" => {}
                other => {
                    return Err(diag(
                        DiagnosticCode::UnknownAttributeValue,
                        format!("unknown attribute '{other}' on node '{}'", raw.name),
                        *line,
                        *col,
                    ))
                }
            }
        }
        match kind {
            NodeKind::Entry => {
                if let Some(prev) = &seen_entry {
                    return Err(diag(
                        DiagnosticCode::DuplicateEntry,
                        format!("entry already declared as '{prev}', found '{}'", raw.name),
                        raw.line,
                        raw.col,
                    ));
                }
                seen_entry = Some(raw.name.clone());
            }
            NodeKind::Exit => {
                if let Some(prev) = &seen_exit {
                    return Err(diag(
                        DiagnosticCode::DuplicateExit,
                        format!("exit already declared as '{prev}', found '{}'", raw.name),
                        raw.line,
                        raw.col,
                    ));
                }
                seen_exit = Some(raw.name.clone());
            }
            _ => {}
        }
        if (role.is_some() || object.is_some()) && kind != NodeKind::Event {
            return Err(diag(
                DiagnosticCode::EventAttributeOnNonEvent,
                format!("node '{}' carries event attributes but kind is not event", raw.name),
                raw.line,
                raw.col,
            ));
        }
        let id = builder.node(&raw.name, kind);
        builder.set_kind(id, kind); // re-declaration refines an implicit plain
        if let Some(role) = role {
            if roles.iter().any(|(n, _, _)| *n == id) {
                return Err(diag(
                    DiagnosticCode::EventAttributeOnNonEvent,
                    format!("node '{}' is referenced by more than one object spec", raw.name),
                    raw.line,
                    raw.col,
                ));
            }
            roles.push((id, role, object.unwrap_or_else(|| "default".into())));
        }
    }
    for raw in &raw_edges {
        let from = builder.node(&raw.from, NodeKind::Plain);
        let to = builder.node(&raw.to, NodeKind::Plain);
        let mut label: Option<&str> = None;
        for (key, value, line, col) in &raw.attrs {
            match key.as_str() {
                "label" => label = Some(value),
                other => {
                    return Err(diag(
                        DiagnosticCode::UnknownAttributeValue,
                        format!("unknown edge attribute '{other}'"),
                        *line,
                        *col,
                    ))
                }
            }
        }
        builder.edge(from, to, label);
    }
    if seen_entry.is_none() {
        return Err(Error::Ingest(Diagnostic {
            code: DiagnosticCode::MissingEntry,
            message: "no node with kind=entry".into(),
            position: None,
        }));
    }
    if seen_exit.is_none() {
        return Err(Error::Ingest(Diagnostic {
            code: DiagnosticCode::MissingExit,
            message: "no node with kind=exit".into(),
            position: None,
        }));
    }
    let mut graph = builder.finish_unchecked()?;
    // Structural promotion and the branch-degree check.
    for u in graph.node_ids().collect::<Vec<_>>() {
        match graph.kind(u) {
            NodeKind::Plain if graph.out_degree(u) >= 2 => graph.set_kind(u, NodeKind::Branch),
            NodeKind::Branch if graph.out_degree(u) < 2 => {
                return Err(Error::Ingest(Diagnostic {
                    code: DiagnosticCode::BranchSingleOutEdge,
                    message: format!(
                        "branch node '{}' has {} out-edges, need at least 2",
                        graph.name(u),
                        graph.out_degree(u)
                    ),
                    position: None,
                }));
            }
            _ => {}
        }
    }
    graph.validate()?;
    let mut by_object: BTreeMap<String, BTreeMap<NodeId, EventKind>> = BTreeMap::new();
    for (id, role, object) in roles {
        by_object.entry(object).or_default().insert(id, role);
    }
    let specs = by_object
        .into_iter()
        .map(|(object_id, events)| EventSpec { object_id, events })
        .collect();
    Ok(GraphDocument { name, graph, specs })
}

// -------------------------------------------------------------- emission --

fn quote(name: &str) -> String {
    let bare = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.chars().next().expect("non-empty").is_ascii_digit();
    if bare {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

fn kind_attr(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Entry => "entry",
        NodeKind::Exit => "exit",
        NodeKind::Event => "event",
        NodeKind::Branch => "branch",
        NodeKind::Plain => "plain",
        NodeKind::ContractedScc => "plain",
    }
}

fn role_attr(role: EventKind) -> &'static str {
    match role {
        EventKind::First => "first",
        EventKind::Second => "second",
        EventKind::Flow => "flow",
    }
}

/// Deterministic DOT emission: nodes in id order, then edges in (source,
/// target) order. Round-trips through `ingest` up to node renumbering.
pub fn emit_dot(name: &str, g: &ColoredDirectedGraph, specs: &[EventSpec]) -> String {
    let mut role_of: BTreeMap<NodeId, (&str, &str)> = BTreeMap::new();
    for spec in specs {
        for (&node, &kind) in &spec.events {
            role_of.insert(node, (role_attr(kind), spec.object_id.as_str()));
        }
    }
    let mut out = String::new();
    out.push_str(&format!("digraph {} {{\n", quote(name)));
    for u in g.node_ids() {
        let mut attrs = vec![format!("kind={}", kind_attr(g.kind(u)))];
        if let Some((role, object)) = role_of.get(&u) {
            attrs.push(format!("event_role={role}"));
            attrs.push(format!("object=\"{object}\""));
        }
        out.push_str(&format!("  {} [{}];\n", quote(g.name(u)), attrs.join(", ")));
    }
    for u in g.node_ids() {
        for (v, edge) in g.out_edges(u) {
            match &edge.label {
                Some(l) => out.push_str(&format!(
                    "  {} -> {} [label={}];\n",
                    quote(g.name(u)),
                    quote(g.name(v)),
                    quote(l)
                )),
                None => {
                    out.push_str(&format!("  {} -> {};\n", quote(g.name(u)), quote(g.name(v))))
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

/// JSON structural encoding of a graph document.
pub fn emit_json(name: &str, g: &ColoredDirectedGraph, specs: &[EventSpec]) -> String {
    let mut role_of: BTreeMap<NodeId, (&str, &str)> = BTreeMap::new();
    for spec in specs {
        for (&node, &kind) in &spec.events {
            role_of.insert(node, (role_attr(kind), spec.object_id.as_str()));
        }
    }
    let nodes: Vec<serde_json::Value> = g
        .node_ids()
        .map(|u| {
            let mut obj = serde_json::json!({
                "name": g.name(u),
                "kind": kind_attr(g.kind(u)),
            });
            if let Some((role, object)) = role_of.get(&u) {
                obj["event_role"] = serde_json::json!(role);
                obj["object"] = serde_json::json!(object);
            }
            obj
        })
        .collect();
    let edges: Vec<serde_json::Value> = g
        .node_ids()
        .flat_map(|u| {
            g.out_edges(u).map(move |(v, edge)| {
                let mut obj = serde_json::json!({
                    "from": g.name(u),
                    "to": g.name(v),
                });
                if let Some(l) = &edge.label {
                    obj["label"] = serde_json::json!(l);
                }
                obj
            })
        })
        .collect();
    let doc = serde_json::json!({
        "name": name,
        "nodes": nodes,
        "edges": edges,
    });
    serde_json::to_string_pretty(&doc).expect("serializable document")
}

/// Name-keyed structural equality, used by round-trip checks where node ids
/// may be renumbered.
pub fn same_document(a: &GraphDocument, b: &GraphDocument) -> bool {
    let ga = &a.graph;
    let gb = &b.graph;
    if ga.node_count() != gb.node_count() || ga.edge_count() != gb.edge_count() {
        return false;
    }
    for u in ga.node_ids() {
        let Some(u2) = gb.node_by_name(ga.name(u)) else {
            return false;
        };
        if ga.kind(u) != gb.kind(u2) || ga.is_colored(u) != gb.is_colored(u2) {
            return false;
        }
        for (v, edge) in ga.out_edges(u) {
            let Some(v2) = gb.node_by_name(ga.name(v)) else {
                return false;
            };
            match gb.edge(u2, v2) {
                Some(e2) if e2.label == edge.label => {}
                _ => return false,
            }
        }
    }
    let specs_a: BTreeMap<&str, BTreeMap<&str, EventKind>> = a
        .specs
        .iter()
        .map(|s| {
            (
                s.object_id.as_str(),
                s.events.iter().map(|(&n, &k)| (ga.name(n), k)).collect(),
            )
        })
        .collect();
    let specs_b: BTreeMap<&str, BTreeMap<&str, EventKind>> = b
        .specs
        .iter()
        .map(|s| {
            (
                s.object_id.as_str(),
                s.events.iter().map(|(&n, &k)| (gb.name(n), k)).collect(),
            )
        })
        .collect();
    specs_a == specs_b
}
