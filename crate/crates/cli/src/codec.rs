//! File formats: observations CSV, ground-truth / state-matrix / graph JSON,
//! DOT, and the sweep and stability tables.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use pathinf::evaluate::{GraphDiff, StabilityReport, SweepCell};
use pathinf::infer::{EdgeChoice, InferenceTrace, PathGraph};
use pathinf::simulate::{GroundTruthDag, WeightedEdge};
use pathinf::summarize::StateMatrix;
use pathinf::{Cell, ObservationMatrix, State};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MISSING_TOKEN: &str = "NA";

fn parse_cell(token: &str) -> Option<Cell> {
    match token {
        "0" => Some(Cell::Negative),
        "1" => Some(Cell::Positive),
        "NA" | "?" => Some(Cell::Missing),
        _ => None,
    }
}

fn cell_token(c: Cell) -> &'static str {
    match c {
        Cell::Negative => "0",
        Cell::Positive => "1",
        Cell::Missing => MISSING_TOKEN,
    }
}

fn csv_error(e: csv::Error) -> CliError {
    let at = e
        .position()
        .map(|p| format!("line {}: ", p.line()))
        .unwrap_or_default();
    CliError::Parse(format!("{at}{e}"))
}

/// Header of labels, then one row per sample over `0`, `1`, `NA` (or `?`).
pub fn parse_observations(text: &str) -> CliResult<ObservationMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let labels: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for (k, label) in labels.iter().enumerate() {
        if label.is_empty() {
            return Err(CliError::Parse(format!("line 1, column {}: empty label", k + 1)));
        }
        if !seen.insert(label) {
            return Err(CliError::Parse(format!("line 1, column {}: duplicate label {label:?}", k + 1)));
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(k, token)| {
                parse_cell(token).ok_or_else(|| {
                    CliError::Parse(format!(
                        "line {line} (row {}), column {} ({}): invalid cell {token:?}; expected 0, 1, NA or ?",
                        rows.len() + 1,
                        k + 1,
                        labels[k]
                    ))
                })
            })
            .collect::<CliResult<Vec<Cell>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Parse("observation file has a header but no rows".into()));
    }
    Ok(ObservationMatrix::new(labels, rows)?)
}

pub fn write_observations(obs: &ObservationMatrix) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(obs.labels()).expect("in-memory write");
    for row in obs.rows() {
        w.write_record(row.iter().map(|&c| cell_token(c))).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// JSON pointer for a deserialization path.
fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => write!(out, "{index}").unwrap(),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

fn from_json<T: DeserializeOwned>(text: &str, what: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = pointer(e.path());
        CliError::Parse(format!("{what} {at}: {}", e.into_inner()))
    })
}

fn schema(what: &str, at: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("{what} {at}: {msg}"))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub nodes: Vec<String>,
    pub edges: Vec<TruthEdge>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

pub fn ground_truth_json(labels: &[String], dag: &GroundTruthDag, metadata: serde_json::Value) -> String {
    to_json(&GroundTruthFile {
        nodes: labels.to_vec(),
        edges: dag
            .edges()
            .iter()
            .map(|e| TruthEdge { from: e.from, to: e.to, weight: e.weight })
            .collect(),
        metadata,
    })
}

pub fn parse_ground_truth(text: &str) -> CliResult<(Vec<String>, GroundTruthDag)> {
    const WHAT: &str = "ground truth";
    let file: GroundTruthFile = from_json(text, WHAT)?;
    let n = file.nodes.len();
    for (i, e) in file.edges.iter().enumerate() {
        if e.from >= n || e.to >= n {
            return Err(schema(WHAT, &format!("/edges/{i}"), format!("endpoint outside 0..{n}")));
        }
    }
    let edges = file
        .edges
        .iter()
        .map(|e| WeightedEdge { from: e.from, to: e.to, weight: e.weight })
        .collect();
    let dag = GroundTruthDag::new(n, edges).map_err(|e| schema(WHAT, "/edges", e))?;
    Ok((file.nodes, dag))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub iters: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMatrixFile {
    pub labels: Vec<String>,
    /// 0/1 strings in label order.
    pub states: BTreeMap<String, f64>,
    pub objective: Option<f64>,
    pub solver: Option<SolverInfo>,
}

pub fn state_matrix_json(sm: &StateMatrix, objective: Option<f64>, solver: Option<SolverInfo>) -> String {
    to_json(&StateMatrixFile {
        labels: sm.labels().to_vec(),
        states: sm.iter().map(|(s, p)| (s.to_string(), p)).collect(),
        objective,
        solver,
    })
}

pub fn parse_state_matrix(text: &str) -> CliResult<StateMatrix> {
    const WHAT: &str = "state matrix";
    let file: StateMatrixFile = from_json(text, WHAT)?;
    let n = file.labels.len();
    if n == 0 {
        return Err(schema(WHAT, "/labels", "no labels"));
    }
    if file.states.is_empty() {
        return Err(schema(WHAT, "/states", "state list is empty"));
    }
    let mut states = Vec::with_capacity(file.states.len());
    let mut probs = Vec::with_capacity(file.states.len());
    for (key, &p) in &file.states {
        let at = format!("/states/{key}");
        if key.chars().count() != n {
            return Err(schema(WHAT, &at, format!("key has width {}, expected {n}", key.chars().count())));
        }
        let state = State::parse(key).map_err(|e| schema(WHAT, &at, e))?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(schema(WHAT, &at, format!("probability {p} outside (0, 1]")));
        }
        states.push(state);
        probs.push(p);
    }
    // Keys sort as 0/1 strings, which is ascending bit order.
    StateMatrix::new(file.labels, states, probs).map_err(|e| schema(WHAT, "/states", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub labels: Vec<String>,
    pub edges: Vec<[usize; 2]>,
}

pub fn graph_json(g: &PathGraph) -> String {
    to_json(&GraphFile {
        labels: g.labels().to_vec(),
        edges: g.edges().iter().map(|&(a, b)| [a, b]).collect(),
    })
}

pub fn parse_graph(text: &str) -> CliResult<PathGraph> {
    const WHAT: &str = "graph";
    let file: GraphFile = from_json(text, WHAT)?;
    let mut g = PathGraph::empty(file.labels);
    for (i, &[a, b]) in file.edges.iter().enumerate() {
        let at = format!("/edges/{i}");
        match g.add_edge(a, b) {
            Ok(true) => {}
            Ok(false) => return Err(schema(WHAT, &at, format!("duplicate edge [{a}, {b}]"))),
            Err(e) => return Err(schema(WHAT, &at, e)),
        }
    }
    Ok(g)
}

const DOT_KEYWORDS: [&str; 6] = ["graph", "digraph", "node", "edge", "strict", "subgraph"];

/// Bare identifier when legal, otherwise a quoted string.
pub fn dot_id(label: &str) -> String {
    let mut chars = label.chars();
    let plain = chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !DOT_KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(label));
    if plain {
        label.to_owned()
    } else {
        format!("\"{}\"", label.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

/// Undirected DOT; edges in trace order with how each was chosen.
pub fn graph_dot(g: &PathGraph, trace: Option<&InferenceTrace>) -> String {
    let labels = g.labels();
    let mut out = String::from("graph pathinf {\n");
    for label in labels {
        writeln!(out, "  {};", dot_id(label)).unwrap();
    }
    let edge = |out: &mut String, a: usize, b: usize, note: String| {
        writeln!(out, "  {} -- {};{note}", dot_id(&labels[a]), dot_id(&labels[b])).unwrap();
    };
    match trace {
        Some(t) => {
            for step in &t.steps {
                let note = match step.choice {
                    EdgeChoice::Forced => " // forced".to_owned(),
                    EdgeChoice::Scored(w) => format!(" // iteration {}, W = {w}", step.iteration),
                    EdgeChoice::Bridged(w) => format!(" // iteration {}, bridged W = {w}", step.iteration),
                };
                edge(&mut out, step.edge.0, step.edge.1, note);
            }
        }
        None => {
            for &(a, b) in g.edges() {
                edge(&mut out, a, b, String::new());
            }
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub labels: Vec<String>,
    pub trace: InferenceTrace,
}

pub fn trace_json(labels: &[String], trace: &InferenceTrace) -> String {
    to_json(&TraceFile { labels: labels.to_vec(), trace: trace.clone() })
}

fn percent(rate: f64) -> String {
    format!("{:.1}%", rate * 100.0)
}

pub fn diff_table(d: &GraphDiff) -> String {
    format!(
        "true edges      {}\ninferred edges  {}\nrecovered       {}\nfalse positives {}\nfalse negatives {}\nFP {} FN {}\n",
        d.true_edges,
        d.inferred_edges,
        d.recovered,
        d.false_pos,
        d.false_neg,
        percent(d.fp_rate),
        percent(d.fn_rate)
    )
}

pub fn stability_csv(labels: &[String], report: &StabilityReport) -> String {
    let mut out = String::from("from,to,count,frequency,in_full\n");
    for e in &report.edges {
        writeln!(
            out,
            "{},{},{},{},{}",
            labels[e.edge.0], labels[e.edge.1], e.count, e.frequency, e.in_full
        )
        .unwrap();
    }
    out
}

pub fn stability_table(labels: &[String], report: &StabilityReport) -> String {
    let mut out = format!(
        "{} runs on {} of the rows (fraction {})\n",
        report.repeats, report.subsample_rows, report.fraction
    );
    for e in &report.edges {
        let mark = if e.in_full { "" } else { "  (not in full-data graph)" };
        writeln!(
            out,
            "{} -- {}  {}{mark}",
            labels[e.edge.0],
            labels[e.edge.1],
            percent(e.frequency)
        )
        .unwrap();
    }
    out
}

/// Edge counts as rows, `p` values as columns: the FP block, then FN.
pub fn sweep_grid_csv(cells: &[SweepCell]) -> String {
    let mut edges: Vec<usize> = Vec::new();
    let mut ps: Vec<f64> = Vec::new();
    for c in cells {
        if !edges.contains(&c.n_edges) {
            edges.push(c.n_edges);
        }
        if !ps.contains(&c.p_miss_pos) {
            ps.push(c.p_miss_pos);
        }
    }
    let lookup = |e: usize, p: f64| cells.iter().find(|c| c.n_edges == e && c.p_miss_pos == p);
    let mut out = String::from("metric,edges");
    for p in &ps {
        write!(out, ",{p}").unwrap();
    }
    out.push('\n');
    for (metric, pick) in [
        ("fp_rate", (|c: &SweepCell| c.mean_fp_rate) as fn(&SweepCell) -> f64),
        ("fn_rate", |c: &SweepCell| c.mean_fn_rate),
    ] {
        for &e in &edges {
            write!(out, "{metric},{e}").unwrap();
            for &p in &ps {
                match lookup(e, p) {
                    Some(c) => write!(out, ",{}", pick(c)).unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
    }
    out
}

pub fn sweep_cells_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("n_edges,p_miss_pos,repeats,mean_fp_rate,var_fp_rate,mean_fn_rate,var_fn_rate\n");
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.n_edges,
            c.p_miss_pos,
            c.runs.len(),
            c.mean_fp_rate,
            c.var_fp_rate,
            c.mean_fn_rate,
            c.var_fn_rate
        )
        .unwrap();
    }
    out
}

pub fn sweep_runs_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from(
        "n_edges,p_miss_pos,repeat,true_edges,inferred_edges,recovered,false_pos,false_neg,fp_rate,fn_rate\n",
    );
    for c in cells {
        for (r, d) in c.runs.iter().enumerate() {
            writeln!(
                out,
                "{},{},{r},{},{},{},{},{},{},{}",
                c.n_edges,
                c.p_miss_pos,
                d.true_edges,
                d.inferred_edges,
                d.recovered,
                d.false_pos,
                d.false_neg,
                d.fp_rate,
                d.fn_rate
            )
            .unwrap();
        }
    }
    out
}

pub fn sweep_table(cells: &[SweepCell]) -> String {
    let mut out = String::from("edges  p     mean FP   mean FN\n");
    for c in cells {
        writeln!(
            out,
            "{:<6} {:<5} {:>7}   {:>7}",
            c.n_edges,
            c.p_miss_pos,
            percent(c.mean_fp_rate),
            percent(c.mean_fn_rate)
        )
        .unwrap();
    }
    out
}
