//! Solve reports, statistics as JSON, and Graphviz export of a tableau.

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::certify::{certify, Certificate, ExtractError, ExtractedModel};
use crate::formula::Formula;
use crate::syntax::{render, render_program};
use crate::formula::Program;
use crate::tableau::{
    EdgeLabel, FormulaSet, NodeKind, Outcome, PrsEntry, Solver, SolverConfig, SolverError, Status, Tableau,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Sat,
    Unsat,
    Resource,
}

impl From<Outcome> for Verdict {
    fn from(outcome: Outcome) -> Self {
        match outcome {
            Outcome::Sat => Verdict::Sat,
            Outcome::Unsat => Verdict::Unsat,
            Outcome::Resource(_) => Verdict::Resource,
        }
    }
}

/// Counters of one run. Field names are part of the JSON format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stats {
    pub verdict: Verdict,
    pub nodes_total: usize,
    pub states: usize,
    pub alpha_nodes: usize,
    pub beta_nodes: usize,
    pub special_nodes: usize,
    pub closed: usize,
    pub open: usize,
    pub rule1: u64,
    pub rule2: u64,
    pub rule3: u64,
    pub rule4: u64,
    pub prs_cache_hits: u64,
    pub time_ms: u64,
}

impl Stats {
    pub fn of(solver: &Solver, outcome: Outcome, elapsed: Duration) -> Self {
        let graph = solver.tableau().graph();
        let count = |kind: NodeKind| graph.ids().filter(|&x| graph.node(x).kind == Some(kind)).count();
        let counts = solver.counts();
        Stats {
            verdict: outcome.into(),
            nodes_total: graph.len(),
            states: graph.states().count(),
            alpha_nodes: count(NodeKind::Alpha),
            beta_nodes: count(NodeKind::Beta),
            special_nodes: count(NodeKind::Special),
            closed: graph.ids().filter(|&x| graph.node(x).sts.is_closed()).count(),
            open: graph.ids().filter(|&x| graph.node(x).sts.is_open()).count(),
            rule1: counts.expand,
            rule2: counts.define,
            rule3: counts.update,
            rule4: counts.close_unfulfilled,
            prs_cache_hits: solver.tableau().prs_cache_hits(),
            time_ms: elapsed.as_millis() as u64,
        }
    }
}

pub fn export_stats(stats: &Stats) -> String {
    serde_json::to_string_pretty(stats).expect("stats serialise")
}

/// Everything a run produced. The model and certificate are present only
/// for satisfiable inputs when certification was asked for.
pub struct SolveReport {
    pub verdict: Verdict,
    pub stats: Stats,
    pub certificate: Option<Certificate>,
    pub solver: Solver,
}

impl SolveReport {
    pub fn model(&self) -> Option<&ExtractedModel> {
        self.certificate.as_ref().map(|c| &c.model)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

/// Solves `phi`, optionally certifying a satisfiable verdict.
pub fn solve(phi: &Formula, config: SolverConfig, with_certificate: bool) -> Result<SolveReport, ReportError> {
    run(Solver::new(phi, config), with_certificate)
}

/// Runs a prepared solver to the end and reports on it.
pub fn run(mut solver: Solver, with_certificate: bool) -> Result<SolveReport, ReportError> {
    let outcome = solver.solve()?;
    let stats = Stats::of(&solver, outcome, solver.elapsed());
    let certificate = match (outcome, with_certificate) {
        (Outcome::Sat, true) => Some(certify(&solver)?),
        _ => None,
    };
    Ok(SolveReport { verdict: outcome.into(), stats, certificate, solver })
}

fn set_text(tableau: &Tableau, set: &FormulaSet) -> String {
    let items: Vec<String> = tableau.table().formulas_of(set).map(render).collect();
    format!("{{{}}}", items.join(", "))
}

fn status_text(tableau: &Tableau, status: &Status) -> String {
    let alt_text = |alt: &crate::tableau::AltSets| {
        let sets: Vec<String> = alt.iter().map(|s| set_text(tableau, s)).collect();
        format!("{{{}}}", sets.join(", "))
    };
    match status {
        Status::Unexp => "unexp".into(),
        Status::Undef => "undef".into(),
        Status::Closed(alt) => format!("closed({})", alt_text(alt)),
        Status::Open(prs, alt) => {
            let entries: Vec<String> = prs
                .iter()
                .map(|(&phi, entry)| {
                    let value = match entry {
                        PrsEntry::Fulfilled => "⊥".to_string(),
                        PrsEntry::Rescuers(pairs) => {
                            let pairs: Vec<String> = pairs
                                .iter()
                                .map(|&(y, psi)| format!("({y}, {})", render(tableau.table().formula(psi))))
                                .collect();
                            format!("{{{}}}", pairs.join(", "))
                        }
                    };
                    format!("{} ↦ {value}", render(tableau.table().formula(phi)))
                })
                .collect();
            format!("open({{{}}}, {})", entries.join("; "), alt_text(alt))
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: one box per node with its label, annotation,
/// parent state and program, time stamp and status.
pub fn export_dot(tableau: &Tableau) -> String {
    let graph = tableau.graph();
    let table = tableau.table();
    let mut out = String::from("digraph tableau {\n  node [shape=box, fontname=\"monospace\"];\n");
    for x in graph.ids() {
        let node = graph.node(x);
        let kind = match node.kind {
            Some(NodeKind::State) | None if node.is_state() => "state",
            Some(NodeKind::Alpha) => "alpha-node",
            Some(NodeKind::Beta) => "beta-node",
            Some(NodeKind::Special) => "special node",
            _ => "unexpanded",
        };
        let gamma: Vec<String> = node
            .gamma
            .iter()
            .map(|f| match node.ann.get(&f) {
                Some(&g) => format!("{} ⤳ {}", render(table.formula(f)), render(table.formula(g))),
                None => render(table.formula(f)),
            })
            .collect();
        let parent = match (node.pst, &node.ppr) {
            (Some(s), Some(l)) => format!("{s}, {}", render_program(&Program::literal(l.clone()))),
            _ => "⊥, ⊥".into(),
        };
        let idx = node.idx.map_or("-".into(), |i| i.to_string());
        let color = match node.sts {
            Status::Closed(_) => "red",
            Status::Open(..) => "darkgreen",
            _ => "gray",
        };
        let label = format!(
            "({x}) {kind}\n{{{}}}\n{parent}   {idx}\n{}",
            gamma.join(", "),
            status_text(tableau, &node.sts)
        );
        writeln!(out, "  n{} [label=\"{}\", color={color}];", x.number(), escape(&label)).unwrap();
    }
    for x in graph.ids() {
        for (label, y) in &graph.node(x).children {
            let text = match label {
                EdgeLabel::ByFormula(f) => render(table.formula(*f)),
                EdgeLabel::ByAltSet(set) => set_text(tableau, set),
                EdgeLabel::Cs => "cs".into(),
                EdgeLabel::Plain => String::new(),
            };
            let style = if *label == EdgeLabel::Cs { ", style=dashed" } else { "" };
            writeln!(out, "  n{} -> n{} [label=\"{}\"{style}];", x.number(), y.number(), escape(&text)).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

/// One line per recorded rule application.
pub fn trace_text(solver: &Solver) -> String {
    let mut out = String::new();
    for (step, event) in solver.trace().iter().enumerate() {
        let tableau = solver.tableau();
        write!(out, "{:>4}  {}", step + 1, event.rule).unwrap();
        if let Some(idx) = event.idx {
            write!(out, "  idx={idx}").unwrap();
        }
        write!(out, "  {}", status_text(tableau, &event.status)).unwrap();
        if !event.created.is_empty() {
            let created: Vec<String> = event.created.iter().map(|y| y.to_string()).collect();
            write!(out, "  created {}", created.join(",")).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    #[test]
    fn stats_json_has_exact_fields() {
        let report = solve(&parse_formula("p & ~p").unwrap(), SolverConfig::default(), false).unwrap();
        let json: serde_json::Value = serde_json::from_str(&export_stats(&report.stats)).unwrap();
        let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = vec![
            "verdict", "nodes_total", "states", "alpha_nodes", "beta_nodes", "special_nodes", "closed", "open",
            "rule1", "rule2", "rule3", "rule4", "prs_cache_hits", "time_ms",
        ];
        let mut keys = keys;
        keys.sort();
        expected.sort();
        assert_eq!(keys, expected);
        assert_eq!(json["verdict"], "UNSAT");
        assert_eq!(json["rule4"], 0);
        assert!(report.stats.nodes_total <= 4);
    }

    #[test]
    fn toy_dot_has_labels() {
        let phi = parse_formula("<a*>[a^]p").unwrap();
        let root = parse_formula("<a><a*>[a^]p").unwrap();
        let solver = Solver::rooted_at_state(&[phi, root], SolverConfig::default());
        let report = run(solver, true).unwrap();
        assert!(report.stats.rule1 >= 11);
        let dot = export_dot(report.solver.tableau());
        assert_eq!(dot.matches("[label=\"(").count(), 11);
        assert!(dot.contains("n1 -> n2 [label=\"<a><a*>[a^]p\"]"));
        assert!(dot.contains("n4 -> n6 [label=\"{p}\"]"));
        assert!(dot.contains("n4 -> n1 [label=\"cs\", style=dashed]"));
        assert!(dot.contains("<a*>[a^]p ⤳ [a^]p"));
    }
}
