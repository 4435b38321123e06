use std::collections::HashSet;

use super::engine::Tableau;
use super::graph::{AltSets, EdgeLabel, NodeId, PrsEntry, Status};
use super::scheduler::Rule;

/// Checks the structural invariants of the graph after each rule
/// application, comparing against what it saw at the previous step.
#[derive(Default)]
pub struct InvariantChecker {
    violations: Vec<String>,
    idx_seen: Vec<Option<u32>>,
    closed_seen: Vec<Option<AltSets>>,
    max_idx: u32,
    steps: u64,
}

impl InvariantChecker {
    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn fail(&mut self, context: &str, message: String) {
        self.violations.push(format!("{context}: {message}"));
    }

    pub fn check_step(&mut self, tableau: &Tableau, rule: Rule, root: NodeId, dummy_root: bool) {
        self.steps += 1;
        let context = format!("after {rule}");
        for message in structural_violations(tableau, root, dummy_root) {
            self.fail(&context, message);
        }
        let graph = tableau.graph();
        self.idx_seen.resize(graph.len(), None);
        self.closed_seen.resize(graph.len(), None);
        let mut fresh = Vec::new();
        for x in graph.ids() {
            let node = graph.node(x);
            match (self.idx_seen[x.index()], node.idx) {
                (Some(old), new) if new != Some(old) => {
                    self.fail(&context, format!("time stamp of {x} changed from {old} to {new:?}"))
                }
                (None, Some(new)) => fresh.push((x, new)),
                _ => {}
            }
            if let Some(alt) = &self.closed_seen[x.index()] {
                if node.sts != Status::Closed(alt.clone()) {
                    self.fail(&context, format!("closed node {x} changed status"));
                }
            }
        }
        for (x, new) in fresh {
            if new <= self.max_idx {
                self.fail(&context, format!("time stamp {new} of {x} is not increasing"));
            }
            self.max_idx = self.max_idx.max(new);
            self.idx_seen[x.index()] = Some(new);
        }
        for x in graph.ids() {
            if let Status::Closed(alt) = &graph.node(x).sts {
                self.closed_seen[x.index()].get_or_insert_with(|| alt.clone());
            }
        }
    }

    /// At quiescence every node is defined and up to date, open states have
    /// only open children and open non-states have an open child.
    pub fn check_quiescent(&mut self, tableau: &mut Tableau, root: NodeId, dummy_root: bool) {
        let context = "at quiescence";
        for message in structural_violations(tableau, root, dummy_root) {
            self.fail(context, message);
        }
        let ids: Vec<NodeId> = tableau.graph().ids().collect();
        for x in ids {
            let node = tableau.graph().node(x);
            if !node.sts.is_defined() {
                self.fail(context, format!("node {x} is not defined"));
                continue;
            }
            if !node.sts.is_open() {
                continue;
            }
            let is_state = node.is_state();
            let stored = node.sts.clone();
            match tableau.det_status(x) {
                Ok(status) if status != stored => self.fail(context, format!("node {x} is not up to date")),
                Err(e) => self.fail(context, format!("node {x}: {e}")),
                _ => {}
            }
            if !tableau.take_created().is_empty() {
                self.fail(context, format!("special node {x} lacks an alternative child"));
            }
            let graph = tableau.graph();
            let mut children = graph.children(x).map(|y| &graph.node(y).sts);
            if is_state {
                if !children.all(Status::is_open) {
                    self.fail(context, format!("open state {x} has a child that is not open"));
                }
            } else if !children.any(Status::is_open) {
                self.fail(context, format!("open node {x} has no open child"));
            }
        }
    }
}

/// Invariants that must hold at every moment.
pub fn structural_violations(tableau: &Tableau, root: NodeId, dummy_root: bool) -> Vec<String> {
    let mut out = Vec::new();
    let table = tableau.table();
    let graph = tableau.graph();
    let mut gammas = HashSet::new();
    let mut stamps = HashSet::new();
    for x in graph.ids() {
        let node = graph.node(x);
        if node.gamma.iter().any(|f| f.index() >= table.len()) {
            out.push(format!("label of {x} leaves the closure"));
        }
        if node.is_state() && !gammas.insert(node.gamma.clone()) {
            out.push(format!("state {x} duplicates the label of another state"));
        }
        if let Some(i) = node.idx {
            if !stamps.insert(i) {
                out.push(format!("time stamp {i} of {x} is shared"));
            }
            if !node.sts.is_defined() {
                out.push(format!("undefined node {x} has a time stamp"));
            }
        } else if node.sts.is_defined() {
            out.push(format!("defined node {x} has no time stamp"));
        }
        if let Some(pst) = node.pst {
            if node.ppr.is_none() {
                out.push(format!("non-state {x} has no parent program"));
            }
            for &p in &node.parents {
                let parent = graph.node(p);
                let inherited = parent.pst == Some(pst) && parent.ppr == node.ppr;
                if !(p == pst && parent.is_state() || inherited) {
                    out.push(format!("non-state {x} is reached from {p}, outside the subtree of {pst}"));
                }
            }
        }
        for (label, y) in &node.children {
            let child = graph.node(*y);
            if node.is_state() || child.is_state() || *label == EdgeLabel::Cs {
                continue;
            }
            let grows = node.gamma.is_subset(&child.gamma) && node.gamma != child.gamma;
            let annotates = node.gamma == child.gamma
                && node.ann.len() < child.ann.len()
                && node.ann.iter().all(|(f, g)| child.ann.get(f) == Some(g));
            if !grows && !annotates {
                out.push(format!("child {y} of {x} neither grows the label nor the annotation"));
            }
        }
        if let Some(alt) = node.sts.alt() {
            if alt.iter().any(|set| set.is_empty()) {
                out.push(format!("node {x} has an empty alternative set"));
            }
        }
        let Status::Open(prs, _) = &node.sts else { continue };
        for (&phi, entry) in prs {
            if !node.gamma.contains(phi) || !table.is_eventuality(phi) {
                out.push(format!("prs of {x} has a key outside its eventualities"));
            }
            let PrsEntry::Rescuers(pairs) = entry else { continue };
            for &(y, psi) in pairs {
                if y == x {
                    out.push(format!("prs of {x} keeps a self pair"));
                }
                if !graph.defined_before(x, y) {
                    out.push(format!("prs of {x} names {y}, which was defined earlier"));
                }
                let target = graph.node(y);
                if !target.gamma.contains(psi) {
                    out.push(format!("prs of {x} names a formula missing at {y}"));
                }
                if target.is_state() && !table.is_literal_diamond(psi) {
                    out.push(format!("prs of {x} names a state {y} without a diamond"));
                }
            }
        }
    }
    if dummy_root {
        if let Some(alt) = graph.node(root).sts.alt() {
            if !alt.is_empty() {
                out.push("the root has alternative sets".to_string());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::syntax::parse_formula;
    use crate::tableau::graph::PrsMap;
    use crate::tableau::table::FormulaTable;

    fn toy() -> (Tableau, NodeId) {
        let formulas = [parse_formula("<a*>[a^]p").unwrap(), parse_formula("<a><a*>[a^]p").unwrap()];
        let table = FormulaTable::new(&formulas);
        let gamma = table.set_of(&formulas);
        let mut tableau = Tableau::new(table);
        let root = tableau.graph_mut().create_new_node(gamma, BTreeMap::new(), None, None, Status::Unexp);
        let created = tableau.expand(root).unwrap();
        tableau.expand(created[0]).unwrap();
        (tableau, root)
    }

    #[test]
    fn expanded_toy_is_clean() {
        let (tableau, root) = toy();
        assert_eq!(structural_violations(&tableau, root, false), Vec::<String>::new());
    }

    #[test]
    fn flags_a_child_that_does_not_grow() {
        let (mut tableau, root) = toy();
        let x = tableau.graph().children(root).next().unwrap();
        let node = tableau.graph().node(x).clone();
        let graph = tableau.graph_mut();
        let y = graph.create_new_node(node.gamma, node.ann, node.pst, node.ppr, Status::Unexp);
        graph.add_edge(x, y, EdgeLabel::Plain).unwrap();
        let found = structural_violations(&tableau, root, false);
        assert!(found.iter().any(|m| m.contains("neither grows")), "{found:?}");
    }

    #[test]
    fn flags_a_self_rescuer() {
        let (mut tableau, root) = toy();
        let phi = tableau.table().eventualities().iter().next().unwrap();
        let x = tableau.graph().children(root).next().unwrap();
        let pair = PrsEntry::Rescuers(BTreeSet::from([(x, phi)]));
        let status = Status::Open(PrsMap::from([(phi, pair)]), AltSets::new());
        tableau.graph_mut().set_status(x, status).unwrap();
        let found = structural_violations(&tableau, root, false);
        assert!(found.iter().any(|m| m.contains("self pair")), "{found:?}");
    }
}
