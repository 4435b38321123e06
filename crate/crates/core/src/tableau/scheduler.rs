use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use super::engine::{EngineError, Tableau};
use super::graph::{NodeId, NodeKind, PrsEntry, Status};
use super::invariants::InvariantChecker;
use super::table::FormulaTable;
use crate::formula::{AtomicProgram, Formula, LiteralProgram, Program};

/// How Rule 3 applicability is decided.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Only nodes that consulted a changed node are rechecked.
    #[default]
    Queue,
    /// Every open node is recomputed before each step.
    Naive,
}

#[derive(Clone, Debug, Default)]
pub struct SolverConfig {
    pub mode: Mode,
    pub max_nodes: Option<usize>,
    pub timeout: Option<Duration>,
    /// Check the structural invariants after every rule application.
    pub check_invariants: bool,
    /// Record a [`TraceEvent`] per rule application.
    pub trace: bool,
    /// Turn off the per-invocation memo of rescuer propagation.
    pub no_memo: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Expand(NodeId),
    Define(NodeId),
    Update(NodeId),
    CloseUnfulfilled(NodeId),
}

impl Rule {
    pub fn node(self) -> NodeId {
        match self {
            Rule::Expand(x) | Rule::Define(x) | Rule::Update(x) | Rule::CloseUnfulfilled(x) => x,
        }
    }

    /// Number in the rule table, 1 to 4.
    pub fn number(self) -> u8 {
        match self {
            Rule::Expand(_) => 1,
            Rule::Define(_) => 2,
            Rule::Update(_) => 3,
            Rule::CloseUnfulfilled(_) => 4,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rule::Expand(_) => "expand",
            Rule::Define(_) => "define",
            Rule::Update(_) => "update",
            Rule::CloseUnfulfilled(_) => "close-unfulfilled",
        };
        write!(f, "rule {} {name} ({})", self.number(), self.node())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resource {
    Nodes,
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Sat,
    Unsat,
    Resource(Resource),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RuleCounts {
    pub expand: u64,
    pub define: u64,
    pub update: u64,
    pub close_unfulfilled: u64,
}

#[derive(Clone, Debug)]
pub struct TraceEvent {
    pub rule: Rule,
    /// Status of the rule's node afterwards.
    pub status: Status,
    pub idx: Option<u32>,
    pub created: Vec<NodeId>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("rule {0} is not applicable")]
    NotApplicable(Rule),
}

/// Drives the four rules to quiescence.
pub struct Solver {
    tableau: Tableau,
    root: NodeId,
    inputs: Vec<Formula>,
    dummy_root: bool,
    config: SolverConfig,
    stack: Vec<(NodeId, usize)>,
    dirty: VecDeque<NodeId>,
    queued: BTreeSet<NodeId>,
    unfulfilled: BTreeSet<NodeId>,
    /// A Rule 3 check already computed, with the nodes it created.
    pending: Option<(Rule, Status, Vec<NodeId>)>,
    counts: RuleCounts,
    trace: Vec<TraceEvent>,
    checker: Option<InvariantChecker>,
    started: Instant,
}

impl Solver {
    /// Root `{⟨d⟩φ}` for a program `d` that cannot occur in `φ`, which makes
    /// the root a state.
    pub fn new(phi: &Formula, config: SolverConfig) -> Self {
        let dummy = Program::literal(LiteralProgram::forward(AtomicProgram::dummy()));
        let root = Formula::diamond(dummy, phi.clone());
        let mut solver = Solver::with_root(std::slice::from_ref(&root), config);
        solver.dummy_root = true;
        solver.inputs = vec![phi.clone()];
        solver
    }

    /// Roots the tableau at a state labelled with exactly `formulas`.
    pub fn rooted_at_state(formulas: &[Formula], config: SolverConfig) -> Self {
        Solver::with_root(formulas, config)
    }

    fn with_root(formulas: &[Formula], config: SolverConfig) -> Self {
        let table = FormulaTable::new(formulas);
        let gamma = table.set_of(formulas);
        let mut tableau = Tableau::new(table);
        tableau.set_memoize(!config.no_memo);
        let root = tableau
            .graph_mut()
            .create_new_node(gamma, BTreeMap::new(), None, None, Status::Unexp);
        let checker = config.check_invariants.then(InvariantChecker::default);
        Solver {
            tableau,
            root,
            inputs: formulas.to_vec(),
            dummy_root: false,
            config,
            stack: Vec::new(),
            dirty: VecDeque::new(),
            queued: BTreeSet::new(),
            unfulfilled: BTreeSet::new(),
            pending: None,
            counts: RuleCounts::default(),
            trace: Vec::new(),
            checker,
            started: Instant::now(),
        }
    }

    pub fn tableau(&self) -> &Tableau {
        &self.tableau
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// The formulas the solver was asked about; their conjunction is
    /// satisfiable iff the outcome is [`Outcome::Sat`].
    pub fn inputs(&self) -> &[Formula] {
        &self.inputs
    }

    /// True when the root carries the dummy program rather than the input.
    pub fn has_dummy_root(&self) -> bool {
        self.dummy_root
    }

    pub fn counts(&self) -> RuleCounts {
        self.counts
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    /// Invariant violations seen so far; empty unless checking is enabled.
    pub fn violations(&self) -> &[String] {
        self.checker.as_ref().map_or(&[], |c| c.violations())
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    /// Runs to quiescence or until a budget runs out.
    pub fn solve(&mut self) -> Result<Outcome, SolverError> {
        self.started = Instant::now();
        loop {
            if let Some(limit) = self.exhausted() {
                return Ok(Outcome::Resource(limit));
            }
            match self.applicable_rule()? {
                Some(rule) => self.apply_rule(rule)?,
                None => break,
            }
        }
        if let Some(checker) = self.checker.as_mut() {
            checker.check_quiescent(&mut self.tableau, self.root, self.dummy_root);
        }
        Ok(match self.tableau.graph().node(self.root).sts {
            Status::Open(..) => Outcome::Sat,
            _ => Outcome::Unsat,
        })
    }

    fn exhausted(&self) -> Option<Resource> {
        if self.config.max_nodes.is_some_and(|max| self.tableau.graph().len() > max) {
            return Some(Resource::Nodes);
        }
        if self.config.timeout.is_some_and(|t| self.started.elapsed() > t) {
            return Some(Resource::Time);
        }
        None
    }

    /// Picks the next rule: pending updates first, then closing an
    /// unfulfilled node, then one depth-first expansion step.
    pub fn applicable_rule(&mut self) -> Result<Option<Rule>, SolverError> {
        if let Some((rule, ..)) = &self.pending {
            return Ok(Some(*rule));
        }
        let update = match self.config.mode {
            Mode::Queue => self.next_queued_update()?,
            Mode::Naive => self.next_naive_update()?,
        };
        if let Some((x, status, created)) = update {
            self.pending = Some((Rule::Update(x), status, created));
            return Ok(Some(Rule::Update(x)));
        }
        if let Some(x) = self.next_unfulfilled() {
            return Ok(Some(Rule::CloseUnfulfilled(x)));
        }
        Ok(self.next_dfs_rule())
    }

    fn next_queued_update(&mut self) -> Result<Option<(NodeId, Status, Vec<NodeId>)>, SolverError> {
        while let Some(x) = self.dirty.pop_front() {
            self.queued.remove(&x);
            if let Some((status, created)) = self.stale_status(x)? {
                return Ok(Some((x, status, created)));
            }
        }
        Ok(None)
    }

    fn next_naive_update(&mut self) -> Result<Option<(NodeId, Status, Vec<NodeId>)>, SolverError> {
        self.dirty.clear();
        self.queued.clear();
        let ids: Vec<NodeId> = self.tableau.graph().ids().collect();
        for x in ids {
            if let Some((status, created)) = self.stale_status(x)? {
                return Ok(Some((x, status, created)));
            }
        }
        Ok(None)
    }

    /// Recomputes an open node. Children created on the way are kept.
    fn stale_status(&mut self, x: NodeId) -> Result<Option<(Status, Vec<NodeId>)>, SolverError> {
        if !self.tableau.graph().node(x).sts.is_open() {
            return Ok(None);
        }
        let status = self.tableau.det_status(x)?;
        let created = self.tableau.take_created();
        let stale = status != self.tableau.graph().node(x).sts;
        Ok(stale.then_some((status, created)))
    }

    fn has_unfulfilled(&self, x: NodeId) -> bool {
        let node = self.tableau.graph().node(x);
        match &node.sts {
            Status::Open(prs, _) => node
                .gamma
                .iter()
                .filter(|&phi| self.tableau.table().is_eventuality(phi))
                .any(|phi| prs.get(&phi).is_some_and(PrsEntry::is_empty_set)),
            _ => false,
        }
    }

    fn next_unfulfilled(&mut self) -> Option<NodeId> {
        while let Some(&x) = self.unfulfilled.first() {
            if self.has_unfulfilled(x) {
                return Some(x);
            }
            self.unfulfilled.remove(&x);
        }
        None
    }

    fn next_dfs_rule(&mut self) -> Option<Rule> {
        let graph = self.tableau.graph();
        if let Some(&mut (x, ref mut next)) = self.stack.last_mut() {
            let node = graph.node(x);
            if matches!(node.kind, Some(NodeKind::Alpha | NodeKind::Beta))
                && graph.children(x).any(|y| graph.node(y).sts.fulfils_all())
            {
                return Some(Rule::Define(x));
            }
            while let Some(&(_, y)) = node.children.get(*next) {
                if graph.node(y).sts == Status::Unexp {
                    return Some(Rule::Expand(y));
                }
                *next += 1;
            }
            return Some(Rule::Define(x));
        }
        let unexpanded = graph.ids().rev().find(|&x| graph.node(x).sts == Status::Unexp);
        if let Some(x) = unexpanded {
            return Some(Rule::Expand(x));
        }
        graph
            .ids()
            .rev()
            .find(|&x| graph.node(x).sts == Status::Undef)
            .map(Rule::Define)
    }

    pub fn apply_rule(&mut self, rule: Rule) -> Result<(), SolverError> {
        let pending = self.pending.take().filter(|(r, ..)| *r == rule);
        let x = rule.node();
        let before = self.tableau.graph().node(x).sts.clone();
        let mut created = Vec::new();
        match rule {
            Rule::Expand(_) => {
                if before != Status::Unexp {
                    return Err(SolverError::NotApplicable(rule));
                }
                created = self.tableau.expand(x)?;
                self.counts.expand += 1;
                if !self.tableau.graph().node(x).sts.is_closed() {
                    self.stack.push((x, 0));
                }
            }
            Rule::Define(_) => {
                if before != Status::Undef {
                    return Err(SolverError::NotApplicable(rule));
                }
                let status = self.tableau.det_status(x)?;
                created = self.tableau.take_created();
                self.tableau.graph_mut().set_status(x, status).map_err(EngineError::from)?;
                self.counts.define += 1;
                if let Some(pos) = self.stack.iter().rposition(|&(y, _)| y == x) {
                    self.stack.truncate(pos);
                }
            }
            Rule::Update(_) => {
                let status = match pending {
                    Some((_, status, made)) => {
                        created = made;
                        status
                    }
                    None => {
                        if !before.is_open() {
                            return Err(SolverError::NotApplicable(rule));
                        }
                        let status = self.tableau.det_status(x)?;
                        created = self.tableau.take_created();
                        status
                    }
                };
                if status == before {
                    return Err(SolverError::NotApplicable(rule));
                }
                self.tableau.graph_mut().set_status(x, status).map_err(EngineError::from)?;
                self.counts.update += 1;
            }
            Rule::CloseUnfulfilled(_) => {
                if !self.has_unfulfilled(x) {
                    return Err(SolverError::NotApplicable(rule));
                }
                let alt = before.alt().cloned().unwrap_or_default();
                self.tableau
                    .graph_mut()
                    .set_status(x, Status::Closed(alt))
                    .map_err(EngineError::from)?;
                self.counts.close_unfulfilled += 1;
            }
        }
        let after = self.tableau.graph().node(x).sts.clone();
        // Unexp to Undef changes nothing a parent can observe; Unexp to
        // Closed does.
        if (after != before && before != Status::Unexp) || after.is_closed() {
            self.mark_dirty_on_change(x);
        }
        if self.has_unfulfilled(x) {
            self.unfulfilled.insert(x);
        }
        if let Some(checker) = self.checker.as_mut() {
            checker.check_step(&self.tableau, rule, self.root, self.dummy_root);
        }
        if self.config.trace {
            self.trace.push(TraceEvent {
                rule,
                idx: self.tableau.graph().node(x).idx,
                status: after,
                created,
            });
        }
        Ok(())
    }

    /// Queues the open parents of `x` and the open nodes whose last status
    /// computation consulted `x`.
    pub fn mark_dirty_on_change(&mut self, x: NodeId) {
        let graph = self.tableau.graph();
        let node = graph.node(x);
        let targets: Vec<NodeId> = node
            .parents
            .iter()
            .chain(node.watchers.iter())
            .copied()
            .filter(|&y| y != x && graph.node(y).sts.is_open())
            .collect();
        for y in targets {
            if self.queued.insert(y) {
                self.dirty.push_back(y);
            }
        }
    }
}

/// Decides satisfiability of an NNF formula with the default configuration.
pub fn is_sat(phi: &Formula) -> bool {
    let mut solver = Solver::new(phi, SolverConfig::default());
    matches!(solver.solve(), Ok(Outcome::Sat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;
    use crate::tableau::graph::{AltSets, PrsMap};

    fn n(k: usize) -> NodeId {
        NodeId::from_number(k)
    }

    fn toy(mode: Mode) -> Solver {
        let phi = parse_formula("<a*>[a^]p").unwrap();
        let root = parse_formula("<a><a*>[a^]p").unwrap();
        let config = SolverConfig { mode, trace: true, check_invariants: true, ..SolverConfig::default() };
        Solver::rooted_at_state(&[phi, root], config)
    }

    #[test]
    fn toy_trace_time_stamps() {
        for mode in [Mode::Queue, Mode::Naive] {
            let mut solver = toy(mode);
            assert_eq!(solver.solve().unwrap(), Outcome::Sat);
            let graph = solver.tableau().graph();
            assert_eq!(graph.len(), 11);
            let stamps: Vec<(usize, u32)> = [5, 3, 4, 2, 1, 9, 8, 7, 6, 10, 11]
                .iter()
                .map(|&k| (k, graph.node(n(k)).idx.unwrap()))
                .collect();
            let expected: Vec<(usize, u32)> =
                [5, 3, 4, 2, 1, 9, 8, 7, 6, 10, 11].iter().zip(1..).map(|(&k, i)| (k, i)).collect();
            assert_eq!(stamps, expected, "{mode:?}");
            assert_eq!(solver.counts().update, 3, "{mode:?}");
            assert_eq!(solver.counts().close_unfulfilled, 0);
            assert!(solver.violations().is_empty(), "{:?}", solver.violations());
        }
    }

    #[test]
    fn toy_trace_statuses() {
        let mut solver = toy(Mode::Queue);
        solver.solve().unwrap();
        let table = solver.tableau().table();
        let diamond = table.id(&parse_formula("<a><a*>[a^]p").unwrap()).unwrap();
        let p = table.set_of([&parse_formula("p").unwrap()]);
        let alt_p = AltSets::from([p]);
        let rescuers = |nodes: &[usize]| -> PrsEntry {
            PrsEntry::Rescuers(nodes.iter().map(|&k| (n(k), diamond)).collect())
        };
        let statuses: Vec<(Rule, Status)> = solver.trace().iter().map(|e| (e.rule, e.status.clone())).collect();
        let of = |rule: Rule| -> Vec<Status> {
            statuses.iter().filter(|(r, _)| *r == rule).map(|(_, s)| s.clone()).collect()
        };
        assert_eq!(of(Rule::Define(n(3))), vec![Status::Closed(alt_p.clone())]);
        let four: Vec<Status> = [of(Rule::Define(n(4))), of(Rule::Update(n(4)))].concat();
        assert_eq!(four.len(), 2);
        for (status, nodes) in four.iter().zip([&[1][..], &[1, 6][..]]) {
            let prs = status.prs().unwrap();
            assert!(!prs.is_empty());
            assert!(prs.values().all(|e| *e == rescuers(nodes)), "{status:?}");
            assert_eq!(status.alt(), Some(&AltSets::new()));
        }
        let one: Vec<Status> = [of(Rule::Define(n(1))), of(Rule::Update(n(1)))].concat();
        assert_eq!(
            one,
            vec![
                Status::Open(PrsMap::from([(diamond, rescuers(&[]))]), alt_p.clone()),
                Status::Open(PrsMap::from([(diamond, rescuers(&[6]))]), alt_p.clone()),
            ]
        );
        let graph = solver.tableau().graph();
        for k in [9, 10, 11] {
            assert!(graph.node(n(k)).sts.fulfils_all(), "node {k}");
        }
        let updates: Vec<Rule> = statuses.iter().map(|(r, _)| *r).filter(|r| r.number() == 3).collect();
        assert_eq!(updates, vec![Rule::Update(n(4)), Rule::Update(n(2)), Rule::Update(n(1))]);
    }

    #[test]
    fn immediate_contradiction() {
        let f = parse_formula("p & ~p").unwrap();
        assert!(!is_sat(&f));
        assert!(is_sat(&parse_formula("<a>[a^]p & p").unwrap()));
    }
}
