use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::graph::{AltSets, EdgeLabel, Graph, GraphError, NodeId, NodeKind, PrsEntry, PrsMap, Status};
use super::table::{FormulaId, FormulaSet, FormulaTable, Shape};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("node {0} was expanded twice")]
    AlreadyExpanded(NodeId),
    #[error("node {0} has no status to determine")]
    NotDeterminable(NodeId),
    #[error("special node {0} has no cs-child")]
    MissingCsChild(NodeId),
    #[error("special node {0} contains an at-a-world cycle")]
    AtWorldCycle(NodeId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// What `expand` decided to do with a saturated-or-not non-state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Alpha(FormulaId),
    Beta(FormulaId),
    Special,
}

/// The tableau under construction together with the bookkeeping of the
/// status procedures.
pub struct Tableau {
    table: FormulaTable,
    graph: Graph,
    cache: HashMap<(NodeId, FormulaId), PrsEntry>,
    consulted: BTreeSet<NodeId>,
    created: Vec<NodeId>,
    memoize: bool,
    invocations: u64,
    cache_hits: u64,
}

impl Tableau {
    pub fn new(table: FormulaTable) -> Self {
        Tableau {
            table,
            graph: Graph::new(),
            cache: HashMap::new(),
            consulted: BTreeSet::new(),
            created: Vec::new(),
            memoize: true,
            invocations: 0,
            cache_hits: 0,
        }
    }

    pub fn table(&self) -> &FormulaTable {
        &self.table
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub(crate) fn graph_mut(&mut self) -> &mut Graph {
        &mut self.graph
    }

    /// Disables the per-invocation memo of `det_prs_child`. Results must
    /// not change; only the amount of work does.
    pub fn set_memoize(&mut self, on: bool) {
        self.memoize = on;
    }

    pub fn prs_cache_hits(&self) -> u64 {
        self.cache_hits
    }

    pub fn invocations(&self) -> u64 {
        self.invocations
    }

    /// Nodes created since the last call.
    pub(crate) fn take_created(&mut self) -> Vec<NodeId> {
        std::mem::take(&mut self.created)
    }

    fn create(
        &mut self,
        parent: NodeId,
        label: EdgeLabel,
        gamma: FormulaSet,
        ann: BTreeMap<FormulaId, FormulaId>,
    ) -> Result<NodeId, EngineError> {
        let node = self.graph.node(parent);
        let (pst, ppr) = (node.pst, node.ppr.clone());
        let y = self.graph.create_new_node(gamma, ann, pst, ppr, Status::Unexp);
        self.graph.add_edge(parent, y, label)?;
        self.created.push(y);
        Ok(y)
    }

    /// Follows the annotation chain of `x` from `phi`; `None` on a cycle.
    pub fn defer(&self, x: NodeId, phi: FormulaId) -> Option<FormulaId> {
        let ann = &self.graph.node(x).ann;
        let mut current = phi;
        let mut seen = BTreeSet::new();
        loop {
            if !self.table.is_eventuality(current) {
                return Some(current);
            }
            match ann.get(&current) {
                None => return Some(current),
                Some(&next) => {
                    if !seen.insert(current) {
                        return None;
                    }
                    current = next;
                }
            }
        }
    }

    pub fn contains_contradiction(&self, x: NodeId) -> bool {
        let gamma = &self.graph.node(x).gamma;
        gamma.iter().any(|phi| {
            self.table.negation(phi).is_some_and(|neg| gamma.contains(neg))
                || (self.table.is_eventuality(phi) && self.defer(x, phi).is_none())
        })
    }

    fn saturation_step(&self, x: NodeId) -> Step {
        let node = self.graph.node(x);
        let unannotated = |f: FormulaId| self.table.is_eventuality(f) && !node.ann.contains_key(&f);
        for f in node.gamma.iter() {
            if let Shape::Alpha(parts) = self.table.shape(f) {
                if parts.iter().any(|p| !node.gamma.contains(*p)) || unannotated(f) {
                    return Step::Alpha(f);
                }
            }
        }
        for f in node.gamma.iter() {
            if let Shape::Beta(b1, b2) = self.table.shape(f) {
                if (!node.gamma.contains(*b1) && !node.gamma.contains(*b2)) || unannotated(f) {
                    return Step::Beta(f);
                }
            }
        }
        Step::Special
    }

    /// The kind of an expanded node. Contradictory non-states are classified
    /// as well so that statistics cover every node.
    fn node_kind(&self, x: NodeId) -> NodeKind {
        if self.graph.node(x).is_state() {
            return NodeKind::State;
        }
        match self.saturation_step(x) {
            Step::Alpha(_) => NodeKind::Alpha,
            Step::Beta(_) => NodeKind::Beta,
            Step::Special => NodeKind::Special,
        }
    }

    /// Rule 1. Returns the nodes created.
    pub fn expand(&mut self, x: NodeId) -> Result<Vec<NodeId>, EngineError> {
        if self.graph.node(x).sts != Status::Unexp {
            return Err(EngineError::AlreadyExpanded(x));
        }
        let kind = self.node_kind(x);
        self.graph.node_mut(x).kind = Some(kind);
        if self.contains_contradiction(x) {
            self.graph.set_status(x, Status::Closed(AltSets::new()))?;
            return Ok(Vec::new());
        }
        self.graph.set_status(x, Status::Undef)?;
        let node = self.graph.node(x);
        let gamma = node.gamma.clone();
        let ann = node.ann.clone();
        if node.is_state() {
            for f in gamma.iter() {
                let Shape::DiamondLit(l, body) = self.table.shape(f) else { continue };
                let mut child = self.table.empty_set();
                child.insert(*body);
                for g in gamma.iter() {
                    if let Shape::BoxLit(m, psi) = self.table.shape(g) {
                        if m == l {
                            child.insert(*psi);
                        }
                    }
                }
                let l = l.clone();
                let y = self.graph.create_new_node(child, BTreeMap::new(), Some(x), Some(l), Status::Unexp);
                self.graph.add_edge(x, y, EdgeLabel::ByFormula(f))?;
                self.created.push(y);
            }
            return Ok(self.take_created());
        }
        match self.saturation_step(x) {
            Step::Alpha(alpha) => {
                let Shape::Alpha(parts) = self.table.shape(alpha).clone() else { unreachable!() };
                let mut child = gamma;
                let mut child_ann = ann;
                for p in &parts {
                    child.insert(*p);
                }
                if self.table.is_eventuality(alpha) {
                    child_ann.insert(alpha, parts[0]);
                }
                self.create(x, EdgeLabel::Plain, child, child_ann)?;
            }
            Step::Beta(beta) => {
                let Shape::Beta(b1, b2) = *self.table.shape(beta) else { unreachable!() };
                for b in [b1, b2] {
                    let mut child = gamma.clone();
                    let mut child_ann = ann.clone();
                    child.insert(b);
                    if self.table.is_eventuality(beta) {
                        child_ann.insert(beta, b);
                    }
                    self.create(x, EdgeLabel::Plain, child, child_ann)?;
                }
            }
            Step::Special => match self.graph.find_state(&gamma) {
                Some(y) => self.graph.add_edge(x, y, EdgeLabel::Cs)?,
                None => {
                    let y = self.graph.create_new_node(gamma, BTreeMap::new(), None, None, Status::Unexp);
                    self.graph.add_edge(x, y, EdgeLabel::Cs)?;
                    self.created.push(y);
                }
            },
        }
        Ok(self.take_created())
    }

    /// Computes the current status of an expanded, not closed node. Special
    /// nodes may gain alternative children as a side effect; every node
    /// whose status was read is recorded as watched by `x`.
    pub fn det_status(&mut self, x: NodeId) -> Result<Status, EngineError> {
        let node = self.graph.node(x);
        if matches!(node.sts, Status::Unexp | Status::Closed(_)) {
            return Err(EngineError::NotDeterminable(x));
        }
        self.invocations += 1;
        self.cache.clear();
        self.consulted.clear();
        let status = match node.kind {
            Some(NodeKind::Alpha | NodeKind::Beta) => self.det_sts_beta(x),
            Some(NodeKind::State) => self.det_sts_state(x),
            Some(NodeKind::Special) => {
                let alt = self.incompatibility(x);
                if alt.is_empty() {
                    self.det_sts_spl(x)?
                } else {
                    Status::Closed(AltSets::from([alt]))
                }
            }
            None => return Err(EngineError::NotDeterminable(x)),
        };
        for y in std::mem::take(&mut self.consulted) {
            self.graph.node_mut(y).watchers.insert(x);
        }
        Ok(status)
    }

    /// `Γ_alt`: bodies of `[ppr⁻]φ` missing from the parent state.
    pub fn incompatibility(&self, x: NodeId) -> FormulaSet {
        let node = self.graph.node(x);
        let mut alt = self.table.empty_set();
        let (Some(pst), Some(ppr)) = (node.pst, node.ppr.as_ref()) else { return alt };
        let back = ppr.invert();
        for f in node.gamma.iter() {
            if let Shape::BoxLit(l, body) = self.table.shape(f) {
                if *l == back {
                    alt.insert(*body);
                }
            }
        }
        alt.difference_with(&self.graph.node(pst).gamma);
        alt
    }

    fn read(&mut self, y: NodeId) -> &Status {
        self.consulted.insert(y);
        &self.graph.node(y).sts
    }

    fn child_alt(&mut self, ys: &[NodeId]) -> AltSets {
        let mut alt = AltSets::new();
        for &y in ys {
            if let Some(a) = self.read(y).alt() {
                alt.extend(a.iter().cloned());
            }
        }
        alt
    }

    fn combine(&mut self, x: NodeId, ys: &[NodeId], phi: FormulaId) -> PrsEntry {
        let mut union = BTreeSet::new();
        let mut fulfilled = false;
        for &y in ys {
            match self.det_prs_child(x, y, phi) {
                PrsEntry::Fulfilled => fulfilled = true,
                PrsEntry::Rescuers(set) => union.extend(set),
            }
        }
        if fulfilled {
            PrsEntry::Fulfilled
        } else {
            PrsEntry::Rescuers(union)
        }
    }

    pub fn det_sts_beta(&mut self, x: NodeId) -> Status {
        let children: Vec<NodeId> = self.graph.children(x).collect();
        let alt = self.child_alt(&children);
        if children.iter().all(|&y| self.read(y).is_closed()) {
            return Status::Closed(alt);
        }
        let evs = self.graph.node(x).gamma.intersection(self.table.eventualities());
        let mut prs = PrsMap::new();
        for phi in evs.iter() {
            let entry = self.combine(x, &children, phi);
            prs.insert(phi, entry);
        }
        Status::Open(self.filter_prs(x, &prs), alt)
    }

    pub fn det_sts_state(&mut self, x: NodeId) -> Status {
        let successors: Vec<(FormulaId, FormulaId, NodeId)> = self
            .graph
            .node(x)
            .gamma
            .iter()
            .filter_map(|f| match self.table.shape(f) {
                Shape::DiamondLit(_, body) => {
                    let y = self.graph.get_child(x, &EdgeLabel::ByFormula(f)).expect("state successor");
                    Some((f, *body, y))
                }
                _ => None,
            })
            .collect();
        for &(_, _, y) in &successors {
            if let Status::Closed(alt) = self.read(y) {
                return Status::Closed(alt.clone());
            }
        }
        let ys: Vec<NodeId> = successors.iter().map(|s| s.2).collect();
        let alt = self.child_alt(&ys);
        let mut prs = PrsMap::new();
        for &(f, body, y) in &successors {
            if self.table.is_eventuality(body) {
                let entry = self.det_prs_child(x, y, body);
                prs.insert(f, entry);
            }
        }
        Status::Open(self.filter_prs(x, &prs), alt)
    }

    pub fn det_sts_spl(&mut self, x: NodeId) -> Result<Status, EngineError> {
        let y0 = self.graph.get_child(x, &EdgeLabel::Cs).ok_or(EngineError::MissingCsChild(x))?;
        let wanted: Vec<FormulaSet> = self.read(y0).alt().map(|a| a.iter().cloned().collect()).unwrap_or_default();
        for set in wanted {
            let label = EdgeLabel::ByAltSet(set.clone());
            if self.graph.get_child(x, &label).is_none() {
                let node = self.graph.node(x);
                let mut gamma = node.gamma.clone();
                gamma.union_with(&set);
                let ann = node.ann.clone();
                self.create(x, label, gamma, ann)?;
            }
        }
        let others: Vec<NodeId> = self
            .graph
            .node(x)
            .children
            .iter()
            .filter(|(label, _)| *label != EdgeLabel::Cs)
            .map(|(_, y)| *y)
            .collect();
        let alt = self.child_alt(&others);
        let mut all = vec![y0];
        all.extend(&others);
        if all.iter().all(|&y| self.read(y).is_closed()) {
            return Ok(Status::Closed(alt));
        }
        let evs = self.graph.node(x).gamma.intersection(self.table.eventualities());
        let mut prs = PrsMap::new();
        for phi in evs.iter() {
            let deferred = self.defer(x, phi).ok_or(EngineError::AtWorldCycle(x))?;
            let entry = if self.table.is_eventuality(deferred) {
                self.combine(x, &all, deferred)
            } else {
                PrsEntry::Fulfilled
            };
            prs.insert(phi, entry);
        }
        Ok(Status::Open(self.filter_prs(x, &prs), alt))
    }

    /// Passes the rescuers of `phi` at child `y` up to `x`.
    pub fn det_prs_child(&mut self, x: NodeId, y: NodeId, phi: FormulaId) -> PrsEntry {
        self.consulted.insert(y);
        if self.memoize {
            if let Some(hit) = self.cache.get(&(y, phi)) {
                self.cache_hits += 1;
                return hit.clone();
            }
        }
        let result = match &self.graph.node(y).sts {
            Status::Closed(_) => PrsEntry::Rescuers(BTreeSet::new()),
            Status::Unexp | Status::Undef => PrsEntry::Rescuers(BTreeSet::from([(y, phi)])),
            Status::Open(..) if !self.graph.defined_before(y, x) => {
                PrsEntry::Rescuers(BTreeSet::from([(y, phi)]))
            }
            Status::Open(prs, _) => match prs.get(&phi) {
                None | Some(PrsEntry::Fulfilled) => PrsEntry::Fulfilled,
                Some(PrsEntry::Rescuers(pairs)) => {
                    let pairs: Vec<_> = pairs.iter().copied().collect();
                    let mut union = BTreeSet::new();
                    let mut fulfilled = false;
                    for (z, psi) in pairs {
                        match self.det_prs_child(x, z, psi) {
                            PrsEntry::Fulfilled => {
                                fulfilled = true;
                                break;
                            }
                            PrsEntry::Rescuers(set) => union.extend(set),
                        }
                    }
                    if fulfilled {
                        PrsEntry::Fulfilled
                    } else {
                        PrsEntry::Rescuers(union)
                    }
                }
            },
        };
        if self.memoize {
            self.cache.insert((y, phi), result.clone());
        }
        result
    }

    /// Eventualities reachable from `phi` through pairs at `x` itself.
    pub fn reach_set(prs: &PrsMap, x: NodeId, phi: FormulaId) -> BTreeSet<FormulaId> {
        let mut reached = BTreeSet::new();
        let mut pending = vec![phi];
        while let Some(chi) = pending.pop() {
            if let Some(PrsEntry::Rescuers(pairs)) = prs.get(&chi) {
                for &(z, psi) in pairs {
                    if z == x && reached.insert(psi) {
                        pending.push(psi);
                    }
                }
            }
        }
        reached
    }

    /// Resolves rescuer pairs that point back at `x`.
    pub fn filter_prs(&self, x: NodeId, prs: &PrsMap) -> PrsMap {
        filter_prs(x, prs)
    }
}

pub fn filter_prs(x: NodeId, prs: &PrsMap) -> PrsMap {
    let mut out = PrsMap::new();
    for (&phi, entry) in prs {
        if matches!(entry, PrsEntry::Fulfilled) {
            out.insert(phi, PrsEntry::Fulfilled);
            continue;
        }
        let mut delta = Tableau::reach_set(prs, x, phi);
        delta.insert(phi);
        let mut union = BTreeSet::new();
        let mut fulfilled = false;
        for chi in &delta {
            match prs.get(chi) {
                None | Some(PrsEntry::Fulfilled) => fulfilled = true,
                Some(PrsEntry::Rescuers(pairs)) => {
                    union.extend(pairs.iter().filter(|(z, _)| *z != x).copied())
                }
            }
        }
        let entry = if fulfilled {
            PrsEntry::Fulfilled
        } else {
            PrsEntry::Rescuers(union)
        };
        out.insert(phi, entry);
    }
    out
}
