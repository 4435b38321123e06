use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::table::{FormulaId, FormulaSet};
use crate::formula::LiteralProgram;

/// Dense node index. Nodes are numbered from 1 in creation order when
/// printed, which is the numbering used in traces and DOT output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// 1-based creation number.
    pub fn number(self) -> usize {
        self.0 as usize + 1
    }

    pub fn from_number(n: usize) -> Self {
        assert!(n > 0, "node numbers start at 1");
        NodeId((n - 1) as u32)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.number())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// One potential-rescuer entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrsEntry {
    /// The eventuality can currently be fulfilled.
    Fulfilled,
    Rescuers(BTreeSet<(NodeId, FormulaId)>),
}

impl PrsEntry {
    pub fn is_empty_set(&self) -> bool {
        matches!(self, PrsEntry::Rescuers(set) if set.is_empty())
    }
}

/// An absent key means no entry was computed for that eventuality, which
/// the procedures read like [`PrsEntry::Fulfilled`].
pub type PrsMap = BTreeMap<FormulaId, PrsEntry>;

pub type AltSets = BTreeSet<FormulaSet>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Unexp,
    Undef,
    Closed(AltSets),
    Open(PrsMap, AltSets),
}

impl Status {
    pub fn is_closed(&self) -> bool {
        matches!(self, Status::Closed(_))
    }

    pub fn is_open(&self) -> bool {
        matches!(self, Status::Open(..))
    }

    pub fn is_defined(&self) -> bool {
        self.is_closed() || self.is_open()
    }

    /// `alt_x`, read as empty for undefined nodes.
    pub fn alt(&self) -> Option<&AltSets> {
        match self {
            Status::Closed(alt) | Status::Open(_, alt) => Some(alt),
            _ => None,
        }
    }

    pub fn prs(&self) -> Option<&PrsMap> {
        match self {
            Status::Open(prs, _) => Some(prs),
            _ => None,
        }
    }

    /// True for an open status whose every entry is fulfilled.
    pub fn fulfils_all(&self) -> bool {
        match self {
            Status::Open(prs, _) => prs.values().all(|e| matches!(e, PrsEntry::Fulfilled)),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    /// State to successor, labelled with the `⟨l⟩φ` it realises.
    ByFormula(FormulaId),
    /// Special node to alternative child.
    ByAltSet(FormulaSet),
    /// Special node to its corresponding state.
    Cs,
    Plain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    State,
    Alpha,
    Beta,
    Special,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub gamma: FormulaSet,
    pub ann: BTreeMap<FormulaId, FormulaId>,
    pub pst: Option<NodeId>,
    pub ppr: Option<LiteralProgram>,
    pub idx: Option<u32>,
    pub sts: Status,
    /// Set when the node is expanded; states know it from creation.
    pub kind: Option<NodeKind>,
    pub children: Vec<(EdgeLabel, NodeId)>,
    pub parents: Vec<NodeId>,
    /// Nodes whose last status computation read this node's status.
    pub watchers: BTreeSet<NodeId>,
}

impl Node {
    pub fn is_state(&self) -> bool {
        self.pst.is_none()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {0} already has an edge labelled {1}")]
    DuplicateLabel(NodeId, String),
    #[error("node {0} is closed and cannot change status")]
    ClosedIsFinal(NodeId),
}

/// The and-or graph: an append-only arena plus the state index.
pub struct Graph {
    nodes: Vec<Node>,
    states: HashMap<FormulaSet, NodeId>,
    next_idx: u32,
}

impl Default for Graph {
    fn default() -> Self {
        Graph::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            states: HashMap::new(),
            next_idx: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, x: NodeId) -> &Node {
        &self.nodes[x.index()]
    }

    pub(crate) fn node_mut(&mut self, x: NodeId) -> &mut Node {
        &mut self.nodes[x.index()]
    }

    pub fn ids(&self) -> impl DoubleEndedIterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// The next time stamp to be handed out.
    pub fn next_idx(&self) -> u32 {
        self.next_idx
    }

    pub fn create_new_node(
        &mut self,
        gamma: FormulaSet,
        ann: BTreeMap<FormulaId, FormulaId>,
        pst: Option<NodeId>,
        ppr: Option<LiteralProgram>,
        sts: Status,
    ) -> NodeId {
        assert_eq!(pst.is_none(), ppr.is_none(), "pst and ppr are defined together");
        assert!(pst.is_some() || ann.is_empty(), "states carry no annotation");
        let id = NodeId(self.nodes.len() as u32);
        if pst.is_none() {
            let previous = self.states.insert(gamma.clone(), id);
            assert!(previous.is_none(), "a state with this set already exists");
        }
        self.nodes.push(Node {
            gamma,
            ann,
            kind: pst.is_none().then_some(NodeKind::State),
            pst,
            ppr,
            idx: None,
            sts,
            children: Vec::new(),
            parents: Vec::new(),
            watchers: BTreeSet::new(),
        });
        id
    }

    pub fn add_edge(&mut self, x: NodeId, y: NodeId, label: EdgeLabel) -> Result<(), GraphError> {
        if label != EdgeLabel::Plain && self.get_child(x, &label).is_some() {
            return Err(GraphError::DuplicateLabel(x, format!("{label:?}")));
        }
        self.nodes[x.index()].children.push((label, y));
        let parents = &mut self.nodes[y.index()].parents;
        if !parents.contains(&x) {
            parents.push(x);
        }
        Ok(())
    }

    pub fn get_child(&self, x: NodeId, label: &EdgeLabel) -> Option<NodeId> {
        let mut found = self.node(x).children.iter().filter(|(l, _)| l == label);
        match (found.next(), found.next()) {
            (Some((_, y)), None) => Some(*y),
            _ => None,
        }
    }

    pub fn children(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.node(x).children.iter().map(|(_, y)| *y)
    }

    pub fn parents(&self, x: NodeId) -> &[NodeId] {
        &self.node(x).parents
    }

    pub fn find_state(&self, gamma: &FormulaSet) -> Option<NodeId> {
        self.states.get(gamma).copied()
    }

    pub fn states(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids().filter(|&x| self.node(x).is_state())
    }

    /// Replaces the status. The first transition to a defined status hands
    /// out the next time stamp. Returns whether the status changed.
    pub fn set_status(&mut self, x: NodeId, sts: Status) -> Result<bool, GraphError> {
        let node = &mut self.nodes[x.index()];
        if node.sts.is_closed() {
            return Err(GraphError::ClosedIsFinal(x));
        }
        if sts.is_defined() && node.idx.is_none() {
            node.idx = Some(self.next_idx);
            self.next_idx += 1;
        }
        let changed = node.sts != sts;
        node.sts = sts;
        Ok(changed)
    }

    /// `y ⊏ x`: `y` became defined and `x` did not, or did so later.
    pub fn defined_before(&self, y: NodeId, x: NodeId) -> bool {
        match (self.node(y).idx, self.node(x).idx) {
            (Some(_), None) => true,
            (Some(iy), Some(ix)) => iy < ix,
            (None, _) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::AtomicProgram;

    fn set(bits: &[usize]) -> FormulaSet {
        let mut s = FormulaSet::with_capacity(8);
        for &b in bits {
            s.insert(FormulaId::from_index(b));
        }
        s
    }

    fn a() -> LiteralProgram {
        LiteralProgram::forward(AtomicProgram::new("a").unwrap())
    }

    #[test]
    fn states_are_unique_and_found() {
        let mut g = Graph::new();
        let s = g.create_new_node(set(&[0, 1]), BTreeMap::new(), None, None, Status::Unexp);
        assert_eq!(g.find_state(&set(&[0, 1])), Some(s));
        assert_eq!(g.find_state(&set(&[0])), None);
        let y = g.create_new_node(set(&[0]), BTreeMap::new(), Some(s), Some(a()), Status::Unexp);
        assert_eq!(g.find_state(&set(&[0])), None, "lookup ignores non-states");
        let z = g.create_new_node(set(&[0]), BTreeMap::new(), Some(s), Some(a()), Status::Unexp);
        assert_ne!(y, z);
    }

    #[test]
    fn edges_and_labels() {
        let mut g = Graph::new();
        let s = g.create_new_node(set(&[0]), BTreeMap::new(), None, None, Status::Unexp);
        let y = g.create_new_node(set(&[1]), BTreeMap::new(), Some(s), Some(a()), Status::Unexp);
        let label = EdgeLabel::ByFormula(FormulaId::from_index(0));
        g.add_edge(s, y, label.clone()).unwrap();
        assert_eq!(g.get_child(s, &label), Some(y));
        assert_eq!(g.get_child(s, &EdgeLabel::Cs), None);
        assert!(g.add_edge(s, y, label).is_err());
        g.add_edge(y, s, EdgeLabel::Cs).unwrap();
        assert_eq!(g.parents(s), &[y]);
        assert_eq!(g.get_child(y, &EdgeLabel::Cs), Some(s));
    }

    #[test]
    fn status_and_time_stamps() {
        let mut g = Graph::new();
        let x = g.create_new_node(set(&[0]), BTreeMap::new(), None, None, Status::Unexp);
        let y = g.create_new_node(set(&[1]), BTreeMap::new(), None, None, Status::Unexp);
        assert!(!g.defined_before(y, x));
        g.set_status(y, Status::Undef).unwrap();
        assert_eq!(g.node(y).idx, None);
        g.set_status(y, Status::Open(PrsMap::new(), AltSets::new())).unwrap();
        assert_eq!(g.node(y).idx, Some(1));
        assert!(g.defined_before(y, x));
        g.set_status(x, Status::Closed(AltSets::new())).unwrap();
        assert_eq!(g.node(x).idx, Some(2));
        assert!(g.defined_before(y, x));
        assert!(!g.defined_before(x, y));
        assert_eq!(
            g.set_status(x, Status::Undef),
            Err(GraphError::ClosedIsFinal(x))
        );
        let changed = g.set_status(y, Status::Closed(AltSets::new())).unwrap();
        assert!(changed);
        assert_eq!(g.node(y).idx, Some(1), "time stamps are assigned once");
    }
}
