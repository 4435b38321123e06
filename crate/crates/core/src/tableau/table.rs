use std::collections::{BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::formula::{closure, Formula, FormulaKind, LiteralProgram};

/// Index of a formula in a [`FormulaTable`]. Ids follow the canonical
/// formula order, so iterating a [`FormulaSet`] is deterministic.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FormulaId(u32);

impl FormulaId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        FormulaId(i as u32)
    }
}

/// Table 1 classification with decompositions resolved to ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Literal,
    Alpha(Vec<FormulaId>),
    Beta(FormulaId, FormulaId),
    DiamondLit(LiteralProgram, FormulaId),
    BoxLit(LiteralProgram, FormulaId),
}

/// A set of closure members, stored as a bitset over formula ids.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormulaSet(FixedBitSet);

impl FormulaSet {
    pub fn with_capacity(bits: usize) -> Self {
        FormulaSet(FixedBitSet::with_capacity(bits))
    }

    pub fn insert(&mut self, id: FormulaId) {
        self.0.insert(id.index());
    }

    pub fn contains(&self, id: FormulaId) -> bool {
        self.0.contains(id.index())
    }

    pub fn iter(&self) -> impl Iterator<Item = FormulaId> + '_ {
        self.0.ones().map(|i| FormulaId(i as u32))
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn is_subset(&self, other: &FormulaSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union_with(&mut self, other: &FormulaSet) {
        self.0.union_with(&other.0);
    }

    pub fn difference_with(&mut self, other: &FormulaSet) {
        self.0.difference_with(&other.0);
    }

    pub fn intersect_with(&mut self, other: &FormulaSet) {
        self.0.intersect_with(&other.0);
    }

    pub fn intersection(&self, other: &FormulaSet) -> FormulaSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }
}

impl fmt::Debug for FormulaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|id| id.0)).finish()
    }
}

/// Dense numbering of a closure. Everything a node label can contain is
/// interned here once per solve, together with the facts the tableau
/// rules ask about repeatedly.
pub struct FormulaTable {
    formulas: Vec<Formula>,
    ids: HashMap<Formula, FormulaId>,
    shapes: Vec<Shape>,
    negations: Vec<Option<FormulaId>>,
    eventualities: FormulaSet,
}

impl FormulaTable {
    /// Builds the table for the union of the closures of `roots`.
    pub fn new(roots: &[Formula]) -> Self {
        let mut members = BTreeSet::new();
        for root in roots {
            members.extend(closure(root));
        }
        let formulas: Vec<Formula> = members.into_iter().collect();
        let ids: HashMap<Formula, FormulaId> = formulas
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), FormulaId(i as u32)))
            .collect();
        let id = |f: &Formula| ids[f];
        let shapes = formulas
            .iter()
            .map(|f| match f.classify() {
                FormulaKind::Literal => Shape::Literal,
                FormulaKind::Alpha(parts) => Shape::Alpha(parts.iter().map(id).collect()),
                FormulaKind::Beta(b1, b2) => Shape::Beta(id(&b1), id(&b2)),
                FormulaKind::DiamondLit(l, body) => Shape::DiamondLit(l, id(&body)),
                FormulaKind::BoxLit(l, body) => Shape::BoxLit(l, id(&body)),
            })
            .collect();
        let negations = formulas.iter().map(|f| ids.get(&f.negate()).copied()).collect();
        let mut eventualities = FormulaSet::with_capacity(formulas.len());
        for (i, f) in formulas.iter().enumerate() {
            if f.is_eventuality() {
                eventualities.insert(FormulaId(i as u32));
            }
        }
        FormulaTable {
            formulas,
            ids,
            shapes,
            negations,
            eventualities,
        }
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn id(&self, f: &Formula) -> Option<FormulaId> {
        self.ids.get(f).copied()
    }

    pub fn formula(&self, id: FormulaId) -> &Formula {
        &self.formulas[id.index()]
    }

    pub fn shape(&self, id: FormulaId) -> &Shape {
        &self.shapes[id.index()]
    }

    /// The id of `~φ` when it lies in the closure.
    pub fn negation(&self, id: FormulaId) -> Option<FormulaId> {
        self.negations[id.index()]
    }

    pub fn is_eventuality(&self, id: FormulaId) -> bool {
        self.eventualities.contains(id)
    }

    pub fn eventualities(&self) -> &FormulaSet {
        &self.eventualities
    }

    pub fn is_literal_diamond(&self, id: FormulaId) -> bool {
        matches!(self.shape(id), Shape::DiamondLit(..))
    }

    pub fn empty_set(&self) -> FormulaSet {
        FormulaSet::with_capacity(self.len())
    }

    /// Panics if some formula is outside the closure.
    pub fn set_of<'a>(&self, formulas: impl IntoIterator<Item = &'a Formula>) -> FormulaSet {
        let mut set = self.empty_set();
        for f in formulas {
            set.insert(self.id(f).unwrap_or_else(|| panic!("{f} is not in the closure")));
        }
        set
    }

    pub fn formulas_of<'a>(&'a self, set: &'a FormulaSet) -> impl Iterator<Item = &'a Formula> + 'a {
        set.iter().map(|id| self.formula(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = FormulaId> {
        (0..self.formulas.len() as u32).map(FormulaId)
    }
}
