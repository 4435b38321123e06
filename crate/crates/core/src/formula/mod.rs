//! Hash-consed CPDL syntax in negation normal form.
//!
//! Every [`Formula`] and [`Program`] is interned in a process-wide table, so
//! equality is a pointer comparison and hashing reads a cached structural
//! hash. Ordering is structural (variant tag, then children) and therefore
//! independent of the order in which terms happened to be interned.

mod classify;

pub use classify::{closure, diamond_successors, FormulaKind};

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, LazyLock, Mutex};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("identifier must not be empty")]
    EmptyName,
    #[error("`{0}` has no ⤳-successors")]
    NoSuccessors(String),
}

/// An interned identifier, used for both variables and atomic programs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Reserved names start with `$`, which the parser never produces.
const DUMMY_PROGRAM: &str = "$d";
const RESERVED_VARIABLE: &str = "$q0";

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomicProgram(Symbol);

impl AtomicProgram {
    pub fn new(name: &str) -> Result<Self, FormulaError> {
        if name.is_empty() {
            return Err(FormulaError::EmptyName);
        }
        Ok(AtomicProgram(Symbol::new(name)))
    }

    /// The internal program used to turn the root into a state. It cannot
    /// be written in concrete syntax, so it never occurs in user input.
    pub fn dummy() -> Self {
        AtomicProgram(Symbol::new(DUMMY_PROGRAM))
    }

    pub fn is_dummy(&self) -> bool {
        self.0.as_str() == DUMMY_PROGRAM
    }

    pub fn name(&self) -> &str {
        self.0.as_str()
    }
}

impl fmt::Debug for AtomicProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An atomic program or its converse.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LiteralProgram {
    pub base: AtomicProgram,
    pub converse: bool,
}

impl LiteralProgram {
    pub fn forward(base: AtomicProgram) -> Self {
        LiteralProgram { base, converse: false }
    }

    pub fn backward(base: AtomicProgram) -> Self {
        LiteralProgram { base, converse: true }
    }

    /// `a ↦ a^`, `a^ ↦ a`.
    pub fn invert(&self) -> Self {
        LiteralProgram {
            base: self.base.clone(),
            converse: !self.converse,
        }
    }
}

impl fmt::Debug for LiteralProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.converse {
            write!(f, "{:?}^", self.base)
        } else {
            write!(f, "{:?}", self.base)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum FormulaNode {
    Var(Symbol),
    NegVar(Symbol),
    And(Formula, Formula),
    Or(Formula, Formula),
    Diamond(Program, Formula),
    Box(Program, Formula),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum ProgramNode {
    Literal(LiteralProgram),
    Seq(Program, Program),
    Choice(Program, Program),
    Star(Program),
    Test(Formula),
}

struct FormulaData {
    node: FormulaNode,
    hash: u64,
    size: usize,
}

struct ProgramData {
    node: ProgramNode,
    hash: u64,
    size: usize,
}

/// An NNF formula. Cheap to clone; compares by identity.
#[derive(Clone)]
pub struct Formula(Arc<FormulaData>);

/// A program whose converse operators sit on atomic programs only.
#[derive(Clone)]
pub struct Program(Arc<ProgramData>);

static FORMULAS: LazyLock<Mutex<HashMap<FormulaNode, Formula>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));
static PROGRAMS: LazyLock<Mutex<HashMap<ProgramNode, Program>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn structural_hash<T: Hash>(value: &T) -> u64 {
    let mut hasher = DefaultHasher::new();
    value.hash(&mut hasher);
    hasher.finish()
}

impl Formula {
    pub fn intern(node: FormulaNode) -> Formula {
        let mut table = FORMULAS.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(existing) = table.get(&node) {
            return existing.clone();
        }
        let size = match &node {
            FormulaNode::Var(_) | FormulaNode::NegVar(_) => 1,
            FormulaNode::And(l, r) | FormulaNode::Or(l, r) => 1 + l.size() + r.size(),
            FormulaNode::Diamond(g, f) | FormulaNode::Box(g, f) => g.size() + f.size(),
        };
        let formula = Formula(Arc::new(FormulaData {
            hash: structural_hash(&node),
            size,
            node: node.clone(),
        }));
        table.insert(node, formula.clone());
        formula
    }

    pub fn var(name: &str) -> Formula {
        Formula::intern(FormulaNode::Var(Symbol::new(name)))
    }

    pub fn neg_var(name: &str) -> Formula {
        Formula::intern(FormulaNode::NegVar(Symbol::new(name)))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::intern(FormulaNode::And(l, r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::intern(FormulaNode::Or(l, r))
    }

    pub fn diamond(program: Program, body: Formula) -> Formula {
        Formula::intern(FormulaNode::Diamond(program, body))
    }

    pub fn boxed(program: Program, body: Formula) -> Formula {
        Formula::intern(FormulaNode::Box(program, body))
    }

    /// `q₀ ∨ ¬q₀` over the reserved variable.
    pub fn top() -> Formula {
        Formula::or(Formula::var(RESERVED_VARIABLE), Formula::neg_var(RESERVED_VARIABLE))
    }

    /// `q₀ ∧ ¬q₀` over the reserved variable.
    pub fn bottom() -> Formula {
        Formula::and(Formula::var(RESERVED_VARIABLE), Formula::neg_var(RESERVED_VARIABLE))
    }

    pub fn node(&self) -> &FormulaNode {
        &self.0.node
    }

    /// Size as used for closure bounds: literals and literal programs
    /// count 1, binary connectives add 1, modalities add nothing.
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn is_reserved_variable(name: &Symbol) -> bool {
        name.as_str() == RESERVED_VARIABLE
    }

    /// `~φ`, the NNF of the negation.
    pub fn negate(&self) -> Formula {
        match self.node() {
            FormulaNode::Var(p) => Formula::intern(FormulaNode::NegVar(p.clone())),
            FormulaNode::NegVar(p) => Formula::intern(FormulaNode::Var(p.clone())),
            FormulaNode::And(l, r) => Formula::or(l.negate(), r.negate()),
            FormulaNode::Or(l, r) => Formula::and(l.negate(), r.negate()),
            FormulaNode::Diamond(g, f) => Formula::boxed(g.clone(), f.negate()),
            FormulaNode::Box(g, f) => Formula::diamond(g.clone(), f.negate()),
        }
    }

    /// `⟨l⟩ψ` with `l` a literal program.
    pub fn as_literal_diamond(&self) -> Option<(&LiteralProgram, &Formula)> {
        match self.node() {
            FormulaNode::Diamond(g, f) => g.as_literal().map(|l| (l, f)),
            _ => None,
        }
    }

    pub fn as_literal_box(&self) -> Option<(&LiteralProgram, &Formula)> {
        match self.node() {
            FormulaNode::Box(g, f) => g.as_literal().map(|l| (l, f)),
            _ => None,
        }
    }

    /// A chain of diamonds `⟨γ₁⟩…⟨γₖ⟩⟨γ*⟩ψ`, `k ≥ 0`.
    pub fn is_eventuality(&self) -> bool {
        let mut current = self;
        while let FormulaNode::Diamond(program, body) = current.node() {
            if matches!(program.node(), ProgramNode::Star(_)) {
                return true;
            }
            current = body;
        }
        false
    }

    /// Variables and atomic programs occurring anywhere in the formula.
    pub fn atoms(&self) -> (Vec<Symbol>, Vec<AtomicProgram>) {
        let mut vars = Vec::new();
        let mut progs = Vec::new();
        collect_formula_atoms(self, &mut vars, &mut progs);
        vars.sort();
        vars.dedup();
        progs.sort();
        progs.dedup();
        (vars, progs)
    }
}

fn collect_formula_atoms(f: &Formula, vars: &mut Vec<Symbol>, progs: &mut Vec<AtomicProgram>) {
    match f.node() {
        FormulaNode::Var(p) | FormulaNode::NegVar(p) => vars.push(p.clone()),
        FormulaNode::And(l, r) | FormulaNode::Or(l, r) => {
            collect_formula_atoms(l, vars, progs);
            collect_formula_atoms(r, vars, progs);
        }
        FormulaNode::Diamond(g, b) | FormulaNode::Box(g, b) => {
            collect_program_atoms(g, vars, progs);
            collect_formula_atoms(b, vars, progs);
        }
    }
}

fn collect_program_atoms(g: &Program, vars: &mut Vec<Symbol>, progs: &mut Vec<AtomicProgram>) {
    match g.node() {
        ProgramNode::Literal(l) => progs.push(l.base.clone()),
        ProgramNode::Seq(a, b) | ProgramNode::Choice(a, b) => {
            collect_program_atoms(a, vars, progs);
            collect_program_atoms(b, vars, progs);
        }
        ProgramNode::Star(a) => collect_program_atoms(a, vars, progs),
        ProgramNode::Test(f) => collect_formula_atoms(f, vars, progs),
    }
}

impl Program {
    pub fn intern(node: ProgramNode) -> Program {
        let mut table = PROGRAMS.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(existing) = table.get(&node) {
            return existing.clone();
        }
        let size = match &node {
            ProgramNode::Literal(_) => 1,
            ProgramNode::Seq(a, b) | ProgramNode::Choice(a, b) => 1 + a.size() + b.size(),
            ProgramNode::Star(a) => 1 + a.size(),
            ProgramNode::Test(f) => 1 + f.size(),
        };
        let program = Program(Arc::new(ProgramData {
            hash: structural_hash(&node),
            size,
            node: node.clone(),
        }));
        table.insert(node, program.clone());
        program
    }

    pub fn literal(l: LiteralProgram) -> Program {
        Program::intern(ProgramNode::Literal(l))
    }

    /// Forward atomic program by name. Panics on an empty name.
    pub fn atom(name: &str) -> Program {
        Program::literal(LiteralProgram::forward(
            AtomicProgram::new(name).expect("atomic program name"),
        ))
    }

    pub fn converse_atom(name: &str) -> Program {
        Program::literal(LiteralProgram::backward(
            AtomicProgram::new(name).expect("atomic program name"),
        ))
    }

    pub fn seq(a: Program, b: Program) -> Program {
        Program::intern(ProgramNode::Seq(a, b))
    }

    pub fn choice(a: Program, b: Program) -> Program {
        Program::intern(ProgramNode::Choice(a, b))
    }

    pub fn star(a: Program) -> Program {
        Program::intern(ProgramNode::Star(a))
    }

    pub fn test(f: Formula) -> Program {
        Program::intern(ProgramNode::Test(f))
    }

    pub fn node(&self) -> &ProgramNode {
        &self.0.node
    }

    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn as_literal(&self) -> Option<&LiteralProgram> {
        match self.node() {
            ProgramNode::Literal(l) => Some(l),
            _ => None,
        }
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Eq for Formula {}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Eq for Program {}

impl Hash for Program {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl FormulaNode {
    fn tag(&self) -> u8 {
        match self {
            FormulaNode::Var(_) => 0,
            FormulaNode::NegVar(_) => 1,
            FormulaNode::And(..) => 2,
            FormulaNode::Or(..) => 3,
            FormulaNode::Diamond(..) => 4,
            FormulaNode::Box(..) => 5,
        }
    }
}

impl ProgramNode {
    fn tag(&self) -> u8 {
        match self {
            ProgramNode::Literal(_) => 0,
            ProgramNode::Seq(..) => 1,
            ProgramNode::Choice(..) => 2,
            ProgramNode::Star(_) => 3,
            ProgramNode::Test(_) => 4,
        }
    }
}

impl Ord for Formula {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        let (a, b) = (self.node(), other.node());
        a.tag().cmp(&b.tag()).then_with(|| match (a, b) {
            (FormulaNode::Var(x), FormulaNode::Var(y))
            | (FormulaNode::NegVar(x), FormulaNode::NegVar(y)) => x.cmp(y),
            (FormulaNode::And(l1, r1), FormulaNode::And(l2, r2))
            | (FormulaNode::Or(l1, r1), FormulaNode::Or(l2, r2)) => {
                l1.cmp(l2).then_with(|| r1.cmp(r2))
            }
            (FormulaNode::Diamond(g1, f1), FormulaNode::Diamond(g2, f2))
            | (FormulaNode::Box(g1, f1), FormulaNode::Box(g2, f2)) => {
                g1.cmp(g2).then_with(|| f1.cmp(f2))
            }
            _ => unreachable!("tags already compared"),
        })
    }
}

impl PartialOrd for Formula {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Program {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        let (a, b) = (self.node(), other.node());
        a.tag().cmp(&b.tag()).then_with(|| match (a, b) {
            (ProgramNode::Literal(x), ProgramNode::Literal(y)) => x.cmp(y),
            (ProgramNode::Seq(a1, b1), ProgramNode::Seq(a2, b2))
            | (ProgramNode::Choice(a1, b1), ProgramNode::Choice(a2, b2)) => {
                a1.cmp(a2).then_with(|| b1.cmp(b2))
            }
            (ProgramNode::Star(x), ProgramNode::Star(y)) => x.cmp(y),
            (ProgramNode::Test(x), ProgramNode::Test(y)) => x.cmp(y),
            _ => unreachable!("tags already compared"),
        })
    }
}

impl PartialOrd for Program {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::render(self))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::render(self))
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::render_program(self))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::render_program(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::var("p")
    }

    #[test]
    fn interning_shares_structure() {
        let a = Formula::diamond(Program::star(Program::atom("a")), p());
        let b = Formula::diamond(Program::star(Program::atom("a")), Formula::var("p"));
        assert_eq!(a, b);
        assert!(Arc::ptr_eq(&a.0, &b.0));
    }

    #[test]
    fn negate_examples() {
        assert_eq!(p().negate(), Formula::neg_var("p"));
        assert_eq!(Formula::neg_var("p").negate(), p());
        let dia = Formula::diamond(Program::atom("a"), p());
        assert_eq!(dia.negate(), Formula::boxed(Program::atom("a"), Formula::neg_var("p")));
    }

    #[test]
    fn invert_literal_is_involutive() {
        let a = LiteralProgram::forward(AtomicProgram::new("a").unwrap());
        assert!(a.invert().converse);
        assert_eq!(a.invert().invert(), a);
        assert!(!LiteralProgram::backward(a.base.clone()).invert().converse);
    }

    #[test]
    fn eventuality_examples() {
        let a = Program::atom("a");
        let star = Program::star(a.clone());
        assert!(Formula::diamond(star.clone(), p()).is_eventuality());
        let chain = Formula::diamond(
            Program::atom("b"),
            Formula::diamond(Program::test(p()), Formula::diamond(star.clone(), Formula::var("q"))),
        );
        assert!(chain.is_eventuality());
        assert!(!Formula::boxed(star, p()).is_eventuality());
        assert!(!Formula::diamond(a, p()).is_eventuality());
    }

    #[test]
    fn empty_program_name_rejected() {
        assert_eq!(AtomicProgram::new(""), Err(FormulaError::EmptyName));
        assert!(AtomicProgram::dummy().is_dummy());
        assert!(!AtomicProgram::new("d").unwrap().is_dummy());
    }

    #[test]
    fn size_matches_definition() {
        // |<a*>[a^]p| = |a*| + |[a^]p| = 2 + 2
        let f = Formula::diamond(
            Program::star(Program::atom("a")),
            Formula::boxed(Program::converse_atom("a"), p()),
        );
        assert_eq!(f.size(), 4);
        assert_eq!(Formula::and(p(), p()).size(), 3);
        assert_eq!(Program::test(p()).size(), 2);
    }

    #[test]
    fn order_is_structural() {
        let x = Formula::var("a");
        let y = Formula::var("b");
        assert!(x < y);
        assert!(y < Formula::neg_var("a"));
        assert!(Formula::and(x.clone(), y.clone()) < Formula::and(y, x));
    }
}
