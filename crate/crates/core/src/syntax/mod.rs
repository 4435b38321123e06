//! Concrete syntax: the user-facing grammar, its desugaring into NNF, and
//! the pretty-printer.
//!
//! Grammar (highest binding first):
//!
//! ```text
//! formula  ::= iff
//! iff      ::= imp ("<->" imp)*            left-assoc
//! imp      ::= or ("->" imp)?               right-assoc
//! or       ::= and ("|" and)*
//! and      ::= unary ("&" unary)*
//! unary    ::= "~" unary | "<" prog ">" unary | "[" prog "]" unary | atom
//! atom     ::= ident | "true" | "false" | "(" formula ")"
//! prog     ::= seq ("+" seq)*
//! seq      ::= post (";" post)*
//! post     ::= patom ("*" | "^")*
//! patom    ::= ident | unary "?" | "(" prog ")"
//! ```
//!
//! In program position an identifier is an atomic program unless it is
//! followed by `?`, in which case it is a test on a variable.

mod parser;
mod render;

pub use parser::{parse, parse_formula, ParseError};
pub use render::{render, render_program};

use crate::formula::{AtomicProgram, Formula, LiteralProgram, Program};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SurfaceFormula {
    Var(String),
    True,
    False,
    Not(Box<SurfaceFormula>),
    And(Box<SurfaceFormula>, Box<SurfaceFormula>),
    Or(Box<SurfaceFormula>, Box<SurfaceFormula>),
    Imp(Box<SurfaceFormula>, Box<SurfaceFormula>),
    Iff(Box<SurfaceFormula>, Box<SurfaceFormula>),
    Diamond(SurfaceProgram, Box<SurfaceFormula>),
    Box(SurfaceProgram, Box<SurfaceFormula>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SurfaceProgram {
    Atom(String),
    Converse(Box<SurfaceProgram>),
    Seq(Box<SurfaceProgram>, Box<SurfaceProgram>),
    Choice(Box<SurfaceProgram>, Box<SurfaceProgram>),
    Star(Box<SurfaceProgram>),
    Test(Box<SurfaceFormula>),
}

impl SurfaceFormula {
    pub fn not(f: SurfaceFormula) -> Self {
        SurfaceFormula::Not(Box::new(f))
    }

    pub fn and(l: SurfaceFormula, r: SurfaceFormula) -> Self {
        SurfaceFormula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: SurfaceFormula, r: SurfaceFormula) -> Self {
        SurfaceFormula::Or(Box::new(l), Box::new(r))
    }

    pub fn imp(l: SurfaceFormula, r: SurfaceFormula) -> Self {
        SurfaceFormula::Imp(Box::new(l), Box::new(r))
    }

    pub fn iff(l: SurfaceFormula, r: SurfaceFormula) -> Self {
        SurfaceFormula::Iff(Box::new(l), Box::new(r))
    }

    /// Lifts an NNF formula back into the surface grammar.
    pub fn from_nnf(f: &Formula) -> Self {
        use crate::formula::FormulaNode as N;
        match f.node() {
            N::Var(p) => SurfaceFormula::Var(p.to_string()),
            N::NegVar(p) => SurfaceFormula::not(SurfaceFormula::Var(p.to_string())),
            N::And(l, r) => SurfaceFormula::and(Self::from_nnf(l), Self::from_nnf(r)),
            N::Or(l, r) => SurfaceFormula::or(Self::from_nnf(l), Self::from_nnf(r)),
            N::Diamond(g, b) => {
                SurfaceFormula::Diamond(SurfaceProgram::from_core(g), Box::new(Self::from_nnf(b)))
            }
            N::Box(g, b) => {
                SurfaceFormula::Box(SurfaceProgram::from_core(g), Box::new(Self::from_nnf(b)))
            }
        }
    }
}

impl SurfaceProgram {
    pub fn from_core(g: &Program) -> Self {
        use crate::formula::ProgramNode as P;
        match g.node() {
            P::Literal(l) => {
                let atom = SurfaceProgram::Atom(l.base.name().to_string());
                if l.converse {
                    SurfaceProgram::Converse(Box::new(atom))
                } else {
                    atom
                }
            }
            P::Seq(a, b) => {
                SurfaceProgram::Seq(Box::new(Self::from_core(a)), Box::new(Self::from_core(b)))
            }
            P::Choice(a, b) => {
                SurfaceProgram::Choice(Box::new(Self::from_core(a)), Box::new(Self::from_core(b)))
            }
            P::Star(a) => SurfaceProgram::Star(Box::new(Self::from_core(a))),
            P::Test(f) => SurfaceProgram::Test(Box::new(SurfaceFormula::from_nnf(f))),
        }
    }
}

/// Pushes negations to the variables, expands `->`/`<->`, replaces the
/// constants by the reserved-variable tautology/contradiction and moves
/// converse onto atomic programs (also inside test bodies).
pub fn to_nnf(surface: &SurfaceFormula) -> Formula {
    nnf(surface, false)
}

fn nnf(f: &SurfaceFormula, negated: bool) -> Formula {
    use SurfaceFormula as S;
    match (f, negated) {
        (S::Var(p), false) => Formula::var(p),
        (S::Var(p), true) => Formula::neg_var(p),
        (S::True, false) => Formula::top(),
        (S::True, true) => Formula::top().negate(),
        (S::False, false) => Formula::bottom(),
        (S::False, true) => Formula::bottom().negate(),
        (S::Not(g), neg) => nnf(g, !neg),
        (S::And(l, r), false) => Formula::and(nnf(l, false), nnf(r, false)),
        (S::And(l, r), true) => Formula::or(nnf(l, true), nnf(r, true)),
        (S::Or(l, r), false) => Formula::or(nnf(l, false), nnf(r, false)),
        (S::Or(l, r), true) => Formula::and(nnf(l, true), nnf(r, true)),
        (S::Imp(l, r), false) => Formula::or(nnf(l, true), nnf(r, false)),
        (S::Imp(l, r), true) => Formula::and(nnf(l, false), nnf(r, true)),
        (S::Iff(l, r), neg) => {
            let expanded = S::and(S::imp((**l).clone(), (**r).clone()), S::imp((**r).clone(), (**l).clone()));
            nnf(&expanded, neg)
        }
        (S::Diamond(g, b), false) => Formula::diamond(push_converse(g), nnf(b, false)),
        (S::Diamond(g, b), true) => Formula::boxed(push_converse(g), nnf(b, true)),
        (S::Box(g, b), false) => Formula::boxed(push_converse(g), nnf(b, false)),
        (S::Box(g, b), true) => Formula::diamond(push_converse(g), nnf(b, true)),
    }
}

/// Rewrites a surface program so that converse only wraps atomic programs.
pub fn push_converse(g: &SurfaceProgram) -> Program {
    convert_program(g, false)
}

fn convert_program(g: &SurfaceProgram, converse: bool) -> Program {
    use SurfaceProgram as P;
    match g {
        P::Atom(name) => {
            let base = AtomicProgram::new(name).expect("parser never yields empty names");
            Program::literal(if converse {
                LiteralProgram::backward(base)
            } else {
                LiteralProgram::forward(base)
            })
        }
        P::Converse(inner) => convert_program(inner, !converse),
        P::Seq(a, b) if converse => Program::seq(convert_program(b, true), convert_program(a, true)),
        P::Seq(a, b) => Program::seq(convert_program(a, false), convert_program(b, false)),
        P::Choice(a, b) => Program::choice(convert_program(a, converse), convert_program(b, converse)),
        P::Star(a) => Program::star(convert_program(a, converse)),
        P::Test(f) => Program::test(to_nnf(f)),
    }
}
