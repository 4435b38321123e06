use std::collections::BTreeSet;

use super::{Formula, FormulaError, FormulaNode, LiteralProgram, Program, ProgramNode};

/// Smullyan classification of an NNF formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormulaKind {
    /// Conjunctive; one or two decompositions.
    Alpha(Vec<Formula>),
    /// Disjunctive; exactly two decompositions.
    Beta(Formula, Formula),
    DiamondLit(LiteralProgram, Formula),
    BoxLit(LiteralProgram, Formula),
    Literal,
}

impl Formula {
    pub fn classify(&self) -> FormulaKind {
        match self.node() {
            FormulaNode::Var(_) | FormulaNode::NegVar(_) => FormulaKind::Literal,
            FormulaNode::And(l, r) => FormulaKind::Alpha(vec![l.clone(), r.clone()]),
            FormulaNode::Or(l, r) => FormulaKind::Beta(l.clone(), r.clone()),
            FormulaNode::Diamond(g, f) => match g.node() {
                ProgramNode::Literal(l) => FormulaKind::DiamondLit(l.clone(), f.clone()),
                ProgramNode::Seq(a, b) => FormulaKind::Alpha(vec![Formula::diamond(
                    a.clone(),
                    Formula::diamond(b.clone(), f.clone()),
                )]),
                ProgramNode::Choice(a, b) => FormulaKind::Beta(
                    Formula::diamond(a.clone(), f.clone()),
                    Formula::diamond(b.clone(), f.clone()),
                ),
                ProgramNode::Star(a) => FormulaKind::Beta(
                    f.clone(),
                    Formula::diamond(a.clone(), self.clone()),
                ),
                ProgramNode::Test(psi) => FormulaKind::Alpha(vec![f.clone(), psi.clone()]),
            },
            FormulaNode::Box(g, f) => match g.node() {
                ProgramNode::Literal(l) => FormulaKind::BoxLit(l.clone(), f.clone()),
                ProgramNode::Seq(a, b) => FormulaKind::Alpha(vec![Formula::boxed(
                    a.clone(),
                    Formula::boxed(b.clone(), f.clone()),
                )]),
                ProgramNode::Choice(a, b) => FormulaKind::Alpha(vec![
                    Formula::boxed(a.clone(), f.clone()),
                    Formula::boxed(b.clone(), f.clone()),
                ]),
                ProgramNode::Star(a) => FormulaKind::Alpha(vec![
                    f.clone(),
                    Formula::boxed(a.clone(), self.clone()),
                ]),
                ProgramNode::Test(psi) => FormulaKind::Beta(f.clone(), psi.negate()),
            },
        }
    }
}

/// The ⤳-successors of a diamond over a non-literal program.
pub fn diamond_successors(phi: &Formula) -> Result<Vec<Formula>, FormulaError> {
    match phi.node() {
        FormulaNode::Diamond(g, _) if !matches!(g.node(), ProgramNode::Literal(_)) => {
            match phi.classify() {
                FormulaKind::Alpha(parts) => Ok(vec![parts[0].clone()]),
                FormulaKind::Beta(b1, b2) => Ok(vec![b1, b2]),
                _ => unreachable!("non-literal diamonds are α or β"),
            }
        }
        _ => Err(FormulaError::NoSuccessors(phi.to_string())),
    }
}

/// `cl(φ)`: the least set containing `φ` that is closed under taking bodies
/// of literal modalities and under α/β decomposition.
pub fn closure(phi: &Formula) -> BTreeSet<Formula> {
    let mut seen = BTreeSet::new();
    let mut pending = vec![phi.clone()];
    while let Some(f) = pending.pop() {
        if !seen.insert(f.clone()) {
            continue;
        }
        match f.classify() {
            FormulaKind::Alpha(parts) => pending.extend(parts),
            FormulaKind::Beta(b1, b2) => {
                pending.push(b1);
                pending.push(b2);
            }
            FormulaKind::DiamondLit(_, body) | FormulaKind::BoxLit(_, body) => pending.push(body),
            FormulaKind::Literal => {}
        }
    }
    seen
}

impl Program {
    /// True when the program is a star (used by the eventuality test).
    pub fn is_star(&self) -> bool {
        matches!(self.node(), ProgramNode::Star(_))
    }
}
