use std::collections::{HashMap, VecDeque};
use std::fmt;

use super::model::ExtractedModel;
use crate::formula::{diamond_successors, Formula, FormulaKind, FormulaNode, LiteralProgram, Program, ProgramNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    H1,
    H2,
    H3,
    H4,
    H5,
    H6,
    /// The input occurs in no label.
    Structure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HintikkaViolation {
    pub condition: Condition,
    pub world: Option<usize>,
    pub formula: Formula,
}

impl fmt::Display for HintikkaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.world {
            Some(w) => write!(f, "{:?} fails at world {w} for {}", self.condition, self.formula),
            None => write!(f, "{:?} fails: {} is in no label", self.condition, self.formula),
        }
    }
}

/// A fulfilling chain as world-formula pairs.
pub type FulfillingChain = Vec<(usize, Formula)>;

fn literal_successors(model: &ExtractedModel, l: &LiteralProgram, w: usize) -> Vec<usize> {
    let Some(pairs) = model.relations.get(&l.base) else { return Vec::new() };
    pairs
        .iter()
        .filter_map(|&(u, v)| match l.converse {
            false if u == w => Some(v),
            true if v == w => Some(u),
            _ => None,
        })
        .collect()
}

/// Breadth-first search for a chain from `(w, φ)` to the body of the star
/// diamond `φ`, stepping by ⤳ inside a world and along literal programs
/// between worlds, with every formula in the label of its world.
pub fn find_fulfilling_chain(model: &ExtractedModel, w: usize, phi: &Formula) -> Option<FulfillingChain> {
    let FormulaNode::Diamond(g, target) = phi.node() else { return None };
    if !matches!(g.node(), ProgramNode::Star(_)) || !model.labels[w].contains(phi) {
        return None;
    }
    let start = (w, phi.clone());
    let mut parent: HashMap<(usize, Formula), (usize, Formula)> = HashMap::new();
    let mut queue = VecDeque::from([start.clone()]);
    let mut seen = std::collections::HashSet::from([start.clone()]);
    while let Some(current) = queue.pop_front() {
        if current.1 == *target {
            let mut chain = vec![current.clone()];
            let mut at = current;
            while let Some(prev) = parent.get(&at) {
                chain.push(prev.clone());
                at = prev.clone();
            }
            chain.reverse();
            return Some(chain);
        }
        let (world, formula) = &current;
        let next: Vec<(usize, Formula)> = match formula.as_literal_diamond() {
            Some((l, body)) => literal_successors(model, l, *world)
                .into_iter()
                .map(|v| (v, body.clone()))
                .collect(),
            None => diamond_successors(formula)
                .unwrap_or_default()
                .into_iter()
                .map(|f| (*world, f))
                .collect(),
        };
        for step in next {
            if model.labels[step.0].contains(&step.1) && seen.insert(step.clone()) {
                parent.insert(step.clone(), current.clone());
                queue.push_back(step);
            }
        }
    }
    None
}

/// Checks H1 to H6 on every world and that `phi` occurs in some label.
pub fn check_hintikka(model: &ExtractedModel, phi: &Formula) -> Result<(), HintikkaViolation> {
    let violation = |condition, world, formula: &Formula| HintikkaViolation {
        condition,
        world,
        formula: formula.clone(),
    };
    if !model.labels.iter().any(|label| label.contains(phi)) {
        return Err(violation(Condition::Structure, None, phi));
    }
    for (w, label) in model.labels.iter().enumerate() {
        for f in label {
            let ok = match f.classify() {
                FormulaKind::Literal => match f.node() {
                    FormulaNode::NegVar(p) => !label.contains(&Formula::var(p.as_str())),
                    _ => true,
                },
                FormulaKind::Alpha(parts) => parts.iter().all(|p| label.contains(p)),
                FormulaKind::Beta(b1, b2) => label.contains(&b1) || label.contains(&b2),
                FormulaKind::DiamondLit(l, body) => {
                    literal_successors(model, &l, w).iter().any(|&v| model.labels[v].contains(&body))
                }
                FormulaKind::BoxLit(l, body) => {
                    literal_successors(model, &l, w).iter().all(|&v| model.labels[v].contains(&body))
                }
            };
            if !ok {
                let condition = match f.classify() {
                    FormulaKind::Literal => Condition::H1,
                    FormulaKind::Alpha(_) => Condition::H2,
                    FormulaKind::Beta(..) => Condition::H3,
                    FormulaKind::DiamondLit(..) => Condition::H4,
                    FormulaKind::BoxLit(..) => Condition::H5,
                };
                return Err(violation(condition, Some(w), f));
            }
            if is_star_diamond(f) && find_fulfilling_chain(model, w, f).is_none() {
                return Err(violation(Condition::H6, Some(w), f));
            }
        }
    }
    Ok(())
}

fn is_star_diamond(f: &Formula) -> bool {
    matches!(f.node(), FormulaNode::Diamond(g, _) if Program::is_star(g))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::formula::{AtomicProgram, Symbol};
    use crate::syntax::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn labelled(labels: &[&[&str]]) -> ExtractedModel {
        let mut m = ExtractedModel::new(labels.len());
        m.labels = labels.iter().map(|l| l.iter().map(|s| f(s)).collect::<BTreeSet<_>>()).collect();
        m
    }

    fn a() -> AtomicProgram {
        AtomicProgram::new("a").unwrap()
    }

    #[test]
    fn clash_and_missing_successor() {
        let m = labelled(&[&["p", "~p"]]);
        assert_eq!(check_hintikka(&m, &f("p")).unwrap_err().condition, Condition::H1);
        let m = labelled(&[&["<a>p"]]);
        assert_eq!(check_hintikka(&m, &f("<a>p")).unwrap_err().condition, Condition::H4);
        let m = labelled(&[&["q"]]);
        assert_eq!(check_hintikka(&m, &f("p")).unwrap_err().condition, Condition::Structure);
    }

    #[test]
    fn chain_on_a_loop() {
        let mut m = labelled(&[&["<a*>p", "p"]]);
        m.add_edge(a(), 0, 0);
        let chain = find_fulfilling_chain(&m, 0, &f("<a*>p")).unwrap();
        assert_eq!(chain, vec![(0, f("<a*>p")), (0, f("p"))]);
        assert!(check_hintikka(&m, &f("<a*>p")).is_ok());
    }

    #[test]
    fn chain_along_a_line() {
        let star = "<a*>p";
        let step = "<a><a*>p";
        let mut m = labelled(&[&[star, step], &[star, step], &[star, "p"]]);
        m.add_edge(a(), 0, 1);
        m.add_edge(a(), 1, 2);
        m.set_true(Symbol::new("p"), 2);
        let chain = find_fulfilling_chain(&m, 0, &f(star)).unwrap();
        let worlds: Vec<usize> = chain.iter().map(|(w, _)| *w).collect();
        assert_eq!(worlds, vec![0, 0, 1, 1, 2, 2]);
        assert_eq!(chain.last().unwrap().1, f("p"));
        assert!(check_hintikka(&m, &f(star)).is_ok());
    }

    #[test]
    fn unreachable_target() {
        let mut m = labelled(&[&["<a*>p", "<a><a*>p"]]);
        m.add_edge(a(), 0, 0);
        assert!(find_fulfilling_chain(&m, 0, &f("<a*>p")).is_none());
        assert_eq!(check_hintikka(&m, &f("<a*>p")).unwrap_err().condition, Condition::H6);
    }
}
