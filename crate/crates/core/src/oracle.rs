//! Ground truth at desk scale: brute-force model search over small
//! structures, and a seeded generator of random formulas.
//!
//! The enumerator has its own evaluator over bitmasks, so it shares no
//! code with the tableau or with the model checker it is compared against.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::certify::ExtractedModel;
use crate::formula::{AtomicProgram, Formula, FormulaNode, Program, ProgramNode, Symbol};

/// Largest world count the enumerator supports.
pub const MAX_WORLDS: usize = 8;

/// Default cap on the number of candidate models.
pub const DEFAULT_CAP: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_worlds: usize,
    pub programs: Vec<AtomicProgram>,
    pub variables: Vec<Symbol>,
    /// Upper bound on the number of candidate models.
    pub cap: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} candidate models exceed the cap of {1}")]
    CapExceeded(u128, u64),
    #[error("`{0}` is not covered by the budget")]
    OutsideBudget(String),
    #[error("at most {MAX_WORLDS} worlds are supported")]
    TooManyWorlds,
}

impl OracleBudget {
    /// Three worlds for formulas over one program and one variable, two
    /// worlds otherwise.
    pub fn for_formula(phi: &Formula) -> Self {
        let (mut variables, programs) = phi.atoms();
        variables.retain(|v| !Formula::is_reserved_variable(v));
        let max_worlds = if programs.len() <= 1 && variables.len() <= 1 { 3 } else { 2 };
        OracleBudget { max_worlds, programs, variables, cap: DEFAULT_CAP }
    }

    /// Number of candidate models over all world counts.
    pub fn space(&self) -> u128 {
        (1..=self.max_worlds)
            .map(|n| {
                let bits = n * n * self.programs.len() + n * self.variables.len();
                1u128.checked_shl(bits as u32).unwrap_or(u128::MAX)
            })
            .fold(0u128, u128::saturating_add)
    }
}

type Set = u64;
type Rel = [Set; MAX_WORLDS];

#[derive(Clone, Copy)]
enum Op {
    Var(Option<usize>),
    NegVar(Option<usize>),
    And(usize, usize),
    Or(usize, usize),
    Diamond(usize, usize),
    Box(usize, usize),
    Literal(usize, bool),
    Seq(usize, usize),
    Choice(usize, usize),
    Star(usize),
    Test(usize),
}

#[derive(Clone, Copy)]
enum Value {
    Set(Set),
    Rel(Rel),
}

/// A formula flattened into evaluation order.
struct Compiled {
    ops: Vec<Op>,
    formulas: HashMap<Formula, usize>,
    programs: HashMap<Program, usize>,
}

impl Compiled {
    fn new(phi: &Formula, budget: &OracleBudget) -> Result<(Self, usize), OracleError> {
        let mut c = Compiled { ops: Vec::new(), formulas: HashMap::new(), programs: HashMap::new() };
        let root = c.formula(phi, budget)?;
        Ok((c, root))
    }

    fn formula(&mut self, f: &Formula, budget: &OracleBudget) -> Result<usize, OracleError> {
        if let Some(&i) = self.formulas.get(f) {
            return Ok(i);
        }
        let var = |p: &Symbol| -> Result<Option<usize>, OracleError> {
            if Formula::is_reserved_variable(p) {
                return Ok(budget.variables.iter().position(|v| v == p));
            }
            budget
                .variables
                .iter()
                .position(|v| v == p)
                .map(Some)
                .ok_or_else(|| OracleError::OutsideBudget(p.to_string()))
        };
        let op = match f.node() {
            FormulaNode::Var(p) => Op::Var(var(p)?),
            FormulaNode::NegVar(p) => Op::NegVar(var(p)?),
            FormulaNode::And(l, r) => Op::And(self.formula(l, budget)?, self.formula(r, budget)?),
            FormulaNode::Or(l, r) => Op::Or(self.formula(l, budget)?, self.formula(r, budget)?),
            FormulaNode::Diamond(g, b) => Op::Diamond(self.program(g, budget)?, self.formula(b, budget)?),
            FormulaNode::Box(g, b) => Op::Box(self.program(g, budget)?, self.formula(b, budget)?),
        };
        self.ops.push(op);
        self.formulas.insert(f.clone(), self.ops.len() - 1);
        Ok(self.ops.len() - 1)
    }

    fn program(&mut self, g: &Program, budget: &OracleBudget) -> Result<usize, OracleError> {
        if let Some(&i) = self.programs.get(g) {
            return Ok(i);
        }
        let op = match g.node() {
            ProgramNode::Literal(l) => {
                let index = budget
                    .programs
                    .iter()
                    .position(|a| *a == l.base)
                    .ok_or_else(|| OracleError::OutsideBudget(l.base.name().to_string()))?;
                Op::Literal(index, l.converse)
            }
            ProgramNode::Seq(a, b) => Op::Seq(self.program(a, budget)?, self.program(b, budget)?),
            ProgramNode::Choice(a, b) => Op::Choice(self.program(a, budget)?, self.program(b, budget)?),
            ProgramNode::Star(a) => Op::Star(self.program(a, budget)?),
            ProgramNode::Test(f) => Op::Test(self.formula(f, budget)?),
        };
        self.ops.push(op);
        self.programs.insert(g.clone(), self.ops.len() - 1);
        Ok(self.ops.len() - 1)
    }

    /// Evaluates every op on one candidate model. `rels[k][u]` holds the
    /// successors of `u` under program `k`, `vals[v]` the worlds where
    /// variable `v` is true.
    fn eval(&self, n: usize, rels: &[Rel], vals: &[Set], out: &mut Vec<Value>) {
        let all: Set = (1 << n) - 1;
        out.clear();
        let set = |out: &[Value], i: usize| match out[i] {
            Value::Set(s) => s,
            Value::Rel(_) => unreachable!(),
        };
        let rel = |out: &[Value], i: usize| match out[i] {
            Value::Rel(r) => r,
            Value::Set(_) => unreachable!(),
        };
        for op in &self.ops {
            let value = match *op {
                Op::Var(v) => Value::Set(v.map_or(0, |v| vals[v])),
                Op::NegVar(v) => Value::Set(all & !v.map_or(0, |v| vals[v])),
                Op::And(l, r) => Value::Set(set(out, l) & set(out, r)),
                Op::Or(l, r) => Value::Set(set(out, l) | set(out, r)),
                Op::Diamond(g, b) => {
                    let (r, t) = (rel(out, g), set(out, b));
                    Value::Set((0..n).filter(|&u| r[u] & t != 0).fold(0, |s, u| s | 1 << u))
                }
                Op::Box(g, b) => {
                    let (r, t) = (rel(out, g), set(out, b));
                    Value::Set((0..n).filter(|&u| r[u] & !t == 0).fold(0, |s, u| s | 1 << u))
                }
                Op::Literal(k, false) => Value::Rel(rels[k]),
                Op::Literal(k, true) => {
                    let mut r = [0; MAX_WORLDS];
                    for u in 0..n {
                        for v in 0..n {
                            if rels[k][u] >> v & 1 == 1 {
                                r[v] |= 1 << u;
                            }
                        }
                    }
                    Value::Rel(r)
                }
                Op::Seq(a, b) => Value::Rel(compose(n, &rel(out, a), &rel(out, b))),
                Op::Choice(a, b) => {
                    let (ra, rb) = (rel(out, a), rel(out, b));
                    let mut r = [0; MAX_WORLDS];
                    for u in 0..n {
                        r[u] = ra[u] | rb[u];
                    }
                    Value::Rel(r)
                }
                Op::Star(a) => {
                    let step = rel(out, a);
                    let mut r = [0; MAX_WORLDS];
                    for (u, row) in r.iter_mut().enumerate().take(n) {
                        *row = 1 << u;
                    }
                    loop {
                        let next = compose(n, &r, &step);
                        let mut grown = r;
                        for u in 0..n {
                            grown[u] |= next[u];
                        }
                        if grown == r {
                            break;
                        }
                        r = grown;
                    }
                    Value::Rel(r)
                }
                Op::Test(f) => {
                    let s = set(out, f);
                    let mut r = [0; MAX_WORLDS];
                    for (u, row) in r.iter_mut().enumerate().take(n) {
                        *row = s & (1 << u);
                    }
                    Value::Rel(r)
                }
            };
            out.push(value);
        }
    }
}

fn compose(n: usize, a: &Rel, b: &Rel) -> Rel {
    let mut r = [0; MAX_WORLDS];
    for u in 0..n {
        for v in 0..n {
            if a[u] >> v & 1 == 1 {
                r[u] |= b[v];
            }
        }
    }
    r
}

/// Searches all structures with up to `max_worlds` worlds, fewest worlds
/// first, for one where `phi` holds at world 0. Finding nothing says
/// nothing about satisfiability.
pub fn bounded_sat(phi: &Formula, budget: &OracleBudget) -> Result<Option<ExtractedModel>, OracleError> {
    if budget.max_worlds > MAX_WORLDS {
        return Err(OracleError::TooManyWorlds);
    }
    let space = budget.space();
    if space > budget.cap as u128 {
        return Err(OracleError::CapExceeded(space, budget.cap));
    }
    let (compiled, root) = Compiled::new(phi, budget)?;
    let programs = budget.programs.len();
    let variables = budget.variables.len();
    let mut out = Vec::with_capacity(compiled.ops.len());
    let mut rels = vec![[0 as Set; MAX_WORLDS]; programs];
    let mut vals = vec![0 as Set; variables];
    for n in 1..=budget.max_worlds {
        let rel_bits = n * n * programs;
        let val_bits = n * variables;
        for rel_mask in 0u64..1 << rel_bits {
            for (k, rows) in rels.iter_mut().enumerate() {
                for (u, row) in rows.iter_mut().enumerate().take(n) {
                    *row = rel_mask >> (k * n * n + u * n) & ((1 << n) - 1);
                }
            }
            for val_mask in 0u64..1 << val_bits {
                for (v, set) in vals.iter_mut().enumerate() {
                    *set = val_mask >> (v * n) & ((1 << n) - 1);
                }
                compiled.eval(n, &rels, &vals, &mut out);
                if matches!(out[root], Value::Set(s) if s & 1 == 1) {
                    return Ok(Some(to_model(n, budget, &rels, &vals)));
                }
            }
        }
    }
    Ok(None)
}

fn to_model(n: usize, budget: &OracleBudget, rels: &[Rel], vals: &[Set]) -> ExtractedModel {
    let mut model = ExtractedModel::new(n);
    for (k, program) in budget.programs.iter().enumerate() {
        for u in 0..n {
            for v in 0..n {
                if rels[k][u] >> v & 1 == 1 {
                    model.add_edge(program.clone(), u, v);
                }
            }
        }
    }
    for (i, var) in budget.variables.iter().enumerate() {
        model.valuation.entry(var.clone()).or_default();
        for w in 0..n {
            if vals[i] >> w & 1 == 1 {
                model.set_true(var.clone(), w);
            }
        }
    }
    model
}

const MAX_STAR_NESTING: usize = 2;

/// A random NNF formula over programs `a`, `b` and variables `p`, `q` of
/// exactly `size`, deterministic in `seed`.
pub fn random_formula(seed: u64, size: usize) -> Formula {
    assert!(size >= 1, "formulas have size at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_formula(&mut rng, size, 0)
}

fn gen_formula(rng: &mut ChaCha8Rng, size: usize, stars: usize) -> Formula {
    match size {
        0 => unreachable!("sizes are positive"),
        1 => {
            let name = if rng.random_bool(0.5) { "p" } else { "q" };
            if rng.random_bool(0.5) {
                Formula::var(name)
            } else {
                Formula::neg_var(name)
            }
        }
        _ => {
            let binary = size >= 3 && rng.random_bool(0.5);
            if binary {
                let left = rng.random_range(1..=size - 2);
                let l = gen_formula(rng, left, stars);
                let r = gen_formula(rng, size - 1 - left, stars);
                if rng.random_bool(0.5) {
                    Formula::and(l, r)
                } else {
                    Formula::or(l, r)
                }
            } else {
                let program_size = rng.random_range(1..=(size - 1).min(4));
                let g = gen_program(rng, program_size, stars);
                let body = gen_formula(rng, size - program_size, stars);
                if rng.random_bool(0.5) {
                    Formula::diamond(g, body)
                } else {
                    Formula::boxed(g, body)
                }
            }
        }
    }
}

fn gen_program(rng: &mut ChaCha8Rng, size: usize, stars: usize) -> Program {
    let can_star = stars < MAX_STAR_NESTING;
    if size == 1 {
        let name = if rng.random_bool(0.5) { "a" } else { "b" };
        return if rng.random_bool(0.25) {
            Program::converse_atom(name)
        } else {
            Program::atom(name)
        };
    }
    // Weights: seq 3, choice 3, star 3, test 1, restricted by size.
    let mut choices = Vec::new();
    if size >= 3 {
        choices.extend([0, 0, 0, 1, 1, 1]);
    }
    if can_star {
        choices.extend([2, 2, 2]);
    }
    choices.push(3);
    match choices[rng.random_range(0..choices.len())] {
        kind @ (0 | 1) => {
            let left = rng.random_range(1..=size - 2);
            let a = gen_program(rng, left, stars);
            let b = gen_program(rng, size - 1 - left, stars);
            if kind == 0 {
                Program::seq(a, b)
            } else {
                Program::choice(a, b)
            }
        }
        2 => Program::star(gen_program(rng, size - 1, stars + 1)),
        _ => Program::test(gen_formula(rng, size - 1, stars)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, render};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn toy_formula_has_a_one_world_model() {
        let phi = f("<a><a*>[a^]p");
        let m = bounded_sat(&phi, &OracleBudget::for_formula(&phi)).unwrap().unwrap();
        assert_eq!(m.worlds, 1);
        assert!(m.relations[&AtomicProgram::new("a").unwrap()].contains(&(0, 0)));
        assert!(m.valuation[&Symbol::new("p")].contains(&0));
        assert!(m.model_check(0, &phi));
    }

    #[test]
    fn contradiction_has_none() {
        let phi = f("p & ~p");
        assert_eq!(bounded_sat(&phi, &OracleBudget::for_formula(&phi)).unwrap(), None);
        let psi = f("<a>p");
        let m = bounded_sat(&psi, &OracleBudget::for_formula(&psi)).unwrap().unwrap();
        assert_eq!(m.worlds, 1);
    }

    #[test]
    fn budget_errors() {
        let phi = f("<a>p & <b>q");
        let mut budget = OracleBudget::for_formula(&phi);
        assert_eq!(budget.max_worlds, 2);
        budget.max_worlds = 4;
        assert!(matches!(bounded_sat(&phi, &budget), Err(OracleError::CapExceeded(..))));
        let narrow = OracleBudget::for_formula(&f("<a>p"));
        assert_eq!(bounded_sat(&phi, &narrow), Err(OracleError::OutsideBudget("b".into())));
    }

    #[test]
    fn constants() {
        let top = Formula::top();
        assert!(bounded_sat(&top, &OracleBudget::for_formula(&top)).unwrap().is_some());
        let bottom = Formula::bottom();
        assert!(bounded_sat(&bottom, &OracleBudget::for_formula(&bottom)).unwrap().is_none());
    }

    #[test]
    fn generator_is_deterministic_and_sized() {
        assert_eq!(random_formula(3, 9), random_formula(3, 9));
        assert_eq!(random_formula(1, 1).size(), 1);
        for seed in 0..200 {
            for size in 1..=12 {
                let phi = random_formula(seed, size);
                assert_eq!(phi.size(), size, "{phi}");
                let (vars, programs) = phi.atoms();
                assert!(vars.len() <= 2 && programs.len() <= 2);
            }
        }
    }

    #[test]
    fn golden_sample() {
        assert_eq!(render(&random_formula(7, 10)), GOLDEN);
    }

    const GOLDEN: &str = "<b>q & [b^*](<a>q & <a>p)";
}
