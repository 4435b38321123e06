use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::formula::{AtomicProgram, Formula, FormulaNode, Program, ProgramNode, Symbol};
use crate::tableau::NodeId;

/// A finite Kripke structure with worlds `0..len`. World 0 is the one the
/// input formula is claimed to hold at.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExtractedModel {
    pub worlds: usize,
    pub relations: BTreeMap<AtomicProgram, BTreeSet<(usize, usize)>>,
    pub valuation: BTreeMap<Symbol, BTreeSet<usize>>,
    /// Tableau labels, empty for models that did not come from a tableau.
    pub labels: Vec<BTreeSet<Formula>>,
    /// The tableau state behind each world, when there is one.
    pub nodes: Vec<Option<NodeId>>,
}

/// A binary relation over the worlds of a model, one bitset row per world.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation(Vec<FixedBitSet>);

impl Relation {
    fn empty(n: usize) -> Self {
        Relation(vec![FixedBitSet::with_capacity(n); n])
    }

    fn identity(n: usize) -> Self {
        let mut r = Relation::empty(n);
        for (i, row) in r.0.iter_mut().enumerate() {
            row.insert(i);
        }
        r
    }

    pub fn contains(&self, from: usize, to: usize) -> bool {
        self.0[from].contains(to)
    }

    pub fn successors(&self, from: usize) -> impl Iterator<Item = usize> + '_ {
        self.0[from].ones()
    }

    pub fn pairs(&self) -> BTreeSet<(usize, usize)> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.ones().map(move |j| (i, j)))
            .collect()
    }

    fn compose(&self, other: &Relation) -> Relation {
        let mut out = Relation::empty(self.0.len());
        for (i, row) in self.0.iter().enumerate() {
            for j in row.ones() {
                out.0[i].union_with(&other.0[j]);
            }
        }
        out
    }

    fn union_with(&mut self, other: &Relation) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.union_with(b);
        }
    }

    /// Reflexive-transitive closure by repeated squaring.
    fn star(&self) -> Relation {
        let mut r = Relation::identity(self.0.len());
        r.union_with(self);
        loop {
            let next = r.compose(&r);
            if next == r {
                return r;
            }
            r = next;
        }
    }
}

impl ExtractedModel {
    pub fn new(worlds: usize) -> Self {
        ExtractedModel {
            worlds,
            ..ExtractedModel::default()
        }
    }

    pub fn add_edge(&mut self, program: AtomicProgram, from: usize, to: usize) {
        self.relations.entry(program).or_default().insert((from, to));
    }

    pub fn set_true(&mut self, var: Symbol, world: usize) {
        self.valuation.entry(var).or_default().insert(world);
    }

    pub fn program_relation(&self, program: &Program) -> Relation {
        Evaluator::new(self).relation(program)
    }

    pub fn model_check(&self, world: usize, phi: &Formula) -> bool {
        Evaluator::new(self).holds(phi).contains(world)
    }

    /// Worlds where `phi` holds.
    pub fn extension(&self, phi: &Formula) -> BTreeSet<usize> {
        Evaluator::new(self).holds(phi).ones().collect()
    }

    /// Line-based text form: `world`, `val` and `rel` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# world 0 is the initial world\n");
        for w in 0..self.worlds {
            match self.nodes.get(w).copied().flatten() {
                Some(node) => writeln!(out, "world {w} # state {node}"),
                None => writeln!(out, "world {w}"),
            }
            .unwrap();
        }
        for (var, worlds) in &self.valuation {
            write!(out, "val {var}").unwrap();
            for w in worlds {
                write!(out, " {w}").unwrap();
            }
            out.push('\n');
        }
        for (program, pairs) in &self.relations {
            for (u, v) in pairs {
                writeln!(out, "rel {} {u} {v}", program.name()).unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelParseError> {
        let mut model = ExtractedModel::default();
        let mut declared = BTreeSet::new();
        let mut used = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let mut words = content.split_whitespace();
            let Some(keyword) = words.next() else { continue };
            let err = |message: String| ModelParseError { line, message };
            let world = |s: &str| s.parse::<usize>().map_err(|_| err(format!("`{s}` is not a world id")));
            let args: Vec<&str> = words.collect();
            match keyword {
                "world" => {
                    let [id] = args[..] else { return Err(err("expected `world <id>`".into())) };
                    declared.insert(world(id)?);
                }
                "val" => {
                    let Some((var, ids)) = args.split_first() else {
                        return Err(err("expected `val <var> <id>...`".into()));
                    };
                    model.valuation.entry(Symbol::new(var)).or_default();
                    for id in ids {
                        let w = world(id)?;
                        used.push((line, w));
                        model.set_true(Symbol::new(var), w);
                    }
                }
                "rel" => {
                    let [program, u, v] = args[..] else {
                        return Err(err("expected `rel <prog> <id> <id>`".into()));
                    };
                    let program = AtomicProgram::new(program).map_err(|e| err(e.to_string()))?;
                    let (u, v) = (world(u)?, world(v)?);
                    used.push((line, u));
                    used.push((line, v));
                    model.add_edge(program, u, v);
                }
                other => return Err(err(format!("unknown keyword `{other}`"))),
            }
        }
        let n = declared.len();
        if declared.iter().copied().ne(0..n) {
            return Err(ModelParseError { line: 0, message: "worlds must be numbered 0 to n-1".into() });
        }
        if let Some(&(line, w)) = used.iter().find(|(_, w)| *w >= n) {
            return Err(ModelParseError { line, message: format!("world {w} is not declared") });
        }
        model.worlds = n;
        Ok(model)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ModelParseError {
    pub line: usize,
    pub message: String,
}

/// Bottom-up evaluation with per-subterm memoisation.
struct Evaluator<'m> {
    model: &'m ExtractedModel,
    formulas: HashMap<Formula, FixedBitSet>,
    programs: HashMap<Program, Relation>,
}

impl<'m> Evaluator<'m> {
    fn new(model: &'m ExtractedModel) -> Self {
        Evaluator {
            model,
            formulas: HashMap::new(),
            programs: HashMap::new(),
        }
    }

    fn n(&self) -> usize {
        self.model.worlds
    }

    fn holds(&mut self, phi: &Formula) -> FixedBitSet {
        if let Some(set) = self.formulas.get(phi) {
            return set.clone();
        }
        let n = self.n();
        let var_set = |p: &Symbol| {
            let mut s = FixedBitSet::with_capacity(n);
            if let Some(ws) = self.model.valuation.get(p) {
                ws.iter().for_each(|&w| s.insert(w));
            }
            s
        };
        let set = match phi.node() {
            FormulaNode::Var(p) => var_set(p),
            FormulaNode::NegVar(p) => {
                let mut s = var_set(p);
                s.toggle_range(..);
                s
            }
            FormulaNode::And(l, r) => {
                let mut s = self.holds(l);
                s.intersect_with(&self.holds(r));
                s
            }
            FormulaNode::Or(l, r) => {
                let mut s = self.holds(l);
                s.union_with(&self.holds(r));
                s
            }
            FormulaNode::Diamond(g, body) => {
                let target = self.holds(body);
                let rel = self.relation(g);
                let mut s = FixedBitSet::with_capacity(n);
                for w in 0..n {
                    s.set(w, !rel.0[w].is_disjoint(&target));
                }
                s
            }
            FormulaNode::Box(g, body) => {
                let target = self.holds(body);
                let rel = self.relation(g);
                let mut s = FixedBitSet::with_capacity(n);
                for w in 0..n {
                    s.set(w, rel.0[w].is_subset(&target));
                }
                s
            }
        };
        self.formulas.insert(phi.clone(), set.clone());
        set
    }

    fn relation(&mut self, program: &Program) -> Relation {
        if let Some(r) = self.programs.get(program) {
            return r.clone();
        }
        let n = self.n();
        let r = match program.node() {
            ProgramNode::Literal(l) => {
                let mut r = Relation::empty(n);
                if let Some(pairs) = self.model.relations.get(&l.base) {
                    for &(u, v) in pairs {
                        if l.converse {
                            r.0[v].insert(u);
                        } else {
                            r.0[u].insert(v);
                        }
                    }
                }
                r
            }
            ProgramNode::Seq(a, b) => self.relation(a).compose(&self.relation(b)),
            ProgramNode::Choice(a, b) => {
                let mut r = self.relation(a);
                r.union_with(&self.relation(b));
                r
            }
            ProgramNode::Star(a) => self.relation(a).star(),
            ProgramNode::Test(psi) => {
                let holds = self.holds(psi);
                let mut r = Relation::empty(n);
                for w in holds.ones() {
                    r.0[w].insert(w);
                }
                r
            }
        };
        self.programs.insert(program.clone(), r.clone());
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    fn a() -> AtomicProgram {
        AtomicProgram::new("a").unwrap()
    }

    fn loop_model() -> ExtractedModel {
        let mut m = ExtractedModel::new(1);
        m.add_edge(a(), 0, 0);
        m.set_true(Symbol::new("p"), 0);
        m
    }

    #[test]
    fn toy_formula_on_a_loop() {
        let m = loop_model();
        assert!(m.model_check(0, &parse_formula("<a><a*>[a^]p").unwrap()));
        assert!(!m.model_check(0, &parse_formula("<a>~p").unwrap()));
    }

    #[test]
    fn vacuous_box_and_tests() {
        let m = ExtractedModel::new(1);
        assert!(m.model_check(0, &parse_formula("[a]q").unwrap()));
        let mut m = ExtractedModel::new(2);
        m.set_true(Symbol::new("p"), 0);
        m.set_true(Symbol::new("q"), 0);
        m.set_true(Symbol::new("q"), 1);
        let test = parse_formula("<p?>q").unwrap();
        let conj = parse_formula("p & q").unwrap();
        assert_eq!(m.extension(&test), m.extension(&conj));
    }

    #[test]
    fn relations() {
        let mut m = ExtractedModel::new(3);
        m.add_edge(a(), 0, 1);
        m.add_edge(a(), 1, 0);
        let b = AtomicProgram::new("b").unwrap();
        m.add_edge(b.clone(), 1, 2);
        let conv = m.program_relation(&Program::converse_atom("a"));
        assert_eq!(conv.pairs(), BTreeSet::from([(1, 0), (0, 1)]));
        let star = m.program_relation(&Program::star(Program::atom("a")));
        assert_eq!(star.pairs(), BTreeSet::from([(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)]));
        let seq = Program::choice(Program::seq(Program::atom("a"), Program::atom("b")), Program::atom("c"));
        assert_eq!(m.program_relation(&seq).pairs(), BTreeSet::from([(0, 2)]));
    }

    #[test]
    fn text_round_trip() {
        let mut m = loop_model();
        m.worlds = 2;
        m.add_edge(AtomicProgram::new("b").unwrap(), 1, 0);
        let text = m.to_text();
        assert_eq!(ExtractedModel::from_text(&text).unwrap(), ExtractedModel { nodes: vec![], ..m });
        let err = ExtractedModel::from_text("world 0\nrel a 0 3\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(ExtractedModel::from_text("world 1\n").is_err());
        assert!(ExtractedModel::from_text("wrld 0\n").is_err());
    }
}
