//! Acceptance suite. Run with `--nocapture` to see one line per criterion.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use cpdl::certify::certify;
use cpdl::corpus::{self, random_entries, validities};
use cpdl::formula::Formula;
use cpdl::oracle::{bounded_sat, random_formula, OracleBudget};
use cpdl::syntax::{parse_formula, to_nnf, SurfaceFormula};
use cpdl::tableau::{AltSets, Mode, NodeId, Outcome, PrsEntry, PrsMap, Rule, Solver, SolverConfig, Status};

/// Wall-clock limit for a single small formula.
const SMALL_FORMULA_LIMIT: Duration = Duration::from_secs(1);
/// Wall-clock limit for the whole oracle differential.
const DIFFERENTIAL_LIMIT: Duration = Duration::from_secs(120);
/// Per-formula budget so that a runaway solve shows up as a failure.
const PER_FORMULA_TIMEOUT: Duration = Duration::from_secs(20);
/// Number of random formulas in the differential and metamorphic suites.
const RANDOM_FORMULAS: usize = 500;
/// Largest random formula size.
const MAX_RANDOM_SIZE: usize = 12;
/// Size of the formulas mixed in by the metamorphic relations.
const MIXIN_SIZE: usize = 5;

fn config(mode: Mode) -> SolverConfig {
    SolverConfig { mode, timeout: Some(PER_FORMULA_TIMEOUT), ..SolverConfig::default() }
}

fn solve(phi: &Formula, config: SolverConfig) -> (Outcome, Solver) {
    let mut solver = Solver::new(phi, config);
    let outcome = solver.solve().expect("solver error");
    (outcome, solver)
}

fn verdict(phi: &Formula) -> Outcome {
    solve(phi, config(Mode::Queue)).0
}

fn n(k: usize) -> NodeId {
    NodeId::from_number(k)
}

fn random_formulas() -> Vec<Formula> {
    let formulas: Vec<Formula> = random_entries()
        .iter()
        .take(RANDOM_FORMULAS)
        .map(|e| e.formula().unwrap())
        .collect();
    assert_eq!(formulas.len(), RANDOM_FORMULAS);
    assert!(formulas.iter().all(|f| f.size() <= MAX_RANDOM_SIZE));
    formulas
}

struct Outcomes(Vec<(u8, String, Result<String, String>)>);

impl Outcomes {
    fn record(&mut self, id: u8, title: &str, result: Result<String, String>) {
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] criterion {id}: {title}: {detail}");
        self.0.push((id, title.to_string(), result));
    }
}

fn criterion_1() -> Result<String, String> {
    let phi = parse_formula("<a><a*>[a^]p").unwrap();
    let start = Instant::now();
    let (outcome, _) = solve(&phi, config(Mode::Queue));
    let elapsed = start.elapsed();
    if outcome != Outcome::Sat || elapsed >= SMALL_FORMULA_LIMIT {
        return Err(format!("{outcome:?} in {elapsed:?}"));
    }

    let body = parse_formula("<a*>[a^]p").unwrap();
    let trace_config = SolverConfig { trace: true, ..config(Mode::Queue) };
    let mut solver = Solver::rooted_at_state(&[body, phi.clone()], trace_config);
    if solver.solve().unwrap() != Outcome::Sat {
        return Err("rooted run is not SAT".into());
    }
    let graph = solver.tableau().graph();
    let table = solver.tableau().table();
    let diamond = table.id(&phi).unwrap();
    let p = table.set_of([&parse_formula("p").unwrap()]);
    let pairs = |nodes: &[usize]| PrsEntry::Rescuers(nodes.iter().map(|&k| (n(k), diamond)).collect());
    let history = |k: usize| -> Vec<Status> {
        solver
            .trace()
            .iter()
            .filter(|e| matches!(e.rule, Rule::Define(x) | Rule::Update(x) if x == n(k)))
            .map(|e| e.status.clone())
            .collect()
    };

    let mut problems = Vec::new();
    if graph.node(n(3)).sts != Status::Closed(AltSets::from([p.clone()])) {
        problems.push("node 3 is not closed({{p}})".to_string());
    }
    let four = history(4);
    let four_ok = four.len() == 2
        && four.iter().zip([&[1][..], &[1, 6][..]]).all(|(s, nodes)| {
            s.alt() == Some(&AltSets::new())
                && s.prs().is_some_and(|prs| prs.get(&diamond) == Some(&pairs(nodes)))
        });
    if !four_ok {
        problems.push(format!("node 4 history {four:?}"));
    }
    let one = history(1);
    let expected_one = vec![
        Status::Open(PrsMap::from([(diamond, pairs(&[]))]), AltSets::from([p.clone()])),
        Status::Open(PrsMap::from([(diamond, pairs(&[6]))]), AltSets::from([p])),
    ];
    if one != expected_one {
        problems.push(format!("node 1 history {one:?}"));
    }
    for k in [9, 10, 11] {
        if !graph.node(n(k)).sts.fulfils_all() {
            problems.push(format!("node {k} is not fulfilled"));
        }
    }
    let order = [5, 3, 4, 2, 1, 9, 8, 7, 6, 10, 11];
    let stamps: Vec<Option<u32>> = order.iter().map(|&k| graph.node(n(k)).idx).collect();
    let expected: Vec<Option<u32>> = (1..=11).map(Some).collect();
    if graph.len() != 11 || stamps != expected {
        problems.push(format!("{} nodes, time stamps {stamps:?}", graph.len()));
    }
    if problems.is_empty() {
        Ok(format!("SAT in {elapsed:?}; statuses and time stamps 5,3,4,2,1,9,8,7,6,10,11 reproduced"))
    } else {
        Err(problems.join("; "))
    }
}

fn criterion_2() -> Result<String, String> {
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    let all = validities();
    for (name, text) in &all {
        let negation = parse_formula(&format!("~({text})")).unwrap();
        let start = Instant::now();
        let outcome = verdict(&negation);
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        if outcome != Outcome::Unsat || elapsed >= SMALL_FORMULA_LIMIT {
            failures.push(format!("{name}: {outcome:?} in {elapsed:?}"));
        }
    }
    if failures.is_empty() {
        Ok(format!("{} negated validities UNSAT, slowest {slowest:?}", all.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_3() -> Result<String, String> {
    let mut checked = 0;
    let mut failures = Vec::new();
    for entry in corpus::builtin() {
        let phi = entry.formula().unwrap();
        let (outcome, solver) = solve(&phi, config(Mode::Queue));
        if outcome != Outcome::Sat {
            continue;
        }
        checked += 1;
        match certify(&solver) {
            Ok(cert) if cert.is_valid() => {}
            Ok(cert) => failures.push(format!("{}: {:?} {:?}", entry.name, cert.refuted, cert.hintikka)),
            Err(e) => failures.push(format!("{}: {e}", entry.name)),
        }
    }
    if failures.is_empty() {
        Ok(format!("{checked} SAT verdicts certified, 0 failures"))
    } else {
        Err(format!("{} failures: {}", failures.len(), failures.join("; ")))
    }
}

fn criterion_4(formulas: &[Formula]) -> Result<String, String> {
    let start = Instant::now();
    let mut found = 0;
    let mut disagreements = Vec::new();
    for phi in formulas {
        let model = bounded_sat(phi, &OracleBudget::for_formula(phi)).map_err(|e| e.to_string())?;
        if let Some(model) = model {
            found += 1;
            if !model.model_check(0, phi) {
                disagreements.push(format!("oracle model does not satisfy {phi}"));
            }
            let outcome = verdict(phi);
            if outcome != Outcome::Sat {
                disagreements.push(format!("{phi}: oracle model, solver {outcome:?}"));
            }
        }
    }
    let elapsed = start.elapsed();
    if !disagreements.is_empty() {
        return Err(format!("{} disagreements: {}", disagreements.len(), disagreements.join("; ")));
    }
    if elapsed >= DIFFERENTIAL_LIMIT {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{found}/{} formulas with a small model, all SAT, 100% agreement in {elapsed:?}", formulas.len()))
}

fn criterion_5() -> Result<String, String> {
    let entries = corpus::builtin();
    let mut failures = Vec::new();
    for entry in &entries {
        let phi = entry.formula().unwrap();
        let queue = verdict(&phi);
        let naive = solve(&phi, config(Mode::Naive)).0;
        if queue != naive || matches!(queue, Outcome::Resource(_)) {
            failures.push(format!("{}: queue {queue:?}, naive {naive:?}", entry.name));
        }
    }
    let root = parse_formula("<a><a*>[a^]p").unwrap();
    let body = parse_formula("<a*>[a^]p").unwrap();
    let updates = |mode| {
        let mut solver = Solver::rooted_at_state(&[body.clone(), root.clone()], config(mode));
        solver.solve().unwrap();
        solver.counts().update
    };
    let (q, nv) = (updates(Mode::Queue), updates(Mode::Naive));
    if q > nv {
        failures.push(format!("toy trace: queue {q} Rule 3 applications, naive {nv}"));
    }
    if failures.is_empty() {
        Ok(format!("{} corpus verdicts identical; toy trace Rule 3: queue {q} <= naive {nv}", entries.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_6() -> Result<String, String> {
    let mut steps = 0u64;
    let mut runs = 0;
    let mut failures = Vec::new();
    let checked = |mode| SolverConfig { check_invariants: true, ..config(mode) };
    for entry in corpus::builtin() {
        let phi = entry.formula().unwrap();
        for mode in [Mode::Queue, Mode::Naive] {
            let (_, solver) = solve(&phi, checked(mode));
            runs += 1;
            let c = solver.counts();
            steps += c.expand + c.define + c.update + c.close_unfulfilled;
            if let Some(v) = solver.violations().first() {
                failures.push(format!("{} ({mode:?}): {v} and {} more", entry.name, solver.violations().len() - 1));
            }
        }
    }
    let root = parse_formula("<a><a*>[a^]p").unwrap();
    let body = parse_formula("<a*>[a^]p").unwrap();
    let mut solver = Solver::rooted_at_state(&[body, root], checked(Mode::Queue));
    solver.solve().unwrap();
    if let Some(v) = solver.violations().first() {
        failures.push(format!("toy trace: {v}"));
    }
    if failures.is_empty() {
        Ok(format!("{runs} runs, {steps} rule applications checked, 0 violations"))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_7(formulas: &[Formula]) -> Result<String, String> {
    let mut violations = Vec::new();
    let mut implications = 0;
    for (i, phi) in formulas.iter().enumerate() {
        let base = verdict(phi);
        let double = to_nnf(&SurfaceFormula::not(SurfaceFormula::from_nnf(&phi.negate())));
        let again = verdict(&double);
        if again != base {
            violations.push(format!("{phi}: {base:?} but double negation {again:?}"));
        }
        let psi = random_formula(100_000 + i as u64, MIXIN_SIZE);
        match base {
            Outcome::Unsat => {
                implications += 1;
                let joint = verdict(&Formula::and(phi.clone(), psi.clone()));
                if joint != Outcome::Unsat {
                    violations.push(format!("{phi} UNSAT but conjunction with {psi} {joint:?}"));
                }
            }
            Outcome::Sat => {
                implications += 1;
                let joint = verdict(&Formula::or(phi.clone(), psi.clone()));
                if joint != Outcome::Sat {
                    violations.push(format!("{phi} SAT but disjunction with {psi} {joint:?}"));
                }
            }
            Outcome::Resource(_) => violations.push(format!("{phi}: out of budget")),
        }
    }
    if violations.is_empty() {
        Ok(format!("{} formulas, {implications} implications checked, 0 violations", formulas.len()))
    } else {
        Err(format!("{} violations: {}", violations.len(), violations.join("; ")))
    }
}

#[test]
fn acceptance() {
    let formulas = random_formulas();
    let distinct: BTreeSet<&Formula> = formulas.iter().collect();
    println!("random suite: {} formulas, {} distinct", formulas.len(), distinct.len());
    let mut outcomes = Outcomes(Vec::new());
    outcomes.record(1, "toy trace regression", criterion_1());
    outcomes.record(2, "validity suite", criterion_2());
    outcomes.record(3, "certification", criterion_3());
    outcomes.record(4, "oracle differential", criterion_4(&formulas));
    outcomes.record(5, "scheduler differential", criterion_5());
    outcomes.record(6, "structural invariants", criterion_6());
    outcomes.record(7, "metamorphic relations", criterion_7(&formulas));
    let failed: Vec<String> = outcomes
        .0
        .iter()
        .filter(|(_, _, r)| r.is_err())
        .map(|(id, title, _)| format!("{id} ({title})"))
        .collect();
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
