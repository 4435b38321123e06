//! The benchmark corpus: the toy example, negated axioms, chains that
//! mix a program with its converse, and seeded random formulas.
//!
//! Each entry is also shipped as a file under `corpus/` in the
//! repository, one formula per file with an optional `# expect:` line.

use std::fs;
use std::io;
use std::path::Path;

use crate::formula::Formula;
use crate::oracle::random_formula;
use crate::syntax::{parse_formula, render, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    Sat,
    Unsat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub name: String,
    pub text: String,
    pub expect: Option<Expect>,
}

impl Entry {
    fn new(name: impl Into<String>, text: impl Into<String>, expect: Option<Expect>) -> Self {
        Entry { name: name.into(), text: text.into(), expect }
    }

    pub fn formula(&self) -> Result<Formula, ParseError> {
        parse_formula(&self.text)
    }

    /// File contents: header comments, then the formula.
    pub fn to_file(&self) -> String {
        let expect = match self.expect {
            Some(Expect::Sat) => "# expect: sat\n",
            Some(Expect::Unsat) => "# expect: unsat\n",
            None => "",
        };
        format!("# {}\n{expect}{}\n", self.name, self.text)
    }

    pub fn from_file(name: &str, contents: &str) -> Self {
        let expect = contents.lines().find_map(|line| match line.trim() {
            "# expect: sat" => Some(Expect::Sat),
            "# expect: unsat" => Some(Expect::Unsat),
            _ => None,
        });
        Entry::new(name, contents.to_string(), expect)
    }
}

/// Star axioms for each program, the composite program axioms, the two
/// converse axioms and induction. Each is valid, so its negation is
/// unsatisfiable.
pub fn validities() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (tag, g) in [("a", "a"), ("seq", "(a;b)"), ("choice", "(a + b)")] {
        out.push((format!("star-diamond-{tag}"), format!("<{g}*>p <-> p | <{g}><{g}*>p")));
        out.push((format!("star-box-{tag}"), format!("[{g}*]p <-> p & [{g}][{g}*]p")));
    }
    out.push(("seq".into(), "<a;b>p <-> <a><b>p".into()));
    out.push(("choice".into(), "<a + b>p <-> <a>p | <b>p".into()));
    out.push(("test".into(), "<q?>p <-> q & p".into()));
    out.push(("converse-forward".into(), "p -> [a]<a^>p".into()));
    out.push(("converse-backward".into(), "p -> [a^]<a>p".into()));
    out.push(("induction".into(), "[a*](p -> [a]p) -> (p -> [a*]p)".into()));
    out
}

/// Number of random formulas in the corpus.
pub const RANDOM_COUNT: u64 = 500;

/// Size of the `i`-th random formula, cycling through 1 to 12.
pub fn random_size(i: u64) -> usize {
    1 + (i % 12) as usize
}

pub fn random_entries() -> Vec<Entry> {
    (0..RANDOM_COUNT)
        .map(|i| Entry::new(format!("random-{i:03}"), render(&random_formula(i, random_size(i))), None))
        .collect()
}

fn chains() -> Vec<Entry> {
    let mut out = Vec::new();
    for k in 1..=6 {
        let forward = "<a>".repeat(k);
        let back = "[a^]".repeat(k);
        out.push(Entry::new(format!("chain-back-{k}"), format!("{forward}{back}p"), Some(Expect::Sat)));
        out.push(Entry::new(
            format!("chain-back-clash-{k}"),
            format!("({forward}{back}p) & ~p"),
            Some(Expect::Unsat),
        ));
        let stars = "<a*>".repeat(k);
        out.push(Entry::new(
            format!("star-nest-{k}"),
            format!("{stars}<a>[a^]p & [a*]~p"),
            Some(Expect::Unsat),
        ));
        out.push(Entry::new(
            format!("star-nest-sat-{k}"),
            format!("{stars}<a>[a^]p & ~p"),
            Some(Expect::Sat),
        ));
    }
    out.push(Entry::new("back-star-clash", "<a*>[a^*]~p & p", Some(Expect::Unsat)));
    out.push(Entry::new("back-star", "[a*]<a^*>p & ~p", Some(Expect::Sat)));
    out.push(Entry::new("loop", "[a*]<a>true & p", Some(Expect::Sat)));
    out.push(Entry::new("branching", "[a*](<a>p & <a>~p)", Some(Expect::Sat)));
    out.push(Entry::new("unreachable", "<a*>~p & [a*]p", Some(Expect::Unsat)));
    out
}

/// The whole corpus in a fixed order.
pub fn builtin() -> Vec<Entry> {
    let mut out = vec![Entry::new("toy", "<a><a*>[a^]p", Some(Expect::Sat))];
    for (name, text) in validities() {
        out.push(Entry::new(format!("valid-{name}"), format!("~({text})"), Some(Expect::Unsat)));
    }
    out.extend(chains());
    out.extend(random_entries());
    out
}

/// Reads every `*.cpdl` file of a directory, sorted by name.
pub fn load_dir(dir: &Path) -> io::Result<Vec<Entry>> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cpdl"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(Entry::from_file(&name, &fs::read_to_string(p)?))
        })
        .collect()
}

/// Writes the built-in corpus as one file per entry.
pub fn write_dir(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for entry in builtin() {
        fs::write(dir.join(format!("{}.cpdl", entry.name)), entry.to_file())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shipped_dir() -> std::path::PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
    }

    #[test]
    fn every_entry_parses() {
        for entry in builtin() {
            entry.formula().unwrap_or_else(|e| panic!("{}: {e}", entry.name));
        }
    }

    #[test]
    fn shipped_files_match() {
        let dir = shipped_dir();
        if std::env::var_os("CPDL_WRITE_CORPUS").is_some() {
            write_dir(&dir).unwrap();
        }
        let mut shipped: Vec<(String, Formula, Option<Expect>)> = load_dir(&dir)
            .unwrap()
            .into_iter()
            .map(|e| (e.name.clone(), e.formula().unwrap(), e.expect))
            .collect();
        let mut built: Vec<(String, Formula, Option<Expect>)> =
            builtin().into_iter().map(|e| (e.name.clone(), e.formula().unwrap(), e.expect)).collect();
        shipped.sort_by(|a, b| a.0.cmp(&b.0));
        built.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(shipped, built);
    }
}
