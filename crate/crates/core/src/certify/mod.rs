//! Certificates for satisfiable verdicts: a model read off the final
//! tableau, a model checker, and the Hintikka conditions.

mod extract;
mod hintikka;
mod model;

pub use extract::{extract_model, ExtractError};
pub use hintikka::{check_hintikka, find_fulfilling_chain, Condition, FulfillingChain, HintikkaViolation};
pub use model::{ExtractedModel, ModelParseError, Relation};

use crate::formula::Formula;
use crate::tableau::Solver;

/// Outcome of checking one satisfiable verdict.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub model: ExtractedModel,
    /// Input formulas that fail at world 0.
    pub refuted: Vec<Formula>,
    pub hintikka: Result<(), HintikkaViolation>,
}

impl Certificate {
    pub fn is_valid(&self) -> bool {
        self.refuted.is_empty() && self.hintikka.is_ok()
    }
}

/// Extracts a model from a solved tableau and checks it against every
/// input formula.
pub fn certify(solver: &Solver) -> Result<Certificate, ExtractError> {
    let model = extract_model(solver)?;
    let refuted = solver
        .inputs()
        .iter()
        .filter(|phi| !model.model_check(0, phi))
        .cloned()
        .collect();
    let hintikka = solver.inputs().iter().try_for_each(|phi| check_hintikka(&model, phi));
    Ok(Certificate { model, refuted, hintikka })
}
