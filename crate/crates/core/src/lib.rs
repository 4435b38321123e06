//! Satisfiability checking for propositional dynamic logic with converse
//! (CPDL) using a cut-free tableau with on-the-fly cycle resolution.

pub mod certify;
pub mod corpus;
pub mod formula;
pub mod oracle;
pub mod report;
pub mod syntax;
pub mod tableau;
