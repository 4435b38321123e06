//! The and-or graph tableau and the procedures that build and label it.

pub mod engine;
pub mod graph;
pub mod table;

pub mod invariants;
pub mod scheduler;

pub use engine::{EngineError, Tableau};
pub use scheduler::{is_sat, Mode, Outcome, Resource, Rule, RuleCounts, Solver, SolverConfig, SolverError, TraceEvent};
pub use graph::{AltSets, EdgeLabel, Graph, GraphError, Node, NodeId, NodeKind, PrsEntry, PrsMap, Status};
pub use table::{FormulaId, FormulaSet, FormulaTable, Shape};
