use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::model::ExtractedModel;
use crate::formula::{FormulaNode, LiteralProgram};
use crate::tableau::{EdgeLabel, Graph, NodeId, NodeKind, Shape, Solver};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("the root is not open")]
    RootNotOpen,
    #[error("no open state holds the input")]
    NoInitialWorld,
}

/// Open states reachable from `start` through open non-states, stepping
/// out of a special node along its cs-edge. Zero intermediate nodes are
/// allowed, so a special `start` contributes its own cs-child.
fn saturations(graph: &Graph, start: NodeId) -> BTreeSet<NodeId> {
    let mut found = BTreeSet::new();
    if !graph.node(start).sts.is_open() || graph.node(start).is_state() {
        return found;
    }
    let mut seen = BTreeSet::from([start]);
    let mut pending = vec![start];
    while let Some(x) = pending.pop() {
        let node = graph.node(x);
        for (label, y) in &node.children {
            let child = graph.node(*y);
            if !child.sts.is_open() {
                continue;
            }
            if *label == EdgeLabel::Cs {
                found.insert(*y);
            } else if !child.is_state() && seen.insert(*y) {
                pending.push(*y);
            }
        }
    }
    found
}

/// Builds the structure of open states from a quiescent tableau whose root
/// is open. World 0 is a state whose label contains every input formula.
pub fn extract_model(solver: &Solver) -> Result<ExtractedModel, ExtractError> {
    let tableau = solver.tableau();
    let graph = tableau.graph();
    let table = tableau.table();
    let root = solver.root();
    if !graph.node(root).sts.is_open() {
        return Err(ExtractError::RootNotOpen);
    }

    let mut states: BTreeSet<NodeId> = graph
        .states()
        .filter(|&s| graph.node(s).sts.is_open())
        .filter(|&s| {
            graph.parents(s).iter().any(|&p| {
                let parent = graph.node(p);
                parent.kind == Some(NodeKind::Special) && parent.sts.is_open()
            })
        })
        .collect();
    if !solver.has_dummy_root() {
        states.insert(root);
    }

    let initial = if solver.has_dummy_root() {
        let successor = graph.children(root).next().ok_or(ExtractError::NoInitialWorld)?;
        let input = table.id(&solver.inputs()[0]).ok_or(ExtractError::NoInitialWorld)?;
        saturations(graph, successor)
            .into_iter()
            .find(|&s| graph.node(s).gamma.contains(input))
            .ok_or(ExtractError::NoInitialWorld)?
    } else {
        root
    };

    let order: Vec<NodeId> = std::iter::once(initial)
        .chain(states.iter().copied().filter(|&s| s != initial))
        .collect();
    let index: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let mut model = ExtractedModel::new(order.len());
    model.nodes = order.iter().map(|&s| Some(s)).collect();
    model.labels = order
        .iter()
        .map(|&s| table.formulas_of(&graph.node(s).gamma).cloned().collect())
        .collect();
    for (w, label) in model.labels.clone().iter().enumerate() {
        for f in label {
            if let FormulaNode::Var(p) = f.node() {
                model.set_true(p.clone(), w);
            }
        }
    }

    let mut cache: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for &s in &order {
        for f in graph.node(s).gamma.iter() {
            let Shape::DiamondLit(l, _) = table.shape(f) else { continue };
            if l.base.is_dummy() {
                continue;
            }
            let Some(y) = graph.get_child(s, &EdgeLabel::ByFormula(f)) else { continue };
            let targets = cache.entry(y).or_insert_with(|| saturations(graph, y));
            for t in targets.iter() {
                let Some(&t) = index.get(t) else { continue };
                add_literal_edge(&mut model, l, index[&s], t);
            }
        }
    }
    Ok(model)
}

fn add_literal_edge(model: &mut ExtractedModel, l: &LiteralProgram, s: usize, t: usize) {
    if l.converse {
        model.add_edge(l.base.clone(), t, s);
    } else {
        model.add_edge(l.base.clone(), s, t);
    }
}
