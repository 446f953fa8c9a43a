use super::{CostCircuit, GateKind};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("assignment has no value for input '{0}'")]
    MissingInput(String),
}

/// Evaluates the circuit bottom-up.
///
/// Assigned nodes take their given value regardless of gate, so an
/// assignment may sit at any layer (inputs, or the selection layer). Every
/// other node is computed from its children. A node that depends on an
/// unassigned input is left out of the result; if a feature ends up in that
/// state the input it needs is reported.
pub fn evaluate<S: AsRef<str> + Ord>(
    circuit: &CostCircuit,
    assignment: &BTreeMap<S, bool>,
) -> Result<BTreeMap<String, bool>, EvalError> {
    let given: HashMap<&str, bool> = assignment.iter().map(|(k, &v)| (k.as_ref(), v)).collect();

    let nodes = circuit.nodes();
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[b].layer.cmp(&nodes[a].layer));

    // Ok(value) when known, Err(missing input) otherwise
    let mut state: Vec<Option<Result<bool, usize>>> = vec![None; nodes.len()];
    for &i in &order {
        let node = &nodes[i];
        if let Some(&v) = given.get(node.id.as_str()) {
            state[i] = Some(Ok(v));
            continue;
        }
        if node.gate == GateKind::Input {
            state[i] = Some(Err(i));
            continue;
        }
        let mut values = Vec::with_capacity(node.children.len());
        let mut missing = None;
        for child in &node.children {
            match circuit.position(child).and_then(|c| state[c]) {
                Some(Ok(v)) => values.push(v),
                Some(Err(m)) => {
                    missing = Some(m);
                    break;
                }
                None => {
                    // unknown child id or cyclic input; validation reports these
                    missing = Some(i);
                    break;
                }
            }
        }
        state[i] = Some(match missing {
            Some(m) => Err(m),
            None => Ok(apply(node.gate, &values)),
        });
    }

    let mut out = BTreeMap::new();
    for (i, node) in nodes.iter().enumerate() {
        match state[i] {
            Some(Ok(v)) => {
                out.insert(node.id.clone(), v);
            }
            Some(Err(m)) if node.layer == 1 => {
                return Err(EvalError::MissingInput(nodes[m].id.clone()));
            }
            _ => {}
        }
    }
    Ok(out)
}

fn apply(gate: GateKind, values: &[bool]) -> bool {
    match gate {
        GateKind::And => values.iter().all(|&v| v),
        GateKind::Or => values.iter().any(|&v| v),
        GateKind::Not => !values[0],
        GateKind::Input => unreachable!("inputs are never computed"),
    }
}
