use super::{CircuitError, CostCircuit, GateKind};
use std::collections::BTreeSet;

/// Restricts the circuit to nodes usable under a wait-time cap of `cap`
/// minutes.
///
/// Anchor-layer nodes of the wait channel survive when their wait time is at
/// most `cap` (a missing wait time counts as zero). Deeper nodes survive when a
/// surviving anchor node needs them. Shallower gates are re-derived bottom-up:
/// OR gates keep their surviving children, AND and NOT gates need all of
/// theirs, and any gate left without children is removed.
pub fn filter_by_wait(circuit: &CostCircuit, cap: f64) -> Result<CostCircuit, CircuitError> {
    if !(cap >= 0.0) || !cap.is_finite() {
        return Err(CircuitError::BadWaitCap(cap));
    }
    let anchor = circuit.wait_channel().ok_or(CircuitError::NoWaitChannel)?.anchor_layer;
    let nodes = circuit.nodes();
    let mut keep = vec![false; nodes.len()];

    for (i, node) in nodes.iter().enumerate() {
        if node.layer == anchor && node.wait_minutes.unwrap_or(0.0) <= cap {
            keep[i] = true;
        }
    }

    // deeper requirements of the surviving anchor nodes
    let mut stack: Vec<usize> = (0..nodes.len()).filter(|&i| keep[i]).collect();
    while let Some(i) = stack.pop() {
        for child in &nodes[i].children {
            if let Some(c) = circuit.position(child) {
                if nodes[c].layer > anchor && !keep[c] {
                    keep[c] = true;
                    stack.push(c);
                }
            }
        }
    }

    let mut shallow: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].layer < anchor).collect();
    shallow.sort_by(|&a, &b| nodes[b].layer.cmp(&nodes[a].layer));
    for i in shallow {
        let node = &nodes[i];
        let alive = |c: &String| circuit.position(c).is_some_and(|p| keep[p]);
        keep[i] = match node.gate {
            GateKind::Or => node.children.iter().any(alive),
            GateKind::And | GateKind::Not => !node.children.is_empty() && node.children.iter().all(alive),
            GateKind::Input => true,
        };
    }

    let mut pruned: BTreeSet<String> = circuit.pruned_features().iter().cloned().collect();
    let mut kept_nodes = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        if !keep[i] {
            if node.layer == 1 {
                pruned.insert(node.id.clone());
            }
            continue;
        }
        let mut node = node.clone();
        if node.gate == GateKind::Or {
            node.children.retain(|c| circuit.position(c).is_some_and(|p| keep[p]));
        }
        kept_nodes.push(node);
    }
    Ok(circuit.rebuild(kept_nodes, pruned.into_iter().collect()))
}
