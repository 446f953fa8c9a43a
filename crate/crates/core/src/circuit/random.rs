//! Random layered circuits for property tests and benchmarks.

use super::{Aggregation, CostChannel, CostCircuit, GateKind, Node};
use rand::seq::IndexedRandom;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomCircuitConfig {
    /// Largest number of layers, at least 2.
    pub max_layers: usize,
    /// Largest number of selection-layer nodes, at least 1.
    pub max_selection: usize,
    /// Largest number of gates per layer above the selection layer.
    pub max_width: usize,
    /// Largest fan-in of an AND or OR gate.
    pub max_fan_in: usize,
    /// Chance that a gate above the selection layer is a NOT.
    pub not_prob: f64,
    /// Chance that an edge skips layers (bridged by pass-throughs).
    pub skip_prob: f64,
}

impl Default for RandomCircuitConfig {
    fn default() -> Self {
        RandomCircuitConfig {
            max_layers: 4,
            max_selection: 12,
            max_width: 5,
            max_fan_in: 3,
            not_prob: 0.2,
            skip_prob: 0.15,
        }
    }
}

/// A valid layered circuit with financial, caregiver_time and wait channels.
///
/// The selection layer is either the deepest layer (its nodes are inputs) or
/// the one above it, with AND gates over a layer of activity inputs. Layers
/// above the selection layer mix AND, OR and NOT gates; every gate points into
/// the layer directly below, except for occasional skips that are replaced by
/// pass-through chains.
pub fn random_circuit<R: Rng>(rng: &mut R, cfg: &RandomCircuitConfig) -> CostCircuit {
    let layers = rng.random_range(2..=cfg.max_layers.max(2));
    let with_activities = layers >= 3 && rng.random_bool(0.5);
    let sel = if with_activities { layers - 1 } else { layers };
    let n_sel = rng.random_range(1..=cfg.max_selection.max(1));

    let mut nodes = Vec::new();
    let mut activity_ids = Vec::new();
    if with_activities {
        let n_act = rng.random_range(1..=n_sel.min(4));
        for a in 0..n_act {
            let id = format!("a{a}");
            let mut node = Node::new(id.clone(), layers, GateKind::Input);
            node = node.with_cost("caregiver_time", rng.random_range(0..=10) as f64);
            nodes.push(node);
            activity_ids.push(id);
        }
    }
    let mut below: Vec<String> = Vec::new();
    for t in 0..n_sel {
        let id = format!("t{t:02}");
        let mut node = if with_activities {
            let k = rng.random_range(1..=activity_ids.len().min(2));
            let children: Vec<String> = activity_ids.choose_multiple(rng, k).cloned().collect();
            Node::new(id.clone(), sel, GateKind::And).with_children(children)
        } else {
            Node::new(id.clone(), sel, GateKind::Input).with_cost("caregiver_time", rng.random_range(0..=10) as f64)
        };
        node = node
            .with_cost("financial", rng.random_range(0..=50) as f64)
            .with_wait(*[0.0, 10.0, 30.0, 50.0].choose(rng).expect("nonempty"));
        nodes.push(node);
        below.push(id);
    }

    // ids per layer, deepest first, for skip edges
    let mut by_layer: Vec<(usize, Vec<String>)> = vec![(sel, below.clone())];
    for layer in (1..sel).rev() {
        let width = rng.random_range(1..=cfg.max_width.max(1));
        let mut here = Vec::new();
        for g in 0..width {
            let id = if layer == 1 {
                format!("f{g}")
            } else {
                format!("g{layer}_{g}")
            };
            let gate = if rng.random_bool(cfg.not_prob) {
                GateKind::Not
            } else if rng.random_bool(0.5) {
                GateKind::And
            } else {
                GateKind::Or
            };
            let fan = if gate == GateKind::Not {
                1
            } else {
                rng.random_range(1..=cfg.max_fan_in.max(1))
            };
            let mut children: Vec<String> = Vec::new();
            for _ in 0..fan {
                let deeper: Vec<&(usize, Vec<String>)> = by_layer.iter().filter(|(l, _)| *l > layer + 1).collect();
                let pool = if !deeper.is_empty() && rng.random_bool(cfg.skip_prob) {
                    &deeper.choose(rng).expect("nonempty").1
                } else {
                    &below
                };
                let c = pool.choose(rng).expect("nonempty layer").clone();
                if !children.contains(&c) {
                    children.push(c);
                }
            }
            nodes.push(Node::new(id.clone(), layer, gate).with_children(children));
            here.push(id);
        }
        by_layer.push((layer, here.clone()));
        below = here;
    }

    let names = ["feature", "measurement", "test", "activity"];
    let layer_names = (0..layers)
        .map(|l| names.get(l).map_or(format!("layer{}", l + 1), |s| s.to_string()))
        .collect();
    let channels = vec![
        CostChannel::new("financial", sel, Aggregation::Sum, "USD"),
        CostChannel::new("caregiver_time", layers, Aggregation::Sum, "minutes"),
        CostChannel::new("wait", sel, Aggregation::Max, "minutes"),
    ];
    CostCircuit::new(layer_names, nodes, channels, sel).with_pass_throughs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_circuits_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let c = random_circuit(&mut rng, &RandomCircuitConfig::default());
            let report = validate(&c);
            assert!(report.is_ok(), "{report}\n{}", c.to_json());
            assert!(c.layer_ids(c.selection_layer()).len() <= 12);
            assert!(!c.feature_ids().is_empty());
        }
    }
}
