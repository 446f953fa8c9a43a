use super::{Aggregation, CostCircuit, GateKind};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

/// One structural problem found in a circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateId {
        id: String,
    },
    BadSelectionLayer {
        layer: usize,
        layer_count: usize,
    },
    BadChannel {
        channel: String,
        reason: String,
    },
    LayerOutOfRange {
        node: String,
        layer: usize,
    },
    UnknownChild {
        node: String,
        child: String,
    },
    CrossLayerEdge {
        parent: String,
        parent_layer: usize,
        child: String,
        child_layer: usize,
    },
    Cycle {
        node: String,
    },
    BadFanIn {
        node: String,
        gate: GateKind,
        children: usize,
    },
    InputAboveDeepestLayer {
        node: String,
        layer: usize,
    },
    GateAtDeepestLayer {
        node: String,
    },
    NegativeCost {
        node: String,
        channel: String,
        value: f64,
    },
    UnknownChannel {
        node: String,
        channel: String,
    },
    CostOffAnchor {
        node: String,
        channel: String,
        layer: usize,
    },
    NonAndBelowSelection {
        node: String,
        gate: GateKind,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateId { id } => write!(f, "duplicate id '{id}'"),
            BadSelectionLayer { layer, layer_count } => {
                write!(f, "selection layer {layer} outside 1..={layer_count}")
            }
            BadChannel { channel, reason } => write!(f, "bad channel '{channel}': {reason}"),
            LayerOutOfRange { node, layer } => write!(f, "node '{node}' has out-of-range layer {layer}"),
            UnknownChild { node, child } => write!(f, "node '{node}' references unknown child '{child}'"),
            CrossLayerEdge { parent, parent_layer, child, child_layer } => write!(
                f,
                "cross-layer edge '{parent}' (layer {parent_layer}) -> '{child}' (layer {child_layer}) without pass-through"
            ),
            Cycle { node } => write!(f, "cycle through node '{node}'"),
            BadFanIn { node, gate, children } => {
                write!(f, "{gate} node '{node}' has fan-in {children}")
            }
            InputAboveDeepestLayer { node, layer } => {
                write!(f, "INPUT node '{node}' sits at layer {layer}, above the deepest layer")
            }
            GateAtDeepestLayer { node } => write!(f, "deepest-layer node '{node}' is not an INPUT"),
            NegativeCost { node, channel, value } => {
                write!(f, "negative cost {value} on node '{node}' for channel '{channel}'")
            }
            UnknownChannel { node, channel } => {
                write!(f, "node '{node}' carries a cost for undeclared channel '{channel}'")
            }
            CostOffAnchor { node, channel, layer } => write!(
                f,
                "cost on non-anchor layer: node '{node}' (layer {layer}) for channel '{channel}'"
            ),
            NonAndBelowSelection { node, gate } => write!(
                f,
                "non-AND path below selection layer: node '{node}' is {gate}"
            ),
        }
    }
}

/// Outcome of [`validate`]; empty means the circuit is well formed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("OK");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "- {v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant and reports all violations found.
pub fn validate(circuit: &CostCircuit) -> ValidationReport {
    let mut out = Vec::new();
    let r = circuit.layer_count();
    let sel = circuit.selection_layer();

    if sel == 0 || sel > r {
        out.push(Violation::BadSelectionLayer {
            layer: sel,
            layer_count: r,
        });
    }

    let mut names = HashSet::new();
    let mut max_channels = 0;
    for ch in circuit.channels() {
        if !names.insert(ch.name.as_str()) {
            out.push(Violation::BadChannel {
                channel: ch.name.clone(),
                reason: "declared twice".into(),
            });
        }
        if ch.anchor_layer == 0 || ch.anchor_layer > r {
            out.push(Violation::BadChannel {
                channel: ch.name.clone(),
                reason: format!("anchor layer {} outside 1..={r}", ch.anchor_layer),
            });
        } else if ch.anchor_layer < sel {
            out.push(Violation::BadChannel {
                channel: ch.name.clone(),
                reason: format!("anchor layer {} lies above the selection layer {sel}", ch.anchor_layer),
            });
        }
        if ch.aggregation == Aggregation::Max {
            max_channels += 1;
        }
    }
    if max_channels > 1 {
        out.push(Violation::BadChannel {
            channel: "*".into(),
            reason: "more than one MAX (wait) channel".into(),
        });
    }
    let wait_anchor = circuit.wait_channel().map(|c| c.anchor_layer);

    let mut seen = HashSet::new();
    let mut layer_of: HashMap<&str, usize> = HashMap::new();
    for node in circuit.nodes() {
        if !seen.insert(node.id.as_str()) {
            out.push(Violation::DuplicateId { id: node.id.clone() });
        }
        layer_of.entry(node.id.as_str()).or_insert(node.layer);
    }

    for node in circuit.nodes() {
        if node.layer == 0 || node.layer > r {
            out.push(Violation::LayerOutOfRange {
                node: node.id.clone(),
                layer: node.layer,
            });
        }

        let n = node.children.len();
        let fan_ok = match node.gate {
            GateKind::Not => n == 1,
            GateKind::And | GateKind::Or => n >= 1,
            GateKind::Input => n == 0,
        };
        if !fan_ok {
            out.push(Violation::BadFanIn {
                node: node.id.clone(),
                gate: node.gate,
                children: n,
            });
        }
        if node.gate == GateKind::Input && node.layer < r {
            out.push(Violation::InputAboveDeepestLayer {
                node: node.id.clone(),
                layer: node.layer,
            });
        }
        if node.gate != GateKind::Input && node.layer == r {
            out.push(Violation::GateAtDeepestLayer { node: node.id.clone() });
        }
        if node.layer >= sel && node.gate != GateKind::Input {
            // a single-child OR is a pass-through and equivalent to AND
            let and_like = node.gate == GateKind::And || (node.gate == GateKind::Or && n == 1);
            if !and_like {
                out.push(Violation::NonAndBelowSelection {
                    node: node.id.clone(),
                    gate: node.gate,
                });
            }
        }

        for child in &node.children {
            match layer_of.get(child.as_str()) {
                None => out.push(Violation::UnknownChild {
                    node: node.id.clone(),
                    child: child.clone(),
                }),
                Some(&cl) if cl != node.layer + 1 => out.push(Violation::CrossLayerEdge {
                    parent: node.id.clone(),
                    parent_layer: node.layer,
                    child: child.clone(),
                    child_layer: cl,
                }),
                Some(_) => {}
            }
        }

        for (channel, &value) in &node.costs {
            if !(value >= 0.0) || !value.is_finite() {
                out.push(Violation::NegativeCost {
                    node: node.id.clone(),
                    channel: channel.clone(),
                    value,
                });
            }
            match circuit.channel(channel) {
                Some(ch) if ch.aggregation == Aggregation::Sum => {
                    if ch.anchor_layer != node.layer {
                        out.push(Violation::CostOffAnchor {
                            node: node.id.clone(),
                            channel: channel.clone(),
                            layer: node.layer,
                        });
                    }
                }
                // MAX channels read `wait_minutes`, not the cost map
                _ => out.push(Violation::UnknownChannel {
                    node: node.id.clone(),
                    channel: channel.clone(),
                }),
            }
        }
        if let Some(w) = node.wait_minutes {
            let name = circuit
                .wait_channel()
                .map(|c| c.name.clone())
                .unwrap_or_else(|| "wait".into());
            if !(w >= 0.0) || !w.is_finite() {
                out.push(Violation::NegativeCost {
                    node: node.id.clone(),
                    channel: name.clone(),
                    value: w,
                });
            }
            if wait_anchor != Some(node.layer) {
                out.push(Violation::CostOffAnchor {
                    node: node.id.clone(),
                    channel: name,
                    layer: node.layer,
                });
            }
        }
    }

    out.extend(find_cycles(circuit));
    ValidationReport { violations: out }
}

/// Iterative three-colour DFS; reports one node per back edge found.
fn find_cycles(circuit: &CostCircuit) -> Vec<Violation> {
    #[derive(Clone, Copy, PartialEq)]
    enum Colour {
        White,
        Grey,
        Black,
    }
    let nodes = circuit.nodes();
    let mut colour = vec![Colour::White; nodes.len()];
    let mut reported = BTreeSet::new();

    for start in 0..nodes.len() {
        if colour[start] != Colour::White {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        colour[start] = Colour::Grey;
        while let Some(&mut (cur, ref mut next)) = stack.last_mut() {
            let children = &nodes[cur].children;
            if *next < children.len() {
                let child = &children[*next];
                *next += 1;
                if let Some(ci) = circuit.position(child) {
                    match colour[ci] {
                        Colour::White => {
                            colour[ci] = Colour::Grey;
                            stack.push((ci, 0));
                        }
                        Colour::Grey => {
                            reported.insert(nodes[ci].id.clone());
                        }
                        Colour::Black => {}
                    }
                }
            } else {
                colour[cur] = Colour::Black;
                stack.pop();
            }
        }
    }
    reported.into_iter().map(|node| Violation::Cycle { node }).collect()
}
