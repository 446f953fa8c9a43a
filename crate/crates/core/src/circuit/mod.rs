//! Layered cost-dependency circuits.
//!
//! A [`CostCircuit`] is a boolean circuit whose layer-1 nodes are model
//! features and whose deepest layer holds the input nodes. Every edge runs
//! from a node to a node exactly one layer deeper. Cost annotations live on
//! the nodes of each channel's anchor layer.

mod eval;
mod filter;
mod random;
mod validate;

pub use eval::{evaluate, EvalError};
pub use filter::filter_by_wait;
pub use random::{random_circuit, RandomCircuitConfig};
pub use validate::{validate, ValidationReport, Violation};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Or,
    Not,
    Input,
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Not => "NOT",
            GateKind::Input => "INPUT",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub layer: usize,
    pub gate: GateKind,
    #[serde(default)]
    pub children: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub costs: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wait_minutes: Option<f64>,
}

impl Node {
    pub fn new(id: impl Into<String>, layer: usize, gate: GateKind) -> Self {
        Node {
            id: id.into(),
            layer,
            gate,
            children: Vec::new(),
            costs: BTreeMap::new(),
            wait_minutes: None,
        }
    }

    pub fn with_children<I, S>(mut self, children: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.children = children.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_cost(mut self, channel: impl Into<String>, cost: f64) -> Self {
        self.costs.insert(channel.into(), cost);
        self
    }

    pub fn with_wait(mut self, minutes: f64) -> Self {
        self.wait_minutes = Some(minutes);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Aggregation {
    /// Costs of the unique set of used nodes add up.
    Sum,
    /// The channel reports the largest value over used nodes (wait time).
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostChannel {
    pub name: String,
    pub anchor_layer: usize,
    pub aggregation: Aggregation,
    #[serde(default)]
    pub unit: String,
}

impl CostChannel {
    pub fn new(
        name: impl Into<String>,
        anchor_layer: usize,
        aggregation: Aggregation,
        unit: impl Into<String>,
    ) -> Self {
        CostChannel {
            name: name.into(),
            anchor_layer,
            aggregation,
            unit: unit.into(),
        }
    }
}

/// On-disk representation of a circuit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    version: u32,
    layers: Vec<String>,
    selection_layer: usize,
    channels: Vec<CostChannel>,
    nodes: Vec<Node>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pruned_features: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CircuitError {
    #[error("reading circuit file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing circuit file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported circuit format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("circuit declares no MAX-aggregation (wait) channel")]
    NoWaitChannel,
    #[error("wait cap must be a finite nonnegative number of minutes, got {0}")]
    BadWaitCap(f64),
    #[error("invalid circuit:\n{0}")]
    Invalid(ValidationReport),
}

/// An immutable layered cost circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCircuit {
    layers: Vec<String>,
    nodes: Vec<Node>,
    channels: Vec<CostChannel>,
    selection_layer: usize,
    pruned_features: Vec<String>,
    index: HashMap<String, usize>,
}

impl CostCircuit {
    /// Builds a circuit as given, without validation or pass-through insertion.
    pub fn new(layers: Vec<String>, nodes: Vec<Node>, channels: Vec<CostChannel>, selection_layer: usize) -> Self {
        Self::assemble(layers, nodes, channels, selection_layer, Vec::new())
    }

    fn assemble(
        layers: Vec<String>,
        nodes: Vec<Node>,
        channels: Vec<CostChannel>,
        selection_layer: usize,
        pruned_features: Vec<String>,
    ) -> Self {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            index.entry(node.id.clone()).or_insert(i);
        }
        CostCircuit {
            layers,
            nodes,
            channels,
            selection_layer,
            pruned_features,
            index,
        }
    }

    /// Parses the JSON circuit format and inserts pass-through nodes for
    /// layer-skipping edges. The result is not validated.
    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let file: CircuitFile = serde_json::from_str(text)?;
        if file.version != FORMAT_VERSION {
            return Err(CircuitError::Version(file.version));
        }
        let raw = Self::assemble(
            file.layers,
            file.nodes,
            file.channels,
            file.selection_layer,
            file.pruned_features,
        );
        Ok(raw.with_pass_throughs())
    }

    /// Reads, normalizes and validates a circuit file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CircuitError> {
        let text = std::fs::read_to_string(path)?;
        let circuit = Self::from_json(&text)?;
        let report = validate(&circuit);
        if report.is_ok() {
            Ok(circuit)
        } else {
            Err(CircuitError::Invalid(report))
        }
    }

    pub fn to_json(&self) -> String {
        let file = CircuitFile {
            version: FORMAT_VERSION,
            layers: self.layers.clone(),
            selection_layer: self.selection_layer,
            channels: self.channels.clone(),
            nodes: self.nodes.clone(),
            pruned_features: self.pruned_features.clone(),
        };
        serde_json::to_string_pretty(&file).expect("circuit serializes")
    }

    pub fn layers(&self) -> &[String] {
        &self.layers
    }

    /// Number of layers `r`; layer `r` holds the inputs.
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn channels(&self) -> &[CostChannel] {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&CostChannel> {
        self.channels.iter().find(|c| c.name == name)
    }

    /// The MAX-aggregated channel, if any.
    pub fn wait_channel(&self) -> Option<&CostChannel> {
        self.channels.iter().find(|c| c.aggregation == Aggregation::Max)
    }

    pub fn selection_layer(&self) -> usize {
        self.selection_layer
    }

    /// Layer-1 features removed by wait filtering, sorted.
    pub fn pruned_features(&self) -> &[String] {
        &self.pruned_features
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub(crate) fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Ids of the nodes in `layer`, sorted lexicographically.
    pub fn layer_ids(&self, layer: usize) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .nodes
            .iter()
            .filter(|n| n.layer == layer)
            .map(|n| n.id.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Feature ids (layer 1), sorted.
    pub fn feature_ids(&self) -> Vec<&str> {
        self.layer_ids(1)
    }

    /// The value a node carries for a channel: its cost annotation for SUM
    /// channels, its wait time for the MAX channel.
    pub fn channel_value(&self, node: &Node, channel: &CostChannel) -> Option<f64> {
        if node.layer != channel.anchor_layer {
            return None;
        }
        match channel.aggregation {
            Aggregation::Sum => node.costs.get(&channel.name).copied(),
            Aggregation::Max => node.wait_minutes,
        }
    }

    /// All nodes reachable from `id` (itself included) through child edges.
    pub fn descendants(&self, id: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id.to_string()];
        while let Some(cur) = stack.pop() {
            if !seen.insert(cur.clone()) {
                continue;
            }
            if let Some(node) = self.node(&cur) {
                stack.extend(node.children.iter().cloned());
            }
        }
        seen
    }

    /// Replaces every layer-skipping edge by a chain of pass-through nodes,
    /// one per skipped layer. Pass-throughs are shared per (target, layer) and
    /// are named `<target>@<layer>`. Above the selection layer they are OR
    /// gates; at or below it they are AND gates so the AND-only rule holds.
    pub fn with_pass_throughs(&self) -> CostCircuit {
        let mut nodes = self.nodes.clone();
        let mut created: BTreeMap<String, Node> = BTreeMap::new();
        let layer_of: HashMap<&str, usize> = self.nodes.iter().map(|n| (n.id.as_str(), n.layer)).collect();

        for node in nodes.iter_mut() {
            for child in node.children.iter_mut() {
                let Some(&child_layer) = layer_of.get(child.as_str()) else {
                    continue;
                };
                if child_layer <= node.layer + 1 {
                    continue;
                }
                // build the chain from just above the target upwards
                let mut below = child.clone();
                for layer in (node.layer + 1..child_layer).rev() {
                    let id = format!("{}@{}", child, layer);
                    created.entry(id.clone()).or_insert_with(|| {
                        let gate = if layer < self.selection_layer {
                            GateKind::Or
                        } else {
                            GateKind::And
                        };
                        Node::new(id.clone(), layer, gate).with_children([below.clone()])
                    });
                    below = id;
                }
                *child = below;
            }
        }
        nodes.extend(created.into_values());
        Self::assemble(
            self.layers.clone(),
            nodes,
            self.channels.clone(),
            self.selection_layer,
            self.pruned_features.clone(),
        )
    }

    pub(crate) fn rebuild(&self, nodes: Vec<Node>, pruned_features: Vec<String>) -> CostCircuit {
        Self::assemble(
            self.layers.clone(),
            nodes,
            self.channels.clone(),
            self.selection_layer,
            pruned_features,
        )
    }
}

/// Circuits bundled with the crate.
pub mod fixtures {
    use super::CostCircuit;

    pub const TINY_JSON: &str = include_str!("../../fixtures/tiny.json");
    pub const ICU_JSON: &str = include_str!("../../fixtures/icu.json");

    /// Two features over two interchangeable metabolic panels sharing one blood draw.
    pub fn tiny() -> CostCircuit {
        CostCircuit::from_json(TINY_JSON).expect("bundled tiny fixture parses")
    }

    /// ICU-style graph: features, measurements, tests, caregiver activities.
    pub fn icu() -> CostCircuit {
        CostCircuit::from_json(ICU_JSON).expect("bundled ICU fixture parses")
    }
}
