//! Reduction of a layered circuit to disjunctive normal form.
//!
//! Every feature becomes an OR over "ways", each way an AND over nodes of the
//! selection layer. Nodes at or below the selection layer are the variables of
//! the expansion; anything deeper is reached from them through AND gates only,
//! so a way's deeper requirements follow by collecting descendants.

use crate::circuit::{CostCircuit, GateKind, Node};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

/// Default cap on the number of minterms any expansion may produce.
pub const DEFAULT_MAX_MINTERMS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionOptions {
    /// Largest number of minterms (before absorption) any intermediate
    /// expansion, and the total over all features, may reach.
    pub max_minterms: usize,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        ReductionOptions {
            max_minterms: DEFAULT_MAX_MINTERMS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReductionError {
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("feature '{feature}': negative cost literal unsupported (NOT {node})")]
    NegativeLiteral { feature: String, node: String },
    #[error("reduction blow-up at '{node}': {count} minterms exceeds the configured cap of {cap}")]
    BlowUp { node: String, count: usize, cap: usize },
    #[error("malformed circuit: {0}")]
    Malformed(String),
}

/// A possibly negated selection-layer variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub node: String,
    pub negated: bool,
}

/// One way of obtaining a feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Way {
    pub feature_id: String,
    /// 1-based position among the feature's ways.
    pub index: usize,
    pub selection_nodes: BTreeSet<String>,
    /// Per channel, the anchor-layer nodes this way requires that carry a
    /// value for the channel.
    pub channel_usage: BTreeMap<String, BTreeSet<String>>,
}

/// The reduced circuit: features (OR layer), ways (AND layer), and the nodes
/// each way uses per cost channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeLayerForm {
    pub features: Vec<String>,
    /// Grouped by feature, in feature order then way order.
    pub ways: Vec<Way>,
    /// Features with no way to obtain them, sorted.
    pub dropped: Vec<String>,
}

impl ThreeLayerForm {
    pub fn ways_of(&self, feature: &str) -> &[Way] {
        let start = self.ways.partition_point(|w| w.feature_id.as_str() < feature);
        let end = self.ways.partition_point(|w| w.feature_id.as_str() <= feature);
        &self.ways[start..end]
    }

    /// `w_i`, the number of ways to obtain `feature`.
    pub fn way_count(&self, feature: &str) -> usize {
        self.ways_of(feature).len()
    }

    pub fn extended_size(&self) -> usize {
        self.ways.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("form serializes")
    }
}

// Literal encoding: variable index << 1 | negated.
type Lit = u32;
type Term = Vec<Lit>;

fn lit(var: usize, negated: bool) -> Lit {
    ((var as Lit) << 1) | negated as Lit
}

/// Memoized polarity-aware expansion over one circuit.
struct Expander<'a> {
    circuit: &'a CostCircuit,
    vars: Vec<String>,
    var_of: HashMap<String, usize>,
    cap: usize,
    memo: HashMap<(usize, bool), Rc<Vec<Term>>>,
}

impl<'a> Expander<'a> {
    fn new(circuit: &'a CostCircuit, opts: ReductionOptions) -> Self {
        let vars: Vec<String> = circuit
            .layer_ids(circuit.selection_layer())
            .into_iter()
            .map(String::from)
            .collect();
        let var_of = vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        Expander {
            circuit,
            vars,
            var_of,
            cap: opts.max_minterms,
            memo: HashMap::new(),
        }
    }

    fn expand(&mut self, idx: usize, negated: bool) -> Result<Rc<Vec<Term>>, ReductionError> {
        if let Some(hit) = self.memo.get(&(idx, negated)) {
            return Ok(Rc::clone(hit));
        }
        let node: &Node = &self.circuit.nodes()[idx];
        let sel = self.circuit.selection_layer();
        let terms = if node.layer == sel {
            vec![vec![lit(self.var_of[&node.id], negated)]]
        } else if node.layer > sel {
            return Err(ReductionError::Malformed(format!(
                "node '{}' below the selection layer reached from above",
                node.id
            )));
        } else {
            match node.gate {
                GateKind::Input => {
                    return Err(ReductionError::Malformed(format!(
                        "INPUT node '{}' above the selection layer",
                        node.id
                    )))
                }
                GateKind::Not => {
                    let child = self.child(node, 0)?;
                    (*self.expand(child, !negated)?).clone()
                }
                GateKind::And | GateKind::Or => {
                    let conjunction = (node.gate == GateKind::And) != negated;
                    let mut acc: Vec<Term> = if conjunction { vec![Vec::new()] } else { Vec::new() };
                    for k in 0..node.children.len() {
                        let child = self.child(node, k)?;
                        let sub = self.expand(child, negated)?;
                        acc = if conjunction {
                            product(&acc, &sub, self.cap, &node.id)?
                        } else {
                            union(acc, &sub, self.cap, &node.id)?
                        };
                    }
                    acc
                }
            }
        };
        let terms = Rc::new(terms);
        self.memo.insert((idx, negated), Rc::clone(&terms));
        Ok(terms)
    }

    fn child(&self, node: &Node, k: usize) -> Result<usize, ReductionError> {
        let id = node
            .children
            .get(k)
            .ok_or_else(|| ReductionError::Malformed(format!("node '{}' lacks a child", node.id)))?;
        self.circuit
            .position(id)
            .ok_or_else(|| ReductionError::Malformed(format!("unknown child '{id}'")))
    }

    fn feature(&mut self, feature: &str) -> Result<Rc<Vec<Term>>, ReductionError> {
        let idx = self
            .circuit
            .position(feature)
            .filter(|&i| self.circuit.nodes()[i].layer == 1)
            .ok_or_else(|| ReductionError::UnknownFeature(feature.to_string()))?;
        self.expand(idx, false)
    }

    fn literal(&self, l: Lit) -> Literal {
        Literal {
            node: self.vars[(l >> 1) as usize].clone(),
            negated: l & 1 == 1,
        }
    }

    fn positive_sets(&self, feature: &str, terms: &[Term]) -> Result<Vec<BTreeSet<String>>, ReductionError> {
        terms
            .iter()
            .map(|t| {
                t.iter()
                    .map(|&l| {
                        let lit = self.literal(l);
                        if lit.negated {
                            Err(ReductionError::NegativeLiteral {
                                feature: feature.to_string(),
                                node: lit.node,
                            })
                        } else {
                            Ok(lit.node)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn product(a: &[Term], b: &[Term], cap: usize, at: &str) -> Result<Vec<Term>, ReductionError> {
    let count = a.len() * b.len();
    if count > cap {
        return Err(ReductionError::BlowUp {
            node: at.to_string(),
            count,
            cap,
        });
    }
    let mut out = Vec::with_capacity(count);
    for x in a {
        'pairs: for y in b {
            let mut merged: Term = Vec::with_capacity(x.len() + y.len());
            let (mut i, mut j) = (0, 0);
            while i < x.len() || j < y.len() {
                let next = if j == y.len() || (i < x.len() && x[i] <= y[j]) {
                    i += 1;
                    x[i - 1]
                } else {
                    j += 1;
                    y[j - 1]
                };
                match merged.last() {
                    Some(&last) if last == next => continue,
                    // complementary literals sort next to each other
                    Some(&last) if last >> 1 == next >> 1 => continue 'pairs,
                    _ => merged.push(next),
                }
            }
            out.push(merged);
        }
    }
    Ok(absorb(out))
}

fn union(mut a: Vec<Term>, b: &[Term], cap: usize, at: &str) -> Result<Vec<Term>, ReductionError> {
    let count = a.len() + b.len();
    if count > cap {
        return Err(ReductionError::BlowUp {
            node: at.to_string(),
            count,
            cap,
        });
    }
    a.extend(b.iter().cloned());
    Ok(absorb(a))
}

fn is_subset(small: &[Lit], big: &[Lit]) -> bool {
    let mut j = 0;
    for &s in small {
        while j < big.len() && big[j] < s {
            j += 1;
        }
        if j == big.len() || big[j] != s {
            return false;
        }
        j += 1;
    }
    true
}

/// Idempotence plus absorption: drops duplicates and every term that is a
/// superset of another. Output is sorted lexicographically.
fn absorb(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    terms.dedup();
    let mut kept: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        if !kept.iter().any(|k| is_subset(k, &t)) {
            kept.push(t);
        }
    }
    kept.sort();
    kept
}

/// The feature's minimal DNF over selection-layer literals, negations allowed.
pub fn signed_dnf(
    circuit: &CostCircuit,
    feature: &str,
    opts: ReductionOptions,
) -> Result<Vec<Vec<Literal>>, ReductionError> {
    let mut ex = Expander::new(circuit, opts);
    let terms = ex.feature(feature)?;
    Ok(terms
        .iter()
        .map(|t| t.iter().map(|&l| ex.literal(l)).collect())
        .collect())
}

/// The feature's minimal implicants as sets of selection-layer nodes.
///
/// A negated selection-layer literal surviving absorption is an error, since
/// "not ordering a test" has no cost meaning.
pub fn feature_dnf(
    circuit: &CostCircuit,
    feature: &str,
    opts: ReductionOptions,
) -> Result<Vec<BTreeSet<String>>, ReductionError> {
    let mut ex = Expander::new(circuit, opts);
    let terms = ex.feature(feature)?;
    ex.positive_sets(feature, &terms)
}

/// Rewrites the circuit so that NOT gates only sit directly above
/// selection-layer nodes (the variables), keeping the layering.
///
/// Negations are pushed down with De Morgan's laws and double negations are
/// removed; where a pushed negation needs to bridge a layer, a single-child
/// pass-through is inserted. Original ids keep their meaning; new nodes are
/// named `!<id>` (negation at the same layer), `<id>~<layer>` and
/// `!<id>~<layer>` (lifted copies).
pub fn to_nnf(circuit: &CostCircuit) -> CostCircuit {
    let mut b = NnfBuilder {
        c: circuit,
        sel: circuit.selection_layer(),
        emitted: BTreeMap::new(),
        memo: HashMap::new(),
    };
    for (i, node) in circuit.nodes().iter().enumerate() {
        if node.layer < b.sel {
            b.get(node.layer, i, false);
        }
    }
    let NnfBuilder { mut emitted, .. } = b;

    let mut nodes = Vec::with_capacity(circuit.nodes().len() + emitted.len());
    for node in circuit.nodes() {
        if node.layer >= circuit.selection_layer() {
            nodes.push(node.clone());
        } else if let Some(n) = emitted.remove(&node.id) {
            nodes.push(n);
        }
    }
    nodes.extend(emitted.into_values());
    circuit.rebuild(nodes, circuit.pruned_features().to_vec())
}

struct NnfBuilder<'a> {
    c: &'a CostCircuit,
    sel: usize,
    emitted: BTreeMap<String, Node>,
    memo: HashMap<(usize, usize, bool), String>,
}

impl NnfBuilder<'_> {
    /// Id of a node at `layer` computing node `i` (or its negation).
    fn get(&mut self, layer: usize, i: usize, negated: bool) -> String {
        if let Some(id) = self.memo.get(&(layer, i, negated)) {
            return id.clone();
        }
        let node = &self.c.nodes()[i];
        let mut name = if negated {
            format!("!{}", node.id)
        } else {
            node.id.clone()
        };
        if layer != node.layer {
            name = format!("{name}~{layer}");
        }
        self.memo.insert((layer, i, negated), name.clone());
        self.build(&name, layer, i, negated);
        name
    }

    fn build(&mut self, name: &str, layer: usize, i: usize, negated: bool) {
        let c = self.c;
        let node = &c.nodes()[i];
        let literal_level = node.layer >= self.sel || node.gate == GateKind::Input;

        if literal_level {
            if node.layer == layer {
                // only reachable un-negated: the original variable itself
                debug_assert!(!negated);
                return;
            }
            let out = if negated && node.layer == layer + 1 {
                Node::new(name, layer, GateKind::Not).with_children([node.id.clone()])
            } else {
                let below = self.get(layer + 1, i, negated);
                let gate = if layer < self.sel { GateKind::Or } else { GateKind::And };
                Node::new(name, layer, gate).with_children([below])
            };
            self.emitted.insert(name.to_string(), out);
            return;
        }

        match node.gate {
            GateKind::Not => {
                let child = c.position(&node.children[0]).expect("valid circuit");
                self.build(name, layer, child, !negated);
            }
            GateKind::And | GateKind::Or => {
                let gate = match (node.gate, negated) {
                    (GateKind::And, false) | (GateKind::Or, true) => GateKind::And,
                    _ => GateKind::Or,
                };
                let children: Vec<String> = node
                    .children
                    .iter()
                    .map(|id| {
                        let ci = c.position(id).expect("valid circuit");
                        self.get(layer + 1, ci, negated)
                    })
                    .collect();
                let mut out = Node::new(name, layer, gate).with_children(children);
                if !negated && layer == node.layer {
                    out.costs = node.costs.clone();
                    out.wait_minutes = node.wait_minutes;
                }
                self.emitted.insert(name.to_string(), out);
            }
            GateKind::Input => unreachable!("handled as literal"),
        }
    }
}

/// Reduces the circuit to its three-layer form.
///
/// Features are processed in lexicographic order and ways are sorted by their
/// node lists, so the output is deterministic. Features without any way are
/// dropped and listed, together with features already pruned by wait
/// filtering.
pub fn reduce(circuit: &CostCircuit, opts: ReductionOptions) -> Result<ThreeLayerForm, ReductionError> {
    let nnf = to_nnf(circuit);
    let mut ex = Expander::new(&nnf, opts);

    // deeper requirements of every selection node, per channel
    let mut usage_of: HashMap<String, BTreeMap<String, BTreeSet<String>>> = HashMap::new();
    for var in ex.vars.clone() {
        let below = circuit.descendants(&var);
        let mut per_channel = BTreeMap::new();
        for ch in circuit.channels() {
            let used: BTreeSet<String> = below
                .iter()
                .filter(|id| circuit.node(id).is_some_and(|n| circuit.channel_value(n, ch).is_some()))
                .cloned()
                .collect();
            per_channel.insert(ch.name.clone(), used);
        }
        usage_of.insert(var, per_channel);
    }

    let mut features = Vec::new();
    let mut ways = Vec::new();
    let mut dropped: BTreeSet<String> = circuit.pruned_features().iter().cloned().collect();
    for feature in circuit.feature_ids() {
        let terms = ex.feature(feature)?;
        let sets = ex.positive_sets(feature, &terms)?;
        if sets.is_empty() {
            dropped.insert(feature.to_string());
            continue;
        }
        features.push(feature.to_string());
        for (p, selection_nodes) in sets.into_iter().enumerate() {
            let mut channel_usage: BTreeMap<String, BTreeSet<String>> = circuit
                .channels()
                .iter()
                .map(|c| (c.name.clone(), BTreeSet::new()))
                .collect();
            for s in &selection_nodes {
                for (ch, used) in &usage_of[s] {
                    channel_usage.get_mut(ch).unwrap().extend(used.iter().cloned());
                }
            }
            ways.push(Way {
                feature_id: feature.to_string(),
                index: p + 1,
                selection_nodes,
                channel_usage,
            });
        }
        if ways.len() > opts.max_minterms {
            return Err(ReductionError::BlowUp {
                node: feature.to_string(),
                count: ways.len(),
                cap: opts.max_minterms,
            });
        }
    }
    Ok(ThreeLayerForm {
        features,
        ways,
        dropped: dropped.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{evaluate, filter_by_wait, fixtures, validate, CostChannel};

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn three_layer(nodes: Vec<Node>) -> CostCircuit {
        CostCircuit::new(
            vec!["f".into(), "g".into(), "x".into()],
            nodes,
            Vec::<CostChannel>::new(),
            3,
        )
    }

    /// Truth table of every feature under every assignment of the variables.
    fn truth_tables(c: &CostCircuit, vars: &[&str]) -> Vec<BTreeMap<String, bool>> {
        (0..1u32 << vars.len())
            .map(|mask| {
                let a: BTreeMap<String, bool> = vars
                    .iter()
                    .enumerate()
                    .map(|(k, v)| (v.to_string(), mask >> k & 1 == 1))
                    .collect();
                let mut out = evaluate(c, &a).unwrap();
                out.retain(|id, _| c.node(id).unwrap().layer == 1);
                out
            })
            .collect()
    }

    #[test]
    fn tiny_feature_absorbs_cross_terms() {
        let c = fixtures::tiny();
        let dnf = feature_dnf(&c, "f2", ReductionOptions::default()).unwrap();
        assert_eq!(dnf, vec![set(&["bmp"]), set(&["cmp"])]);
    }

    #[test]
    fn single_and_gives_one_minterm() {
        let c = CostCircuit::new(
            vec!["f".into(), "t".into(), "a".into()],
            vec![
                Node::new("f", 1, GateKind::And).with_children(["t1", "t2"]),
                Node::new("t1", 2, GateKind::And).with_children(["a"]),
                Node::new("t2", 2, GateKind::And).with_children(["a"]),
                Node::new("a", 3, GateKind::Input),
            ],
            vec![],
            2,
        );
        let dnf = feature_dnf(&c, "f", ReductionOptions::default()).unwrap();
        assert_eq!(dnf, vec![set(&["t1", "t2"])]);
    }

    #[test]
    fn double_negation_collapses() {
        let c = three_layer(vec![
            Node::new("f", 1, GateKind::Not).with_children(["n"]),
            Node::new("n", 2, GateKind::Not).with_children(["a"]),
            Node::new("a", 3, GateKind::Input),
        ]);
        let nnf = to_nnf(&c);
        assert!(validate(&nnf).is_ok(), "{}", validate(&nnf));
        assert_eq!(nnf.node("f").unwrap().gate, GateKind::Or);
        assert_eq!(truth_tables(&c, &["a"]), truth_tables(&nnf, &["a"]));
        assert_eq!(
            feature_dnf(&nnf, "f", ReductionOptions::default()).unwrap(),
            vec![set(&["a"])]
        );
    }

    #[test]
    fn de_morgan_on_and() {
        let c = three_layer(vec![
            Node::new("f", 1, GateKind::Not).with_children(["g"]),
            Node::new("g", 2, GateKind::And).with_children(["a", "b"]),
            Node::new("a", 3, GateKind::Input),
            Node::new("b", 3, GateKind::Input),
        ]);
        let nnf = to_nnf(&c);
        let f = nnf.node("f").unwrap();
        assert_eq!(f.gate, GateKind::Or);
        for child in &f.children {
            let n = nnf.node(child).unwrap();
            assert_eq!(n.gate, GateKind::Not);
            assert_eq!(nnf.node(&n.children[0]).unwrap().gate, GateKind::Input);
        }
        assert_eq!(truth_tables(&c, &["a", "b"]), truth_tables(&nnf, &["a", "b"]));
    }

    #[test]
    fn de_morgan_nested_matches_truth_table() {
        // NOT(a OR (b AND c)) in four layers
        let c = CostCircuit::new(
            vec!["1".into(), "2".into(), "3".into(), "4".into()],
            vec![
                Node::new("f", 1, GateKind::Not).with_children(["o"]),
                Node::new("o", 2, GateKind::Or).with_children(["a@3", "bc"]),
                Node::new("a@3", 3, GateKind::Or).with_children(["a"]),
                Node::new("bc", 3, GateKind::And).with_children(["b", "c"]),
                Node::new("a", 4, GateKind::Input),
                Node::new("b", 4, GateKind::Input),
                Node::new("c", 4, GateKind::Input),
            ],
            vec![],
            4,
        );
        let nnf = to_nnf(&c);
        assert!(validate(&nnf).is_ok(), "{}", validate(&nnf));
        for n in nnf.nodes() {
            if n.gate == GateKind::Not {
                assert_eq!(nnf.node(&n.children[0]).unwrap().gate, GateKind::Input, "{}", n.id);
            }
        }
        let vars = ["a", "b", "c"];
        assert_eq!(truth_tables(&c, &vars), truth_tables(&nnf, &vars));
        let dnf = signed_dnf(&nnf, "f", ReductionOptions::default()).unwrap();
        let neg = |v: &str| Literal {
            node: v.into(),
            negated: true,
        };
        assert_eq!(dnf, vec![vec![neg("a"), neg("b")], vec![neg("a"), neg("c")]]);
        assert!(matches!(
            feature_dnf(&nnf, "f", ReductionOptions::default()),
            Err(ReductionError::NegativeLiteral { .. })
        ));
    }

    #[test]
    fn nnf_is_identity_without_not() {
        let c = fixtures::icu();
        assert_eq!(to_nnf(&c), c);
    }

    #[test]
    fn or_chain_trips_the_guard() {
        // two OR layers of fan 3 over 9 inputs, then an AND of two such trees
        let mut nodes = vec![Node::new("f", 1, GateKind::And).with_children(["o1", "o2"])];
        let mut inputs = Vec::new();
        for t in 1..=2 {
            let mids: Vec<String> = (0..3).map(|k| format!("m{t}{k}")).collect();
            nodes.push(Node::new(format!("o{t}"), 2, GateKind::Or).with_children(mids.clone()));
            for m in mids {
                let leaves: Vec<String> = (0..3).map(|k| format!("{m}x{k}")).collect();
                inputs.extend(leaves.clone());
                nodes.push(Node::new(m, 3, GateKind::Or).with_children(leaves));
            }
        }
        for x in inputs {
            nodes.push(Node::new(x, 4, GateKind::Input));
        }
        let c = CostCircuit::new(vec!["1".into(), "2".into(), "3".into(), "4".into()], nodes, vec![], 4);
        assert!(validate(&c).is_ok());
        // 9 x 9 = 81 products
        let ok = feature_dnf(&c, "f", ReductionOptions { max_minterms: 81 }).unwrap();
        assert_eq!(ok.len(), 81);
        let err = feature_dnf(&c, "f", ReductionOptions { max_minterms: 80 }).unwrap_err();
        assert_eq!(
            err,
            ReductionError::BlowUp {
                node: "f".into(),
                count: 81,
                cap: 80
            }
        );
        assert!(err.to_string().contains("cap of 80"));
    }

    #[test]
    fn reduce_tiny() {
        let c = fixtures::tiny();
        let form = reduce(&c, ReductionOptions::default()).unwrap();
        assert_eq!(form.features, vec!["f1", "f2"]);
        assert_eq!(form.way_count("f1"), 2);
        assert_eq!(form.way_count("f2"), 2);
        let f1 = form.ways_of("f1");
        assert_eq!(f1[0].selection_nodes, set(&["bmp"]));
        assert_eq!(f1[1].selection_nodes, set(&["cmp"]));
        assert_eq!(f1[0].channel_usage["financial"], set(&["bmp"]));
        assert_eq!(f1[1].channel_usage["financial"], set(&["cmp"]));
        for way in &form.ways {
            assert_eq!(way.channel_usage["caregiver_time"], set(&["a_blood"]));
        }
        assert_eq!(f1[1].channel_usage["wait"], set(&["cmp"]));
        assert!(form.dropped.is_empty());
    }

    #[test]
    fn reduce_after_wait_filter() {
        let c = filter_by_wait(&fixtures::tiny(), 30.0).unwrap();
        let form = reduce(&c, ReductionOptions::default()).unwrap();
        assert_eq!(form.way_count("f1"), 1);
        assert_eq!(form.way_count("f2"), 1);
        assert_eq!(form.ways_of("f2")[0].selection_nodes, set(&["bmp"]));
    }

    #[test]
    fn infeasible_features_are_dropped() {
        let c = filter_by_wait(&fixtures::tiny(), 0.0).unwrap();
        let form = reduce(&c, ReductionOptions::default()).unwrap();
        assert!(form.features.is_empty());
        assert_eq!(form.dropped, vec!["f1", "f2"]);

        // a contradiction has no way either
        let c = three_layer(vec![
            Node::new("f", 1, GateKind::And).with_children(["p", "n"]),
            Node::new("g", 1, GateKind::Or).with_children(["p"]),
            Node::new("p", 2, GateKind::Or).with_children(["a"]),
            Node::new("n", 2, GateKind::Not).with_children(["a"]),
            Node::new("a", 3, GateKind::Input),
        ]);
        let form = reduce(&c, ReductionOptions::default()).unwrap();
        assert_eq!(form.features, vec!["g"]);
        assert_eq!(form.dropped, vec!["f"]);
    }

    #[test]
    fn icu_reduction_shape() {
        let c = fixtures::icu();
        let form = reduce(&c, ReductionOptions::default()).unwrap();
        assert_eq!(form.features.len(), c.feature_ids().len());
        assert_eq!(form.way_count("f_hr_mean"), 1);
        assert_eq!(form.way_count("f_creatinine"), 3);
        // sodium, chloride, bicarbonate: only the two panels cover all three
        let ag: Vec<_> = form
            .ways_of("f_anion_gap")
            .iter()
            .map(|w| w.selection_nodes.clone())
            .collect();
        assert_eq!(ag, vec![set(&["t_bmp"]), set(&["t_cmp"])]);
        assert_eq!(form.way_count("f_anemia_marker"), 4);
        let pacer = form.ways_of("f_on_pacemaker");
        assert_eq!(pacer[0].selection_nodes, set(&["t_history"]));
        assert!(pacer[0].channel_usage["caregiver_time"].is_empty());
    }

    #[test]
    fn form_json_round_trip() {
        let form = reduce(&fixtures::icu(), ReductionOptions::default()).unwrap();
        let back: ThreeLayerForm = serde_json::from_str(&form.to_json()).unwrap();
        assert_eq!(back, form);
    }
}
