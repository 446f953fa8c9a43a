//! Group structure over the extended parameter vector, the exact and relaxed
//! cost penalties, and the mapping from fitted coefficients back to the tests
//! and activities a model needs.

use crate::circuit::{Aggregation, CostCircuit};
use crate::dnf::ThreeLayerForm;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

/// Coefficients with magnitude at or below this count as zero.
pub const DEFAULT_SUPPORT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegularizerError {
    #[error("unknown cost channel '{0}'")]
    UnknownChannel(String),
    #[error("channel '{0}': wait channels are handled by filtering, not penalties")]
    MaxChannel(String),
    #[error("lambda must be finite and nonnegative, got {0}")]
    BadLambda(f64),
}

/// One coordinate of the extended vector: feature `feature` obtained its
/// `way`-th way (1-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndexEntry {
    pub feature: String,
    pub way: usize,
}

/// Ordering of the extended coordinates: features in form order, then ways.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<IndexEntry>", into = "Vec<IndexEntry>")]
pub struct ExtendedIndex {
    entries: Vec<IndexEntry>,
    ranges: BTreeMap<String, Range<usize>>,
}

impl From<Vec<IndexEntry>> for ExtendedIndex {
    fn from(entries: Vec<IndexEntry>) -> Self {
        let mut ranges: BTreeMap<String, Range<usize>> = BTreeMap::new();
        for (j, e) in entries.iter().enumerate() {
            ranges
                .entry(e.feature.clone())
                .and_modify(|r| r.end = j + 1)
                .or_insert(j..j + 1);
        }
        ExtendedIndex { entries, ranges }
    }
}

impl From<ExtendedIndex> for Vec<IndexEntry> {
    fn from(index: ExtendedIndex) -> Self {
        index.entries
    }
}

impl ExtendedIndex {
    pub fn from_form(form: &ThreeLayerForm) -> Self {
        form.ways
            .iter()
            .map(|w| IndexEntry {
                feature: w.feature_id.clone(),
                way: w.index,
            })
            .collect::<Vec<_>>()
            .into()
    }

    /// One coordinate per feature, for models over base features.
    pub fn base(features: &[String]) -> Self {
        features
            .iter()
            .map(|f| IndexEntry {
                feature: f.clone(),
                way: 1,
            })
            .collect::<Vec<_>>()
            .into()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn range(&self, feature: &str) -> Option<Range<usize>> {
        self.ranges.get(feature).cloned()
    }

    pub fn position(&self, feature: &str, way: usize) -> Option<usize> {
        let r = self.range(feature)?;
        r.into_iter().find(|&j| self.entries[j].way == way)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub node_id: String,
    pub cost: f64,
    /// Extended coordinates whose way needs this node, ascending.
    pub indices: Vec<usize>,
}

/// Penalty groups of one SUM channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub channel: String,
    pub lambda: f64,
    /// Sorted by node id.
    pub groups: Vec<Group>,
}

impl GroupSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("group spec serializes")
    }
}

/// One group per cost-bearing anchor node of `channel` that some way needs.
pub fn build_groups(
    form: &ThreeLayerForm,
    circuit: &CostCircuit,
    channel: &str,
    lambda: f64,
) -> Result<GroupSpec, RegularizerError> {
    let ch = circuit
        .channel(channel)
        .ok_or_else(|| RegularizerError::UnknownChannel(channel.to_string()))?;
    if ch.aggregation == Aggregation::Max {
        return Err(RegularizerError::MaxChannel(channel.to_string()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(RegularizerError::BadLambda(lambda));
    }
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (j, way) in form.ways.iter().enumerate() {
        if let Some(used) = way.channel_usage.get(channel) {
            for node in used {
                members.entry(node).or_default().push(j);
            }
        }
    }
    let groups = members
        .into_iter()
        .filter_map(|(node_id, indices)| {
            let node = circuit.node(node_id)?;
            let cost = circuit.channel_value(node, ch)?;
            Some(Group {
                node_id: node_id.to_string(),
                cost,
                indices,
            })
        })
        .collect();
    Ok(GroupSpec {
        channel: channel.to_string(),
        lambda,
        groups,
    })
}

/// Groups for every SUM channel of the circuit, taking λ from `lambda_of`.
pub fn build_all_groups(
    form: &ThreeLayerForm,
    circuit: &CostCircuit,
    lambda_of: impl Fn(&str) -> f64,
) -> Result<Vec<GroupSpec>, RegularizerError> {
    circuit
        .channels()
        .iter()
        .filter(|c| c.aggregation == Aggregation::Sum)
        .map(|c| build_groups(form, circuit, &c.name, lambda_of(&c.name)))
        .collect()
}

/// Fitted coefficients over an extended index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedModel {
    pub index: ExtendedIndex,
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub support_eps: f64,
}

impl ExtendedModel {
    pub fn new(index: ExtendedIndex, beta: Vec<f64>, intercept: f64) -> Self {
        assert_eq!(index.len(), beta.len(), "beta must match the index");
        ExtendedModel {
            index,
            beta,
            intercept,
            support_eps: DEFAULT_SUPPORT_EPS,
        }
    }

    pub fn zeros(index: ExtendedIndex) -> Self {
        let n = index.len();
        ExtendedModel::new(index, vec![0.0; n], 0.0)
    }

    pub fn is_active(&self, j: usize) -> bool {
        self.beta[j].abs() > self.support_eps
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.beta.len()).filter(|&j| self.is_active(j)).collect()
    }

    /// Features with an active coordinate, sorted.
    pub fn active_features(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .support()
            .into_iter()
            .map(|j| self.index.entries()[j].feature.as_str())
            .collect();
        set.into_iter().map(String::from).collect()
    }

    /// Active ways and the nodes they need.
    pub fn collapse(&self, form: &ThreeLayerForm) -> FeatureSelection {
        let ways: Vec<IndexEntry> = self
            .support()
            .into_iter()
            .map(|j| self.index.entries()[j].clone())
            .collect();
        FeatureSelection::from_ways(form, ways)
    }
}

/// The features a model computes, how, and what that requires.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub features: Vec<String>,
    pub ways: Vec<IndexEntry>,
    pub selection_nodes: BTreeSet<String>,
    /// Per channel, the anchor-layer nodes used that carry a value for it.
    pub channel_nodes: BTreeMap<String, BTreeSet<String>>,
}

impl FeatureSelection {
    /// Ways not present in the form are ignored.
    pub fn from_ways(form: &ThreeLayerForm, mut ways: Vec<IndexEntry>) -> Self {
        ways.sort();
        ways.dedup();
        let mut sel = FeatureSelection::default();
        let mut features = BTreeSet::new();
        for entry in &ways {
            let Some(way) = form.ways_of(&entry.feature).iter().find(|w| w.index == entry.way) else {
                continue;
            };
            features.insert(entry.feature.clone());
            sel.selection_nodes.extend(way.selection_nodes.iter().cloned());
            for (ch, used) in &way.channel_usage {
                sel.channel_nodes
                    .entry(ch.clone())
                    .or_default()
                    .extend(used.iter().cloned());
            }
        }
        sel.features = features.into_iter().collect();
        sel.ways = ways;
        sel
    }
}

/// Per-channel cost of a selection: SUM channels add each used node once,
/// MAX channels take the largest value (0 when nothing is used).
pub fn cost_report(selection: &FeatureSelection, circuit: &CostCircuit) -> BTreeMap<String, f64> {
    let empty = BTreeSet::new();
    circuit
        .channels()
        .iter()
        .map(|ch| {
            let used = selection.channel_nodes.get(&ch.name).unwrap_or(&empty);
            let values = used
                .iter()
                .filter_map(|id| circuit.node(id).and_then(|n| circuit.channel_value(n, ch)));
            let total = match ch.aggregation {
                Aggregation::Sum => values.fold(0.0, |acc, v| acc + v),
                Aggregation::Max => values.fold(0.0, f64::max),
            };
            (ch.name.clone(), total)
        })
        .collect()
}

/// Total of the SUM channels in a cost report, in channel order.
pub fn summed_cost(report: &BTreeMap<String, f64>, circuit: &CostCircuit) -> f64 {
    circuit
        .channels()
        .iter()
        .filter(|c| c.aggregation == Aggregation::Sum)
        .map(|c| report.get(&c.name).copied().unwrap_or(0.0))
        .fold(0.0, |acc, v| acc + v)
}

/// Pay-per-node penalty: each group's cost counts once if any of its
/// coordinates is active.
pub fn exact_penalty(model: &ExtendedModel, specs: &[GroupSpec]) -> f64 {
    specs
        .iter()
        .map(|spec| {
            let paid = spec
                .groups
                .iter()
                .filter(|g| g.indices.iter().any(|&j| model.is_active(j)))
                .fold(0.0, |acc, g| acc + g.cost);
            spec.lambda * paid
        })
        .fold(0.0, |acc, v| acc + v)
}

/// Sum of cost-weighted group ℓ∞ norms.
pub fn relaxed_penalty(beta: &[f64], specs: &[GroupSpec]) -> f64 {
    specs
        .iter()
        .map(|spec| {
            spec.lambda
                * spec
                    .groups
                    .iter()
                    .map(|g| g.cost * g.indices.iter().map(|&j| beta[j].abs()).fold(0.0, f64::max))
                    .sum::<f64>()
        })
        .sum()
}

/// Ways for a base-feature model: each feature starts at its individually
/// cheapest way, then features switch ways one at a time while that lowers
/// the summed SUM-channel cost of the union.
pub fn cheapest_selection(form: &ThreeLayerForm, circuit: &CostCircuit, features: &[String]) -> FeatureSelection {
    let cost_of = |ways: &[IndexEntry]| {
        let sel = FeatureSelection::from_ways(form, ways.to_vec());
        summed_cost(&cost_report(&sel, circuit), circuit)
    };
    let mut choice: Vec<IndexEntry> = Vec::new();
    for f in features {
        let ways = form.ways_of(f);
        let best = ways
            .iter()
            .map(|w| {
                let e = IndexEntry {
                    feature: f.clone(),
                    way: w.index,
                };
                let c = cost_of(std::slice::from_ref(&e));
                (e, c)
            })
            .reduce(|a, b| if b.1 < a.1 { b } else { a });
        if let Some((e, _)) = best {
            choice.push(e);
        }
    }

    let mut current = cost_of(&choice);
    for _ in 0..choice.len().max(1) * 4 {
        let mut improved = false;
        for k in 0..choice.len() {
            for w in form.ways_of(&choice[k].feature) {
                if w.index == choice[k].way {
                    continue;
                }
                let mut trial = choice.clone();
                trial[k].way = w.index;
                let c = cost_of(&trial);
                if c < current {
                    choice = trial;
                    current = c;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    FeatureSelection::from_ways(form, choice)
}

/// Per-feature scale for the scaled ℓ1 baseline: the larger of 1 and the
/// financial cost of the feature's cheapest way.
pub fn feature_scales(form: &ThreeLayerForm, circuit: &CostCircuit, channel: &str, features: &[String]) -> Vec<f64> {
    features
        .iter()
        .map(|f| {
            let cheapest = form
                .ways_of(f)
                .iter()
                .map(|w| {
                    let sel = FeatureSelection::from_ways(
                        form,
                        vec![IndexEntry {
                            feature: f.clone(),
                            way: w.index,
                        }],
                    );
                    cost_report(&sel, circuit).get(channel).copied().unwrap_or(0.0)
                })
                .fold(f64::INFINITY, f64::min);
            if cheapest.is_finite() {
                cheapest.max(1.0)
            } else {
                1.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::fixtures;
    use crate::dnf::{reduce, ReductionOptions};

    fn tiny() -> (CostCircuit, ThreeLayerForm, ExtendedIndex) {
        let c = fixtures::tiny();
        let form = reduce(&c, ReductionOptions::default()).unwrap();
        let index = ExtendedIndex::from_form(&form);
        (c, form, index)
    }

    fn model(index: &ExtendedIndex, beta: [f64; 4]) -> ExtendedModel {
        ExtendedModel::new(index.clone(), beta.to_vec(), 0.0)
    }

    #[test]
    fn index_order_and_ranges() {
        let (_, _, index) = tiny();
        let e: Vec<(&str, usize)> = index.entries().iter().map(|e| (e.feature.as_str(), e.way)).collect();
        assert_eq!(e, vec![("f1", 1), ("f1", 2), ("f2", 1), ("f2", 2)]);
        assert_eq!(index.range("f2"), Some(2..4));
        assert_eq!(index.position("f2", 2), Some(3));
        assert_eq!(index.position("f3", 1), None);
    }

    #[test]
    fn tiny_groups() {
        let (c, form, _) = tiny();
        let fin = build_groups(&form, &c, "financial", 1.0).unwrap();
        assert_eq!(
            fin.groups,
            vec![
                Group {
                    node_id: "bmp".into(),
                    cost: 10.0,
                    indices: vec![0, 2]
                },
                Group {
                    node_id: "cmp".into(),
                    cost: 15.0,
                    indices: vec![1, 3]
                },
            ]
        );
        let time = build_groups(&form, &c, "caregiver_time", 1.0).unwrap();
        assert_eq!(
            time.groups,
            vec![Group {
                node_id: "a_blood".into(),
                cost: 5.0,
                indices: vec![0, 1, 2, 3]
            }]
        );
        let err = build_groups(&form, &c, "wait", 1.0).unwrap_err();
        assert!(err
            .to_string()
            .contains("wait channels are handled by filtering, not penalties"));
        assert!(matches!(
            build_groups(&form, &c, "nope", 1.0),
            Err(RegularizerError::UnknownChannel(_))
        ));
        assert!(matches!(
            build_groups(&form, &c, "financial", -1.0),
            Err(RegularizerError::BadLambda(_))
        ));
    }

    #[test]
    fn zero_cost_node_still_forms_a_group() {
        let c = fixtures::icu();
        let form = reduce(&c, ReductionOptions::default()).unwrap();
        let fin = build_groups(&form, &c, "financial", 1.0).unwrap();
        let routine = fin.groups.iter().find(|g| g.node_id == "t_routine").unwrap();
        assert_eq!(routine.cost, 0.0);
        assert!(!routine.indices.is_empty());
    }

    #[test]
    fn exact_penalty_examples() {
        let (c, form, index) = tiny();
        let specs = vec![build_groups(&form, &c, "financial", 1.0).unwrap()];
        assert_eq!(exact_penalty(&model(&index, [0.0; 4]), &specs), 0.0);
        assert_eq!(exact_penalty(&model(&index, [0.4, 0.0, 0.0, 0.0]), &specs), 10.0);
        // shared test is paid once
        assert_eq!(exact_penalty(&model(&index, [0.4, 0.0, -0.2, 0.0]), &specs), 10.0);
    }

    #[test]
    fn relaxed_penalty_examples() {
        let (c, form, _) = tiny();
        let specs = vec![build_groups(&form, &c, "financial", 1.0).unwrap()];
        assert_eq!(relaxed_penalty(&[0.0; 4], &specs), 0.0);
        assert_eq!(relaxed_penalty(&[2.0, 0.0, -1.0, 0.0], &specs), 20.0);
        let beta = [0.3, -1.2, 0.7, 2.0];
        let scaled: Vec<f64> = beta.iter().map(|b| b * 2.5).collect();
        let a = relaxed_penalty(&beta, &specs);
        assert!((relaxed_penalty(&scaled, &specs) - 2.5 * a).abs() < 1e-12);
    }

    #[test]
    fn collapse_examples() {
        let (_, form, index) = tiny();
        assert_eq!(model(&index, [0.0; 4]).collapse(&form), FeatureSelection::default());
        let sel = model(&index, [0.0, 0.3, 0.0, 0.0]).collapse(&form);
        assert_eq!(sel.features, vec!["f1"]);
        assert_eq!(sel.selection_nodes, BTreeSet::from(["cmp".to_string()]));
        assert_eq!(
            sel.channel_nodes["caregiver_time"],
            BTreeSet::from(["a_blood".to_string()])
        );
        let tiny_coef = model(&index, [0.0, 1e-9, 0.0, 0.0]).collapse(&form);
        assert!(tiny_coef.features.is_empty());
    }

    #[test]
    fn cost_report_examples() {
        let (c, form, index) = tiny();
        let empty = cost_report(&FeatureSelection::default(), &c);
        assert!(empty.values().all(|&v| v == 0.0));
        assert_eq!(empty.len(), 3);

        let both_bmp = cost_report(&model(&index, [1.0, 0.0, 1.0, 0.0]).collapse(&form), &c);
        assert_eq!(both_bmp["financial"], 10.0);
        assert_eq!(both_bmp["caregiver_time"], 5.0);
        assert_eq!(both_bmp["wait"], 30.0);

        let mixed = cost_report(&model(&index, [1.0, 0.0, 0.0, 1.0]).collapse(&form), &c);
        assert_eq!(mixed["financial"], 25.0);
        assert_eq!(mixed["caregiver_time"], 5.0);
        assert_eq!(mixed["wait"], 50.0);
    }

    #[test]
    fn cheapest_selection_prefers_shared_tests() {
        let c = fixtures::icu();
        let form = reduce(&c, ReductionOptions::default()).unwrap();
        // creatinine alone is cheapest standalone; with the anion gap a panel
        // already pays for it
        let feats = vec!["f_anion_gap".to_string(), "f_creatinine".to_string()];
        let sel = cheapest_selection(&form, &c, &feats);
        assert_eq!(sel.selection_nodes, BTreeSet::from(["t_bmp".to_string()]));
        assert_eq!(cost_report(&sel, &c)["financial"], 25.0);

        let alone = cheapest_selection(&form, &c, &["f_creatinine".to_string()]);
        assert_eq!(alone.selection_nodes, BTreeSet::from(["t_creatinine".to_string()]));
    }

    #[test]
    fn scales_follow_cheapest_way() {
        let c = fixtures::icu();
        let form = reduce(&c, ReductionOptions::default()).unwrap();
        let feats = vec![
            "f_hr_mean".to_string(),
            "f_creatinine".to_string(),
            "f_anion_gap".to_string(),
        ];
        assert_eq!(feature_scales(&form, &c, "financial", &feats), vec![1.0, 10.0, 25.0]);
    }

    #[test]
    fn index_serde_round_trip() {
        let (_, _, index) = tiny();
        let text = serde_json::to_string(&index).unwrap();
        let back: ExtendedIndex = serde_json::from_str(&text).unwrap();
        assert_eq!(back, index);
        assert_eq!(back.range("f1"), Some(0..2));
    }
}
