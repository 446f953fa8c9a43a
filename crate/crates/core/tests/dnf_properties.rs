use costwise::circuit::{
    evaluate, filter_by_wait, fixtures, random_circuit, Aggregation, CostChannel, CostCircuit, GateKind, Node,
    RandomCircuitConfig,
};
use costwise::dnf::{feature_dnf, reduce, signed_dnf, to_nnf, Literal, ReductionError, ReductionOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

fn circuit_from_seed(seed: u64, not_prob: f64) -> CostCircuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_circuit(
        &mut rng,
        &RandomCircuitConfig {
            not_prob,
            ..RandomCircuitConfig::default()
        },
    )
}

fn selection_ids(c: &CostCircuit) -> Vec<String> {
    c.layer_ids(c.selection_layer()).into_iter().map(String::from).collect()
}

fn assignment(vars: &[String], mask: u32) -> BTreeMap<String, bool> {
    vars.iter()
        .enumerate()
        .map(|(k, v)| (v.clone(), mask >> k & 1 == 1))
        .collect()
}

fn dnf_value(terms: &[Vec<Literal>], assign: &BTreeMap<String, bool>) -> bool {
    terms.iter().any(|t| t.iter().all(|l| assign[&l.node] != l.negated))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signed_dnf_matches_evaluation(seed in any::<u64>()) {
        let c = circuit_from_seed(seed, 0.25);
        let vars = selection_ids(&c);
        let dnfs: Vec<(String, Vec<Vec<Literal>>)> = c
            .feature_ids()
            .into_iter()
            .map(|f| (f.to_string(), signed_dnf(&c, f, ReductionOptions::default()).unwrap()))
            .collect();
        for mask in 0..1u32 << vars.len() {
            let a = assignment(&vars, mask);
            let truth = evaluate(&c, &a).unwrap();
            for (f, terms) in &dnfs {
                prop_assert_eq!(dnf_value(terms, &a), truth[f], "feature {} mask {:b}", f, mask);
            }
        }
    }

    #[test]
    fn implicants_are_minimal(seed in any::<u64>()) {
        let c = circuit_from_seed(seed, 0.25);
        for f in c.feature_ids() {
            let terms = signed_dnf(&c, f, ReductionOptions::default()).unwrap();
            let sets: Vec<BTreeSet<&Literal>> = terms.iter().map(|t| t.iter().collect()).collect();
            for (i, a) in sets.iter().enumerate() {
                prop_assert!(!a.is_empty() || sets.len() == 1);
                for (j, b) in sets.iter().enumerate() {
                    prop_assert!(i == j || !a.is_subset(b), "{:?} absorbs {:?}", a, b);
                }
            }
        }
    }

    #[test]
    fn nnf_keeps_truth_tables_and_pushes_negations_down(seed in any::<u64>()) {
        let c = circuit_from_seed(seed, 0.35);
        let nnf = to_nnf(&c);
        let sel = nnf.selection_layer();
        for node in nnf.nodes() {
            if node.gate == GateKind::Not {
                let child = nnf.node(&node.children[0]).unwrap();
                prop_assert_eq!(child.layer, sel, "NOT '{}' above a non-variable", node.id);
            }
        }
        let vars = selection_ids(&c);
        for mask in 0..1u32 << vars.len() {
            let a = assignment(&vars, mask);
            let before = evaluate(&c, &a).unwrap();
            let after = evaluate(&nnf, &a).unwrap();
            for f in c.feature_ids() {
                prop_assert_eq!(before[f], after[f]);
            }
        }
    }

    #[test]
    fn monotone_ways_match_signed_dnf(seed in any::<u64>()) {
        let c = circuit_from_seed(seed, 0.0);
        let form = reduce(&c, ReductionOptions::default()).unwrap();
        for f in c.feature_ids() {
            let signed = signed_dnf(&c, f, ReductionOptions::default()).unwrap();
            let expect: BTreeSet<BTreeSet<String>> = signed
                .iter()
                .map(|t| t.iter().map(|l| l.node.clone()).collect())
                .collect();
            let got: BTreeSet<BTreeSet<String>> = form.ways_of(f).iter().map(|w| w.selection_nodes.clone()).collect();
            prop_assert_eq!(&got, &expect);
            prop_assert_eq!(form.dropped.contains(&f.to_string()), got.is_empty());
        }
    }

    #[test]
    fn filtering_never_adds_ways(seed in any::<u64>(), cap in prop::sample::select(vec![0.0, 10.0, 30.0, 50.0])) {
        let c = circuit_from_seed(seed, 0.0);
        let full = reduce(&c, ReductionOptions::default()).unwrap();
        let filtered = reduce(&filter_by_wait(&c, cap).unwrap(), ReductionOptions::default()).unwrap();
        for f in &filtered.features {
            prop_assert!(filtered.way_count(f) <= full.way_count(f));
            for w in filtered.ways_of(f) {
                prop_assert!(full.ways_of(f).iter().any(|v| v.selection_nodes == w.selection_nodes));
            }
        }
    }

    #[test]
    fn reduction_is_deterministic(seed in any::<u64>()) {
        let c = circuit_from_seed(seed, 0.0);
        let a = reduce(&c, ReductionOptions::default()).unwrap().to_json();
        let b = reduce(&c.clone(), ReductionOptions::default()).unwrap().to_json();
        prop_assert_eq!(a, b);
    }
}

/// f = NOT(a OR (b AND c)) over inputs a, b, c at layer 4; the edge from
/// the OR straight to `a` is bridged by a pass-through.
fn de_morgan_circuit() -> CostCircuit {
    let mut nodes = vec![
        Node::new("f", 1, GateKind::Not).with_children(["o"]),
        Node::new("o", 2, GateKind::Or).with_children(["a", "bc"]),
        Node::new("bc", 3, GateKind::And).with_children(["b", "c"]),
    ];
    for t in ["a", "b", "c"] {
        nodes.push(Node::new(t, 4, GateKind::Input).with_cost("financial", 1.0));
    }
    CostCircuit::new(
        vec!["feature".into(), "mid".into(), "low".into(), "test".into()],
        nodes,
        vec![
            CostChannel::new("financial", 4, Aggregation::Sum, "USD"),
            CostChannel::new("wait", 4, Aggregation::Max, "minutes"),
        ],
        4,
    )
    .with_pass_throughs()
}

#[test]
fn de_morgan_over_three_inputs() {
    let c = de_morgan_circuit();
    assert!(
        costwise::circuit::validate(&c).is_ok(),
        "{}",
        costwise::circuit::validate(&c)
    );
    let nnf = to_nnf(&c);
    let vars = vec!["a".to_string(), "b".to_string(), "c".to_string()];
    for mask in 0..8u32 {
        let (a, b, cc) = (mask & 1 == 1, mask & 2 == 2, mask & 4 == 4);
        let expect = !(a || (b && cc));
        let asg = assignment(&vars, mask);
        assert_eq!(evaluate(&nnf, &asg).unwrap()["f"], expect, "mask {mask:03b}");
        let terms = signed_dnf(&c, "f", ReductionOptions::default()).unwrap();
        assert_eq!(dnf_value(&terms, &asg), expect);
    }
    // (¬a ∧ ¬b) ∨ (¬a ∧ ¬c)
    let terms = signed_dnf(&c, "f", ReductionOptions::default()).unwrap();
    assert_eq!(terms.len(), 2);
    assert!(terms.iter().all(|t| t.iter().all(|l| l.negated) && t.len() == 2));
    assert!(matches!(
        feature_dnf(&c, "f", ReductionOptions::default()),
        Err(ReductionError::NegativeLiteral { .. })
    ));
}

#[test]
fn tiny_fixture_ways_and_masks() {
    let c = fixtures::tiny();
    let form = reduce(&c, ReductionOptions::default()).unwrap();
    for f in ["f1", "f2"] {
        let ways = form.ways_of(f);
        assert_eq!(ways.len(), 2);
        let fin: Vec<BTreeSet<String>> = ways.iter().map(|w| w.channel_usage["financial"].clone()).collect();
        let expect: Vec<BTreeSet<String>> = vec![["bmp".to_string()].into(), ["cmp".to_string()].into()];
        assert_eq!(fin, expect);
        for w in ways {
            assert_eq!(
                w.channel_usage["caregiver_time"],
                BTreeSet::from(["a_blood".to_string()])
            );
        }
    }
    let filtered = reduce(&filter_by_wait(&c, 30.0).unwrap(), ReductionOptions::default()).unwrap();
    assert_eq!(filtered.way_count("f1"), 1);
    assert_eq!(filtered.way_count("f2"), 1);
}

#[test]
fn icu_reduction_is_stable_and_drops_nothing() {
    let c = fixtures::icu();
    let form = reduce(&c, ReductionOptions::default()).unwrap();
    assert!(form.dropped.is_empty(), "{:?}", form.dropped);
    assert_eq!(form.features.len(), c.feature_ids().len());
    assert!(form.extended_size() > form.features.len());
    assert_eq!(
        form.to_json(),
        reduce(&c, ReductionOptions::default()).unwrap().to_json()
    );
}
