use costwise::circuit::{fixtures, CostCircuit};
use costwise::dnf::{reduce, ReductionOptions, ThreeLayerForm};
use costwise::regularizer::{
    build_all_groups, build_groups, cost_report, exact_penalty, relaxed_penalty, summed_cost, ExtendedIndex,
    ExtendedModel, Group, GroupSpec, RegularizerError,
};
use proptest::prelude::*;
use std::sync::OnceLock;

struct Setup {
    circuit: CostCircuit,
    form: ThreeLayerForm,
    specs: Vec<GroupSpec>,
}

fn setup(circuit: CostCircuit) -> Setup {
    let form = reduce(&circuit, ReductionOptions::default()).unwrap();
    let specs = build_all_groups(&form, &circuit, |_| 1.0).unwrap();
    Setup { circuit, form, specs }
}

fn icu() -> &'static Setup {
    static ICU: OnceLock<Setup> = OnceLock::new();
    ICU.get_or_init(|| setup(fixtures::icu()))
}

fn model_with_support(form: &ThreeLayerForm, support: &[bool], values: &[f64]) -> ExtendedModel {
    let beta = support
        .iter()
        .zip(values.iter().cycle())
        .map(|(&on, &v)| if on { v } else { 0.0 })
        .collect();
    ExtendedModel::new(ExtendedIndex::from_form(form), beta, 0.0)
}

fn keystone_holds(s: &Setup, model: &ExtendedModel) -> (f64, f64) {
    let penalty = exact_penalty(model, &s.specs);
    let posthoc = summed_cost(&cost_report(&model.collapse(&s.form), &s.circuit), &s.circuit);
    (penalty, posthoc)
}

#[test]
fn keystone_exhaustive_on_tiny() {
    let s = setup(fixtures::tiny());
    let n = s.form.extended_size();
    assert_eq!(n, 4);
    for mask in 0..1u32 << n {
        let support: Vec<bool> = (0..n).map(|j| mask >> j & 1 == 1).collect();
        let (penalty, posthoc) = keystone_holds(&s, &model_with_support(&s.form, &support, &[0.7, -1.3]));
        assert_eq!(penalty, posthoc, "support {mask:04b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn keystone_on_icu(bits in prop::collection::vec(prop::bool::weighted(0.15), 1..400), values in prop::collection::vec(-3.0f64..3.0, 1..8)) {
        let s = icu();
        let n = s.form.extended_size();
        let support: Vec<bool> = (0..n).map(|j| bits[j % bits.len()]).collect();
        // keep chosen coordinates clearly above the support threshold
        let values: Vec<f64> = values.iter().map(|v| if v.abs() < 1e-3 { 1.0 } else { *v }).collect();
        let (penalty, posthoc) = keystone_holds(s, &model_with_support(&s.form, &support, &values));
        prop_assert_eq!(penalty, posthoc);
    }

    #[test]
    fn exact_penalty_is_monotone_in_support(bits in prop::collection::vec(any::<bool>(), 400), extra in prop::collection::vec(any::<bool>(), 400)) {
        let s = icu();
        let n = s.form.extended_size();
        let small: Vec<bool> = bits[..n].to_vec();
        let large: Vec<bool> = small.iter().zip(&extra).map(|(&a, &b)| a || b).collect();
        let a = exact_penalty(&model_with_support(&s.form, &small, &[1.0]), &s.specs);
        let b = exact_penalty(&model_with_support(&s.form, &large, &[1.0]), &s.specs);
        prop_assert!(a <= b);
    }

    #[test]
    fn collapse_is_scale_invariant(bits in prop::collection::vec(prop::bool::weighted(0.2), 400), values in prop::collection::vec(0.01f64..3.0, 8), t in 0.01f64..100.0) {
        let s = icu();
        let n = s.form.extended_size();
        let m = model_with_support(&s.form, &bits[..n], &values);
        let scaled = ExtendedModel::new(m.index.clone(), m.beta.iter().map(|b| b * t).collect(), 0.0);
        prop_assert_eq!(m.collapse(&s.form), scaled.collapse(&s.form));
    }
}

/// Random groups over `n` coordinates with positive costs, covering every
/// coordinate at least once.
fn covering_specs(n: usize, raw: &[(f64, Vec<bool>)]) -> Vec<GroupSpec> {
    let mut groups: Vec<Group> = raw
        .iter()
        .enumerate()
        .map(|(k, (cost, mask))| Group {
            node_id: format!("g{k}"),
            cost: *cost,
            indices: (0..n).filter(|&j| mask[j % mask.len()]).collect(),
        })
        .filter(|g| !g.indices.is_empty())
        .collect();
    groups.push(Group {
        node_id: "all".into(),
        cost: 0.5,
        indices: (0..n).collect(),
    });
    vec![GroupSpec {
        channel: "financial".into(),
        lambda: 0.8,
        groups,
    }]
}

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn relaxed_penalty_is_a_norm(
        raw in prop::collection::vec((0.1f64..20.0, prop::collection::vec(any::<bool>(), 1..6)), 0..6),
        x in vec_strategy(6),
        y in vec_strategy(6),
        t in -5.0f64..5.0,
    ) {
        let specs = covering_specs(6, &raw);
        let p = |v: &[f64]| relaxed_penalty(v, &specs);
        prop_assert!(p(&x) >= 0.0);
        prop_assert_eq!(p(&[0.0; 6]), 0.0);
        if x.iter().any(|&v| v != 0.0) {
            prop_assert!(p(&x) > 0.0);
        }
        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        prop_assert!((p(&tx) - t.abs() * p(&x)).abs() <= 1e-9 * (1.0 + p(&x)));
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(p(&sum) <= p(&x) + p(&y) + 1e-9);
    }
}

#[test]
fn relaxed_penalty_is_a_norm_on_tiny() {
    let s = setup(fixtures::tiny());
    let x = [2.0, -1.0, 0.5, 0.0];
    let y = [-1.0, 3.0, 0.0, 0.25];
    let p = |v: &[f64]| relaxed_penalty(v, &s.specs);
    assert!(p(&[0.0, 0.0, 0.0, 1e-12]) > 0.0);
    let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    assert!(p(&sum) <= p(&x) + p(&y));
}

#[test]
fn wait_channel_is_refused() {
    let s = setup(fixtures::tiny());
    let err = build_groups(&s.form, &s.circuit, "wait", 1.0).unwrap_err();
    assert!(matches!(err, RegularizerError::MaxChannel(_)));
    assert!(err
        .to_string()
        .contains("wait channels are handled by filtering, not penalties"));
}

const ICU_GROUPS: &str = include_str!("../fixtures/icu_groups.json");

/// The committed ICU group dump. Regenerate with `COSTWISE_BLESS=1`.
#[test]
fn icu_groups_match_committed_dump() {
    let s = icu();
    let dump = serde_json::to_string_pretty(&s.specs).unwrap() + "\n";
    if std::env::var_os("COSTWISE_BLESS").is_some() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/icu_groups.json");
        std::fs::write(path, &dump).unwrap();
        return;
    }
    assert_eq!(
        dump, ICU_GROUPS,
        "ICU group structure changed; rerun with COSTWISE_BLESS=1 if intended"
    );
    let parsed: Vec<GroupSpec> = serde_json::from_str(ICU_GROUPS).unwrap();
    assert_eq!(parsed, s.specs);
    for spec in &parsed {
        assert!(spec.groups.iter().all(|g| !g.indices.is_empty()));
    }
}
