use super::fixtures::*;
use super::*;
use proptest::prelude::*;

#[test]
fn fix3_cut_values() {
    let cut = fix3_cut();
    // 10 − 8·|0−1| = 2
    assert_eq!(evaluate_relu_cut(&cut, &[0.0, 2.0]).unwrap(), 2.0);
    // 10 − 6·1 − 2.5·1 = 1.5
    assert_eq!(evaluate_relu_cut(&cut, &[2.0, 1.0]).unwrap(), 1.5);
    assert_eq!(evaluate_relu_cut(&cut, &[1.0, 2.0]).unwrap(), 10.0);
}

#[test]
fn evaluation_checks_dimension() {
    let err = evaluate_relu_cut(&fix3_cut(), &[1.0]).unwrap_err();
    assert!(matches!(err, Error::Dimension { expected: 2, got: 1, .. }));
}

#[test]
fn linear_to_relu_on_binary_anchor() {
    // θ ≥ 4 − 2(x₁−1) − 2x₂  ⇔  θ ≥ 6 − 2x₁ − 2x₂
    let lin = LinearCut {
        coeffs: vec![-2.0, -2.0],
        rhs: 6.0,
    };
    let r = linear_to_relu(&lin, &[1.0, 0.0], 4.0, ScenarioTag::Scenario(0)).unwrap();
    assert_eq!(r.pi_plus, vec![-2.0, -2.0]);
    assert_eq!(r.pi_minus, vec![2.0, 2.0]);
    assert_eq!(r.intercept, 4.0);
}

#[test]
fn zero_cut_converts_to_zero() {
    let lin = LinearCut {
        coeffs: vec![0.0; 3],
        rhs: 0.0,
    };
    let r = linear_to_relu(&lin, &[1.0, 2.0, 0.5], 0.0, ScenarioTag::Aggregate).unwrap();
    assert!(r.pi_plus.iter().chain(&r.pi_minus).all(|v| *v == 0.0));
    assert_eq!(r.intercept, 0.0);
}

#[test]
fn non_tight_conversion_fails() {
    let lin = LinearCut {
        coeffs: vec![1.0],
        rhs: 0.0,
    };
    assert!(matches!(
        linear_to_relu(&lin, &[1.0], 2.0, ScenarioTag::Aggregate),
        Err(Error::NotTight(_))
    ));
}

#[test]
fn gap_definition() {
    assert_eq!(relative_gap(2.0, 2.0), 0.0);
    assert!((relative_gap(-4.0, -3.0) - 0.25).abs() < 1e-15);
    assert!((relative_gap(10.0, 11.0) - 0.1).abs() < 1e-15);
    // division guard
    assert_eq!(relative_gap(0.0, 1e-10), 1.0);
}

#[test]
fn shift_is_recorded_and_undone() {
    // x ∈ [1, 3], x ≥ 2; scenario y ≥ x
    let inst = SmipInstance::new(
        vec![1.0],
        SparseMatrix::from_dense(&[vec![1.0]], 1),
        vec![2.0],
        vec![VarKind::Integer],
        vec![(1.0, 3.0)],
        vec![Scenario {
            q: vec![1.0],
            w: SparseMatrix::from_dense(&[vec![1.0]], 1),
            t: SparseMatrix::from_dense(&[vec![-1.0]], 1),
            h: vec![0.0],
            y_kinds: vec![VarKind::Continuous],
            y_bounds: vec![],
            prob: 1.0,
        }],
    )
    .unwrap();
    assert_eq!(inst.upper, vec![2.0]);
    assert_eq!(inst.shift, vec![1.0]);
    assert_eq!(inst.b, vec![1.0]);
    // original y ≥ x becomes y ≥ x' + 1
    assert_eq!(inst.scenarios[0].h, vec![1.0]);
    assert_eq!(inst.scenarios[0].y_bounds, vec![(0.0, f64::INFINITY)]);
    assert_eq!(inst.to_original(&[0.5]), vec![1.5]);
    assert_eq!(inst.objective_offset(), 1.0);
    let back = SmipInstance::from_json_str(&inst.to_json_string().unwrap()).unwrap();
    assert_eq!(back.b, inst.b);
    assert_eq!(back.scenarios[0].h, inst.scenarios[0].h);
    assert_eq!(back.to_file().bounds, vec![[1.0, 3.0]]);
}

#[test]
fn json_schema_round_trip() {
    let text = r#"{
        "c": [-1.0],
        "A": {"rows": 0, "cols": 1, "triplets": []},
        "b": [],
        "var_kinds": ["integer"],
        "bounds": [[0, 2]],
        "scenarios": [
            {"q": [1], "W": {"rows": 1, "cols": 1, "triplets": [[0, 0, 1]]},
             "T": {"rows": 1, "cols": 1, "triplets": [[0, 0, -0.5]]},
             "h": [1], "y_kinds": ["integer"], "y_bounds": [[0, null]], "prob": 1}
        ]
    }"#;
    let inst = SmipInstance::from_json_str(text).unwrap();
    assert_eq!(inst.scenarios[0].y_bounds, vec![(0.0, f64::INFINITY)]);
    let again = inst.to_json_string().unwrap();
    assert_eq!(SmipInstance::from_json_str(&again).unwrap().to_json_string().unwrap(), again);
}

#[test]
fn invalid_instances_rejected() {
    let mut f = fix1().to_file();
    f.scenarios[0].prob = 0.7;
    assert!(matches!(f.into_instance(), Err(Error::InvalidInstance(_))));

    let mut f = fix1().to_file();
    f.scenarios[1].h.push(0.0);
    assert!(f.into_instance().is_err());

    let mut f = fix1().to_file();
    f.bounds = vec![[0.0, 1.5]];
    assert!(f.into_instance().is_err());

    // x ≥ 3 with x ≤ 2: empty first stage
    let mut f = fix1().to_file();
    f.a = SparseMatrix::from_dense(&[vec![1.0]], 1);
    f.b = vec![3.0];
    assert!(matches!(f.into_instance(), Err(Error::InvalidInstance(_))));

    assert!(SmipInstance::from_json_str("{\"c\": [1]}").is_err());
}

#[test]
fn fixtures_are_consistent() {
    for inst in [fix1(), fix4(), fix6(), fixmi(), ceil_identity(2)] {
        let p: f64 = inst.probabilities().iter().sum();
        assert!((p - 1.0).abs() < 1e-12);
    }
    assert!(fix6().all_binary());
    assert!(!fixmi().all_integer());
    assert_eq!(fix3_points().0.len(), 11);
    assert_eq!(fix2_points().0.len(), 7);
}

fn arb_binary_cut(n: usize) -> impl Strategy<Value = ReluCut> {
    (
        prop::collection::vec(0u8..=1, n),
        -10.0f64..10.0,
        prop::collection::vec(-10.0f64..10.0, n),
        prop::collection::vec(-10.0f64..10.0, n),
    )
        .prop_map(|(a, q, pp, pm)| ReluCut {
            anchor: a.into_iter().map(f64::from).collect(),
            intercept: q,
            pi_plus: pp,
            pi_minus: pm,
            scenario: ScenarioTag::Scenario(0),
        })
}

proptest! {
    #[test]
    fn binary_linear_form_agrees_everywhere(cut in (1usize..=10).prop_flat_map(arb_binary_cut)) {
        let n = cut.dim();
        let lin = binary_linear_form(&cut);
        for mask in 0u32..(1 << n) {
            let x: Vec<f64> = (0..n).map(|i| f64::from((mask >> i) & 1)).collect();
            let a = cut.eval(&x);
            let b = lin.eval(&x);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn linear_round_trip(
        g in prop::collection::vec(-5.0f64..5.0, 3),
        anchor in prop::collection::vec(0.0f64..4.0, 3),
        q in -20.0f64..20.0,
        pts in prop::collection::vec(prop::collection::vec(-1.0f64..5.0, 3), 1000),
    ) {
        let lin = LinearCut::through(&anchor, q, &g);
        let relu = linear_to_relu(&lin, &anchor, q, ScenarioTag::Aggregate).unwrap();
        for x in &pts {
            let d = (relu.eval(x) - lin.eval(x)).abs();
            prop_assert!(d <= 1e-12 * (1.0 + lin.eval(x).abs()) + 1e-12);
        }
    }

    #[test]
    fn cut_at_anchor_is_intercept(cut in (1usize..=6).prop_flat_map(arb_binary_cut)) {
        prop_assert_eq!(cut.eval(&cut.anchor), cut.intercept);
    }
}
