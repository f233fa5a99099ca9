use super::*;
use crate::model::fixtures::*;
use crate::model::SparseMatrix;
use proptest::prelude::*;

fn fix3() -> RecourseTable {
    let (p, v) = fix3_points();
    RecourseTable::from_points(p, v)
}

fn relu(anchor: &[f64], q: f64, pp: &[f64], pm: &[f64]) -> ReluCut {
    ReluCut {
        anchor: anchor.to_vec(),
        intercept: q,
        pi_plus: pp.to_vec(),
        pi_minus: pm.to_vec(),
        scenario: ScenarioTag::Scenario(0),
    }
}

/// Augmented Lagrangian cut `θ ≥ q + πᵀ(x−x̂) − ρ‖x−x̂‖₁` in ReLU form.
fn augmented(anchor: &[f64], q: f64, pi: &[f64], rho: f64) -> ReluCut {
    let pp: Vec<f64> = pi.iter().map(|p| p - rho).collect();
    let pm: Vec<f64> = pi.iter().map(|p| -p - rho).collect();
    relu(anchor, q, &pp, &pm)
}

#[test]
fn fix6_table() {
    let t = build_table(&fix6(), 0).unwrap();
    assert_eq!(t.len(), 4);
    for (x, q) in [([0.0, 0.0], 8.0), ([1.0, 0.0], 4.0), ([0.0, 1.0], 4.0), ([1.0, 1.0], 2.0)] {
        assert_eq!(t.value_at(&x), Some(q));
    }
}

#[test]
fn fix1_tables() {
    let inst = fix1();
    let t1 = build_table(&inst, 0).unwrap();
    assert_eq!(t1.values, vec![1.0, 2.0, 2.0]);
    let t2 = build_table(&inst, 1).unwrap();
    assert_eq!(t2.values, vec![0.0, 1.0, 3.0]);
}

#[test]
fn single_point_domain() {
    let mut f = fix1().to_file();
    f.bounds = vec![[1.0, 1.0]];
    let inst = f.into_instance().unwrap();
    let t = build_table(&inst, 0).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t.values, vec![2.0]);
}

#[test]
fn mixed_instance_unsupported() {
    assert!(matches!(build_table(&fixmi(), 0), Err(Error::UnsupportedByOracle(_))));
    let g = build_grid_table(&fixmi(), 0, 0.5).unwrap();
    assert_eq!(g.len(), 15);
    // ⌈x₁ + x₂⌉
    assert_eq!(g.value_at(&[1.0, 0.5]), Some(2.0));
}

#[test]
fn first_stage_rows_filter_points() {
    let mut f = fix6().to_file();
    f.a = SparseMatrix::from_dense(&[vec![1.0, 1.0]], 2);
    f.b = vec![1.0];
    let t = build_table(&f.into_instance().unwrap(), 0).unwrap();
    assert_eq!(t.len(), 3);
    assert!(t.value_at(&[0.0, 0.0]).is_none());
}

#[test]
fn envelopes() {
    let inst = fix1();
    let t1 = build_table(&inst, 0).unwrap();
    let t2 = build_table(&inst, 1).unwrap();
    assert!((convex_envelope_at(&t1, &[1.0]).unwrap() - 1.5).abs() < 1e-9);
    assert!((convex_envelope_at(&t2, &[1.0]).unwrap() - 1.0).abs() < 1e-9);
    let e = expected_table(&[t1, t2], &[0.5, 0.5]);
    assert!((convex_envelope_at(&e, &[1.0]).unwrap() - 1.5).abs() < 1e-9);
    // hull vertex
    assert!((convex_envelope_at(&fix3(), &[1.0, 2.0]).unwrap() - 10.0).abs() > 1.0);
    assert!((convex_envelope_at(&fix3(), &[1.0, 4.0]).unwrap() - 1.0).abs() < 1e-9);
    assert!(matches!(convex_envelope_at(&fix3(), &[3.0, 3.0]), Err(Error::OutsideHull)));
}

#[test]
fn fix2_query_point_is_outside_hull() {
    // the lower hull edge (0,0)–(2,1) forces x₂ ≥ 0.75 at x₁ = 1.5
    let (p, v) = fix2_points();
    let t = RecourseTable::from_points(p, v);
    assert!(matches!(convex_envelope_at(&t, &[1.5, 0.5]), Err(Error::OutsideHull)));
    assert!(convex_envelope_at(&t, &[1.5, 0.75]).is_ok());
}

#[test]
fn validity_checks() {
    let t = fix3();
    let c = fix3_cut();
    let chk = is_cut_valid(&c, &t);
    assert!(chk.valid);
    assert!(chk.max_violation.abs() < 1e-12);
    let mut raised = c.clone();
    raised.intercept += 1.0;
    let chk = is_cut_valid(&raised, &t);
    assert!(!chk.valid);
    assert!((chk.max_violation - 1.0).abs() < 1e-12);
    let flat = relu(&[1.0, 2.0], t.min(), &[0.0; 2], &[0.0; 2]);
    assert!(is_cut_valid(&flat, &t).valid);
}

#[test]
fn dual_optimality() {
    let t = fix3();
    let c = fix3_cut();
    assert!(is_relu_dual_optimal(&c.pi_plus, &c.pi_minus, &c.anchor, &t));
    // (1,2) is not the minimizer: π = 0 fails
    assert!(!is_relu_dual_optimal(&[0.0; 2], &[0.0; 2], &[1.0, 2.0], &t));
    assert!(!is_relu_dual_optimal(&[0.0; 2], &[0.0; 2], &[9.0, 9.0], &t));
}

#[test]
fn tight_counts() {
    let t = fix3();
    assert_eq!(count_tight_affinely_independent(&fix3_cut(), &t), 5);
    assert_eq!(lifted_epigraph_dimension(&fix3_cut(), &t), 5);
    assert!(is_facet_defining(&fix3_cut(), &t));
    let a = augmented(&[1.0, 2.0], 10.0, &[1.0, 2.5], 7.0);
    let b = augmented(&[1.0, 2.0], 10.0, &[1.0, -4.5], 7.0);
    assert!(is_cut_valid(&a, &t).valid && is_cut_valid(&b, &t).valid);
    assert_eq!(count_tight_affinely_independent(&a, &t), 4);
    assert_eq!(count_tight_affinely_independent(&b, &t), 4);
    // unique minimizer (1,4) for the constant cut at the minimum
    let flat = relu(&[1.0, 2.0], 1.0, &[0.0; 2], &[0.0; 2]);
    let uniq = RecourseTable::from_points(vec![vec![0.0], vec![1.0], vec![2.0]], vec![3.0, 1.0, 2.0]);
    let flat1 = relu(&[1.0], 1.0, &[0.0], &[0.0]);
    assert_eq!(count_tight_affinely_independent(&flat1, &uniq), 1);
    // fix3 has three points at value 1, so not unique there
    assert!(count_tight_affinely_independent(&flat, &t) > 1);
}

#[test]
fn lagrangian_values() {
    let t2 = build_table(&fix1(), 1).unwrap();
    assert!((lagrangian_dual_value(&t2, &[1.0], &[2.0]) - 1.0).abs() < 1e-12);
    assert_eq!(lagrangian_dual_value(&t2, &[1.0], &[0.0]), 0.0);
    let t6 = build_table(&fix6(), 0).unwrap();
    // slope of θ ≥ 4 + 4(x₁−1) − 4x₂
    assert_eq!(lagrangian_dual_value(&t6, &[1.0, 0.0], &[4.0, -4.0]), 4.0);
    assert_eq!(lagrangian_dual_value(&t6, &[1.0, 0.0], &[-4.0, 4.0]), -4.0);
}

#[test]
fn hull_equality_cases() {
    use VarKind::*;
    // Λ-shaped cut θ ≥ 1 − |x − 1| on {0,1,2}
    let lam = relu(&[1.0], 1.0, &[-1.0], &[-1.0]);
    assert!(verify_hull_equality(&lam, &[2.0], &[Integer]).unwrap());
    // interval case
    let bin = relu(&[1.0], 3.0, &[0.0], &[5.0]);
    assert!(verify_hull_equality(&bin, &[1.0], &[Integer]).unwrap());
    assert!(verify_hull_equality(&fix3_cut(), &[2.0, 4.0], &[Integer, Integer]).unwrap());
    // mixed coordinate
    let mi = relu(&[1.0, 1.0], 2.0, &[1.0, 1.0], &[-1.0, -1.0]);
    assert!(verify_hull_equality(&mi, &[2.0, 2.0], &[Integer, Continuous]).unwrap());
    let big = relu(&[0.0; 4], 0.0, &[0.0; 4], &[0.0; 4]);
    assert!(verify_hull_equality(&big, &[1.0; 4], &[Integer; 4]).is_err());
}

#[test]
fn block_vertex_enumeration() {
    // u = 1, d = 1: (0,0,0), (0,1,0), (0,0,1), (1,0,1)
    let v = block_vertices(1.0, 1.0);
    assert_eq!(v.len(), 4);
    // anchor at a bound: d = 0 collapses ω⁻
    assert!(block_vertices(2.0, 0.0).iter().all(|w| w[1] == 0.0));
}

#[test]
fn fix3_dual_region_is_a_box() {
    let b = dual_region(&fix3(), &[1.0, 2.0]).unwrap();
    assert_eq!(b.upper_plus, vec![-6.0, -4.5]);
    assert_eq!(b.upper_minus, vec![-8.0, -2.5]);
    assert!(b.is_box());
    let c = fix3_cut();
    assert!(b.contains(&c.pi_plus, &c.pi_minus));
}

#[test]
fn closed_form_slope_is_dual_optimal_everywhere() {
    let inst1 = fix1();
    let mut tables = vec![build_table(&inst1, 0).unwrap(), build_table(&inst1, 1).unwrap()];
    tables.push(fix3());
    tables.push(build_table(&fix6(), 0).unwrap());
    let (p2, v2) = fix2_points();
    tables.push(RecourseTable::from_points(p2, v2));
    for t in &tables {
        for a in &t.points {
            let rho = closed_form_slope(t, a).unwrap();
            let n = a.len();
            assert!(is_relu_dual_optimal(&vec![-rho; n], &vec![-rho; n], a, t), "anchor {a:?}");
        }
    }
}

/// For each sample x, the envelope LP's dual gives a slope that is a
/// Lagrangian dual optimum at some hull-vertex anchor; the pointwise max of
/// those anchored cuts reproduces the envelope.
#[test]
fn pointwise_max_of_lagrangian_cuts_is_envelope() {
    for t in [fix3(), build_table(&fix6(), 0).unwrap(), build_table(&fix1(), 0).unwrap()] {
        let n = t.upper.len();
        let mut samples = Vec::new();
        for k in 0..t.len() {
            for j in 0..t.len() {
                samples.push((0..n).map(|i| 0.3 * t.points[k][i] + 0.7 * t.points[j][i]).collect::<Vec<f64>>());
            }
        }
        let mut cuts: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
        for x in &samples {
            let (co, g) = envelope_with_subgradient(&t, x);
            let (a, q) = t
                .points
                .iter()
                .zip(&t.values)
                .find(|(a, q)| {
                    let lin = co + g.iter().zip(a.iter()).zip(x).map(|((g, a), x)| g * (a - x)).sum::<f64>();
                    (lin - **q).abs() < 1e-7
                })
                .expect("envelope face touches a table point");
            assert!(lagrangian_dual_value(&t, a, &g) >= q - 1e-7);
            cuts.push((*q, g, a.clone()));
        }
        for x in &samples {
            let co = convex_envelope_at(&t, x).unwrap();
            let best = cuts
                .iter()
                .map(|(v, g, a)| v + g.iter().zip(x).zip(a).map(|((g, x), a)| g * (x - a)).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((best - co).abs() < 1e-7, "x={x:?}: {best} vs {co}");
        }
    }
}

fn envelope_with_subgradient(t: &RecourseTable, x: &[f64]) -> (f64, Vec<f64>) {
    let mut m = LpModel::new(Sense::Minimize);
    for &q in &t.values {
        m.add_var(q, 0.0, f64::INFINITY, false);
    }
    m.add_row((0..t.len()).map(|j| (j, 1.0)).collect(), RowSense::Eq, 1.0);
    for (i, xi) in x.iter().enumerate() {
        m.add_row((0..t.len()).map(|j| (j, t.points[j][i])).collect(), RowSense::Eq, *xi);
    }
    let s = milp::solve_lp(&m);
    (s.objective, s.duals[1..].to_vec())
}

proptest! {
    #[test]
    fn lagrangian_optimality_matches_cut_validity(
        anchor_idx in 0usize..11,
        pi in prop::collection::vec(-12.0f64..12.0, 2),
    ) {
        let t = fix3();
        let a = t.points[anchor_idx].clone();
        let co = convex_envelope_at(&t, &a).unwrap();
        let dual_ok = lagrangian_dual_value(&t, &a, &pi) >= co - 1e-9;
        let linear_valid = t.points.iter().zip(&t.values).all(|(x, q)| {
            co + pi[0] * (x[0] - a[0]) + pi[1] * (x[1] - a[1]) <= q + 1e-9
        });
        prop_assert_eq!(dual_ok, linear_valid);
    }

    #[test]
    fn dual_box_membership_matches_optimality(
        pp in prop::collection::vec(-12.0f64..0.0, 2),
        pm in prop::collection::vec(-12.0f64..0.0, 2),
    ) {
        let t = fix3();
        let b = dual_region(&t, &[1.0, 2.0]).unwrap();
        prop_assert_eq!(b.contains(&pp, &pm), is_relu_dual_optimal(&pp, &pm, &[1.0, 2.0], &t));
    }

    #[test]
    fn random_tables_hull_vertices_keep_values(
        vals in prop::collection::vec(-5i32..5, 9),
    ) {
        let pts: Vec<Vec<f64>> = (0..9).map(|k| vec![(k % 3) as f64, (k / 3) as f64]).collect();
        let t = RecourseTable::from_points(pts, vals.iter().map(|v| *v as f64).collect());
        for (p, q) in t.points.iter().zip(&t.values) {
            let co = convex_envelope_at(&t, p).unwrap();
            prop_assert!(co <= q + 1e-9);
        }
        // corners of the box are always hull vertices
        for c in [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]] {
            let co = convex_envelope_at(&t, &c).unwrap();
            prop_assert!((co - t.value_at(&c).unwrap()).abs() < 1e-9);
        }
    }
}
