use super::*;
use crate::driver::{solve_general, CutFamily, DriverConfig};
use crate::model::SolveStatus;

#[test]
fn sslp_shape_and_assumptions() {
    let inst = gen_sslp(&GeneratorSpec::sslp(5, 5, 2, 1)).unwrap();
    assert_eq!(inst.n(), 5);
    assert!(inst.all_binary());
    assert_eq!(inst.scenarios[0].num_y(), 30);
    assert_eq!(inst.probabilities(), vec![0.5, 0.5]);
    // Σx ≤ ⌈5/3⌉ = 2
    assert_eq!(inst.b, vec![-2.0]);
    assert!(inst.c.iter().all(|&c| (40.0..=80.0).contains(&c) && c.fract() == 0.0));
    check_assumptions(&inst).unwrap();
}

#[test]
fn sslp_without_clients_costs_only_first_stage() {
    let mut inst = gen_sslp(&GeneratorSpec::sslp(4, 3, 1, 9)).unwrap();
    // availability rows follow the 4 capacity rows in ± pairs
    for h in inst.scenarios[0].h.iter_mut().skip(4) {
        *h = 0.0;
    }
    let rec = ScenarioRecourse::new(&inst, 0);
    for x in [[0.0; 4], [1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]] {
        assert_eq!(rec.value(&x).unwrap(), 0.0);
    }
    let r = solve_general(&inst, &DriverConfig::with_cuts(CutFamily::R)).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_eq!(r.upper_bound, 0.0);
    assert_eq!(r.incumbent, vec![0.0; 4]);
}

#[test]
fn generators_are_deterministic() {
    let specs = [
        GeneratorSpec::sslp(5, 5, 3, 42),
        GeneratorSpec::smrcsp(2, 2, 4, 2, 42),
        GeneratorSpec::dcap(2, 2, 3, 2, 42),
    ];
    for spec in &specs {
        let a = generate(spec).unwrap().to_json_string().unwrap();
        let b = generate(spec).unwrap().to_json_string().unwrap();
        assert_eq!(a, b);
        let other = GeneratorSpec { seed: 43, ..spec.clone() };
        assert_ne!(a, generate(&other).unwrap().to_json_string().unwrap());
    }
}

/// Periods in which a job started at τ ∈ [first, last] with duration p is running.
fn brute_window(t: usize, p: usize, first: usize, last: usize) -> Vec<usize> {
    (first..=last).filter(|&tau| tau <= t && t < tau + p).collect()
}

#[test]
fn smrcsp_windows() {
    let spec = GeneratorSpec::smrcsp(5, 5, 10, 2, 7);
    let inst = gen_smrcsp(&spec).unwrap();
    let tt = 10;
    for p in 1..=tt {
        for t in 1..=tt {
            let w: Vec<usize> = window(t, p, 1, tt - p + 1).collect();
            assert!(!w.is_empty(), "p={p} t={t}");
            assert_eq!(w, brute_window(t, p, 1, tt - p + 1));
        }
        for t in 4..=tt + 3 {
            let w: Vec<usize> = window(t, p, 4, tt + 3 - p + 1).collect();
            assert_eq!(w, brute_window(t, p, 4, tt + 3 - p + 1));
        }
    }
    // T₀ = ⌈10/4⌉ = 3 periods × 2 resources of expansion binaries
    assert!(inst.all_binary());
    let starts = inst.n() - 3 * 2;
    assert!((5..=50).contains(&starts));
    // one assignment equality (two rows) per known job, then T₀·K capacity rows
    assert_eq!(inst.a.rows, 2 * 5 + 3 * 2);
    // second stage: 5 bid assignments + T·K capacity rows
    assert_eq!(inst.scenarios[0].h.len(), 2 * 5 + 10 * 2);
}

#[test]
fn smrcsp_single_period() {
    let inst = gen_smrcsp(&GeneratorSpec::smrcsp(2, 3, 1, 1, 5)).unwrap();
    // T = 1 ⇒ p = 1 ⇒ one start slot per job; T₀ = 1 with K = 2 expansions
    assert_eq!(inst.n(), 2 + 2);
    assert_eq!(inst.scenarios[0].num_y(), 3 + 2);
    check_assumptions(&inst).unwrap();
}

#[test]
fn dcap_shape() {
    let inst = gen_dcap(&GeneratorSpec::dcap(2, 2, 4, 2, 3)).unwrap();
    let cont = inst.var_kinds.iter().filter(|k| **k == VarKind::Continuous).count();
    assert_eq!((cont, inst.n() - cont), (8, 8));
    assert!(inst.upper[..8].iter().all(|&b| b == 50.0));
    assert!(inst.upper[8..].iter().all(|&b| b == 1.0));
    check_assumptions(&inst).unwrap();
}

#[test]
fn dcap_zero_demand_scenario() {
    let mut inst = gen_dcap(&GeneratorSpec::dcap(2, 2, 2, 1, 11)).unwrap();
    // drop the processing requirements (the −d entries of the 4 capacity rows)
    inst.scenarios[0].w.triplets.retain(|t| t.0 >= 4 || t.2 >= 0.0);
    let rec = ScenarioRecourse::new(&inst, 0);
    let q0 = rec.value(&[0.0; 8]).unwrap();
    let mut x = vec![0.0; 8];
    x[..4].copy_from_slice(&[50.0, 10.0, 0.0, 25.0]);
    x[4..].copy_from_slice(&[1.0; 4]);
    assert_eq!(rec.value(&x).unwrap(), q0);
    assert!(q0 > 0.0);
}

#[test]
fn spec_validation() {
    let mut s = GeneratorSpec::sslp(5, 5, 2, 1);
    s.sizes = vec![5];
    assert!(generate(&s).is_err());
    assert!(generate(&GeneratorSpec::sslp(0, 5, 2, 1)).is_err());
    assert!(generate(&GeneratorSpec::sslp(5, 5, 0, 1)).is_err());
    assert!(serde_json::from_str::<GeneratorSpec>(r#"{"family":"sslp","sizes":[2,2],"scenarios":1,"seed":1,"x":0}"#).is_err());
    let parsed: GeneratorSpec = serde_json::from_str(r#"{"family":"dcap","sizes":[1,1,1],"scenarios":1,"seed":1}"#).unwrap();
    assert_eq!(parsed.label(), "dcap(1,1,1)-N1-s1");
}
