use super::*;
use crate::model::fixtures::{fix6, random_small};

fn verdicts(name: &str) -> Vec<(String, bool)> {
    fixture_suite(name).unwrap().into_iter().map(|v| (v.check, v.passed)).collect()
}

#[test]
fn passing_suites() {
    for name in ["fix1", "fix3", "fix4", "fix6", "fixmi"] {
        for (check, passed) in verdicts(name) {
            assert!(passed, "{name}: {check}");
        }
    }
}

#[test]
fn fix2_suite_reports_its_inconsistencies() {
    let v = verdicts("fix2");
    let get = |k: &str| v.iter().find(|(c, _)| c == k).unwrap().1;
    assert!(!get("reverse_norm_cuts_valid"));
    assert!(get("lambda_cuts_valid"));
    assert!(!get("point_survives_cuts"));
    assert!(!get("envelope_separates_point"));
}

#[test]
fn unknown_fixture() {
    assert!(matches!(fixture_suite("fix9"), Err(Error::InvalidConfig(_))));
}

#[test]
fn suite_report_aggregates() {
    let r = SuiteReport::new("x", vec![Verdict::new("a", true, ""), Verdict::new("b", false, "")]);
    assert!(!r.passed);
    assert!(SuiteReport::new("x", vec![]).passed);
}

#[test]
fn instance_suite_on_small_instances() {
    for inst in [fix6(), random_small(3, 2, 2, 2), random_small(4, 3, 1, 2)] {
        for v in instance_suite(&inst).unwrap() {
            assert!(v.passed, "{v:?}");
        }
    }
    let v = instance_suite(&crate::model::fixtures::fixmi()).unwrap();
    assert_eq!(v.len(), 2);
}
