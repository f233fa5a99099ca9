//! Oracle-backed verification suites behind `smipcut verify`.
//!
//! Each check is a named verdict with a short human-readable detail. The
//! fixture suites replay the hand-checked fixture claims; [`instance_suite`] runs the
//! generic cut checks on any instance the oracle can enumerate.

use serde::Serialize;

use crate::cuts::{self, CutRequest};
use crate::driver::{self, CutFamily, DriverConfig};
use crate::model::fixtures::{fix1, fix2_points, fix3_cut, fix3_points, fix4, fix4_tables, fix6, fixmi};
use crate::model::{ReluCut, ScenarioTag, SmipInstance, SolveStatus};
use crate::oracle::{self, RecourseTable};
use crate::relu::{self, RhoSource};
use crate::strengthen::{self, BinaryOptions, ExactConstraints, MixedOptions, StrengthenStatus, Strategy};
use crate::{instances, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(check: &str, passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            check: check.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Suite result as written by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub target: String,
    pub passed: bool,
    pub checks: Vec<Verdict>,
}

impl SuiteReport {
    pub fn new(target: &str, checks: Vec<Verdict>) -> Self {
        SuiteReport {
            target: target.to_string(),
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

/// Fixture names accepted by [`fixture_suite`].
pub const SUITES: [&str; 6] = ["fix1", "fix2", "fix3", "fix4", "fix6", "fixmi"];

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6
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

fn table_of(points: (Vec<Vec<f64>>, Vec<f64>)) -> RecourseTable {
    RecourseTable::from_points(points.0, points.1)
}

fn envelope_detail(v: Result<f64>) -> String {
    match v {
        Ok(v) => format!("{v}"),
        Err(e) => e.to_string(),
    }
}

pub fn fixture_suite(name: &str) -> Result<Vec<Verdict>> {
    match name {
        "fix1" => fix1_suite(),
        "fix2" => fix2_suite(),
        "fix3" => fix3_suite(),
        "fix4" => fix4_suite(),
        "fix6" => fix6_suite(),
        "fixmi" => fixmi_suite(),
        _ => Err(Error::InvalidConfig(format!("unknown fixture '{name}' (expected one of {})", SUITES.join(", ")))),
    }
}

fn fix1_suite() -> Result<Vec<Verdict>> {
    let inst = fix1();
    let t1 = oracle::build_table(&inst, 0)?;
    let t2 = oracle::build_table(&inst, 1)?;
    let e = oracle::expected_table(&[t1.clone(), t2.clone()], &inst.probabilities());
    let c1 = oracle::convex_envelope_at(&t1, &[1.0])?;
    let c2 = oracle::convex_envelope_at(&t2, &[1.0])?;
    let ce = oracle::convex_envelope_at(&e, &[1.0])?;
    let weighted = 0.5 * (c1 + c2);
    let mut out = vec![
        Verdict::new("envelope_scenario1_at_1", close(c1, 1.5), format!("{c1}")),
        Verdict::new("envelope_scenario2_at_1", close(c2, 1.0), format!("{c2}")),
        Verdict::new(
            "weighted_envelopes_below_expected_envelope",
            close(weighted, 1.25) && close(ce, 1.5),
            format!("weighted {weighted}, expected {ce}"),
        ),
    ];
    let r = driver::solve_general(&inst, &DriverConfig::with_cuts(CutFamily::R))?;
    out.push(Verdict::new(
        "relu_pipeline_optimum",
        r.status == SolveStatus::Optimal && close(r.upper_bound, 0.5),
        format!("{:?} ub {}", r.status, r.upper_bound),
    ));
    let lag = driver::solve_general(&inst, &DriverConfig::with_cuts(CutFamily::Lag))?;
    out.push(Verdict::new(
        "lagrangian_only_bound",
        close(lag.lower_bound, 0.25),
        format!("{:?} lb {}", lag.status, lag.lower_bound),
    ));
    Ok(out)
}

fn fix2_suite() -> Result<Vec<Verdict>> {
    let t = table_of(fix2_points());
    let lower = -10.0;
    let point = [1.5, 0.5];
    let mut norm = Vec::new();
    let mut lambda = Vec::new();
    for (a, &q) in t.points.iter().zip(&t.values) {
        let mut req = CutRequest::new(0, a, q, lower);
        req.lipschitz = Some(0.3);
        norm.push(cuts::reverse_norm_cut(&req)?);
        lambda.push(cuts::lambda_shaped_cut(&req, &[crate::model::VarKind::Integer; 2])?);
    }
    let invalid_norm = norm.iter().filter(|c| !oracle::is_cut_valid(c, &t).valid).count();
    let invalid_lambda = lambda.iter().filter(|c| !oracle::is_cut_valid(c, &t).valid).count();
    let best = norm.iter().chain(&lambda).map(|c| c.eval(&point)).fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        Verdict::new("reverse_norm_cuts_valid", invalid_norm == 0, format!("{invalid_norm} of {} invalid", norm.len())),
        Verdict::new("lambda_cuts_valid", invalid_lambda == 0, format!("{invalid_lambda} of {} invalid", lambda.len())),
        Verdict::new("point_survives_cuts", best <= 1e-9, format!("strongest cut at (1.5,0.5) gives {best}")),
        Verdict::new(
            "envelope_separates_point",
            oracle::convex_envelope_at(&t, &point).is_ok_and(|v| close(v, 0.5)),
            envelope_detail(oracle::convex_envelope_at(&t, &point)),
        ),
    ])
}

/// `θ ≥ q + πᵀ(x−x̂) − ρ‖x−x̂‖₁`.
fn augmented(anchor: &[f64], q: f64, pi: &[f64], rho: f64) -> ReluCut {
    let pp: Vec<f64> = pi.iter().map(|p| p - rho).collect();
    let pm: Vec<f64> = pi.iter().map(|p| -p - rho).collect();
    relu(anchor, q, &pp, &pm)
}

fn tight_points(cut: &ReluCut, t: &RecourseTable) -> Vec<Vec<f64>> {
    t.points
        .iter()
        .zip(&t.values)
        .filter(|(p, &q)| (cut.eval(p) - q).abs() <= 1e-9 * (1.0 + q.abs()))
        .map(|(p, _)| p.clone())
        .collect()
}

fn fix3_suite() -> Result<Vec<Verdict>> {
    let t = table_of(fix3_points());
    let cut = fix3_cut();
    let listed: [[f64; 2]; 7] = [[0.0, 2.0], [1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0], [1.0, 4.0], [2.0, 2.0]];
    let tight = tight_points(&cut, &t);
    let all_listed = listed.iter().all(|p| tight.iter().any(|q| q[..] == p[..]));
    let mut out = vec![
        Verdict::new("cut_valid", oracle::is_cut_valid(&cut, &t).valid, ""),
        Verdict::new("cut_tight_at_listed_points", all_listed, format!("tight at {} table points", tight.len())),
    ];
    let k = oracle::count_tight_affinely_independent(&cut, &t);
    out.push(Verdict::new("facet_count", k == 5, format!("{k} affinely independent lifted tight points")));

    // each box bound is attained: loosening by 1e-3 breaks optimality, tightening keeps it
    let bounds = [cut.pi_plus[0], cut.pi_plus[1], cut.pi_minus[0], cut.pi_minus[1]];
    let mut box_ok = true;
    for k in 0..4 {
        for (delta, want) in [(1e-3, false), (-1e-3, true)] {
            let mut b = bounds;
            b[k] += delta;
            box_ok &= oracle::is_relu_dual_optimal(&b[..2], &b[2..], &cut.anchor, &t) == want;
        }
    }
    out.push(Verdict::new("dual_box_bounds", box_ok, format!("{bounds:?}")));

    for (name, pi) in [("augmented_cut_a", [1.0, 2.5]), ("augmented_cut_b", [1.0, -4.5])] {
        let c = augmented(&[1.0, 2.0], 10.0, &pi, 7.0);
        let n = oracle::count_tight_affinely_independent(&c, &t);
        out.push(Verdict::new(name, oracle::is_cut_valid(&c, &t).valid && n == 4, format!("{n} affinely independent lifted tight points")));
    }
    Ok(out)
}

/// ReLU cuts per scenario at anchors 0..3, as tabulated for fix4.
pub fn fix4_scenario_cuts() -> [Vec<ReluCut>; 2] {
    let c = |a: f64, q: f64, pp: f64, pm: f64| relu(&[a], q, &[pp], &[pm]);
    [
        vec![c(0.0, 0.0, 0.0, 0.0), c(1.0, 1.0, -0.5, -1.0), c(2.0, 1.0, -1.0, -0.5), c(3.0, 0.0, 0.0, 0.0)],
        vec![c(0.0, 4.0, -3.0, 0.0), c(1.0, 1.0, 0.0, 3.0), c(2.0, 1.0, 3.0, 0.0), c(3.0, 4.0, 0.0, -3.0)],
    ]
}

fn fix4_suite() -> Result<Vec<Verdict>> {
    let inst = fix4();
    let tables: Vec<RecourseTable> = (0..2).map(|s| oracle::build_table(&inst, s)).collect::<Result<_>>()?;
    let probs = inst.probabilities();
    let per = fix4_scenario_cuts();
    let mut ok = true;
    for (s, cuts) in per.iter().enumerate() {
        for c in cuts {
            ok &= oracle::is_cut_valid(c, &tables[s]).valid && oracle::is_tight_at_anchor(c, &tables[s]);
        }
    }
    let point = (1.5, 0.875);
    let outer = (0..4)
        .map(|k| probs[0] * per[0][k].eval(&[point.0]) + probs[1] * per[1][k].eval(&[point.0]))
        .fold(f64::NEG_INFINITY, f64::max);
    let e = oracle::expected_table(&tables, &probs);
    let env = oracle::convex_envelope_at(&e, &[point.0])?;
    let vals = fix4_tables();
    Ok(vec![
        Verdict::new("tables", tables[0].values == vals[0] && tables[1].values == vals[1], ""),
        Verdict::new("scenario_cuts_valid_and_tight", ok, ""),
        Verdict::new("point_survives_outer_approximation", outer <= point.1 + 1e-9, format!("outer approximation at 1.5 is {outer}")),
        Verdict::new("hull_rejects_point", env > point.1 + 1e-9 && close(env, 1.0), format!("envelope at 1.5 is {env}")),
    ])
}

fn fix6_suite() -> Result<Vec<Verdict>> {
    let inst = fix6();
    let t = oracle::build_table(&inst, 0)?;
    let mut out = Vec::new();

    let anchor = [1.0, 0.0];
    let seed = [4.0, -4.0];
    let ex = strengthen::strengthen_exact(&t, &anchor, 4.0, &seed, &[1.0, -1.0], &ExactConstraints::default())?;
    let obj = ex.objective.unwrap_or(f64::NAN);
    let s = &ex.cut.pi_plus;
    let on_face = close(s[0], s[1]) && s[0] >= -4.0 - 1e-9 && s[0] <= -2.0 + 1e-9;
    out.push(Verdict::new(
        "strategy2_objective",
        ex.status == StrengthenStatus::Improved && close(obj, -8.0),
        format!("{obj}"),
    ));
    out.push(Verdict::new(
        "strategy2_cut_on_optimal_face",
        on_face && oracle::is_cut_valid(&ex.cut, &t).valid && oracle::is_tight_at_anchor(&ex.cut, &t),
        format!("slopes {s:?}"),
    ));
    let seed2 = [2.0, -2.0];
    let plain = strengthen::eta_feasible_on_table(&[-6.0, -2.0], &t, &anchor, 4.0, &seed2, false);
    let cone = strengthen::eta_feasible_on_table(&[-6.0, -2.0], &t, &anchor, 4.0, &seed2, true);
    out.push(Verdict::new("reverse_cone_excludes_extreme_point", plain && !cone, format!("without cone {plain}, with cone {cone}")));

    let anchor = [1.0, 1.0];
    let seed = [2.0, 2.0];
    let mut opts = BinaryOptions::new(Strategy::ObjectiveOnly, 0.0);
    opts.no_good = false;
    let bare = strengthen::strengthen_binary_cut(&inst, 0, &anchor, 2.0, &seed, &opts)?;
    out.push(Verdict::new("infeasible_without_no_good", bare.status == StrengthenStatus::Infeasible, format!("{:?}", bare.status)));
    let ng = strengthen::strengthen_binary_cut(&inst, 0, &anchor, 2.0, &seed, &BinaryOptions::new(Strategy::Auto, 0.0))?;
    let obj = ng.objective.unwrap_or(f64::NAN);
    out.push(Verdict::new(
        "no_good_objective",
        ng.status == StrengthenStatus::Improved && close(obj, -6.6),
        format!("{obj}"),
    ));
    out.push(Verdict::new(
        "no_good_cut_valid_and_tight",
        oracle::is_cut_valid(&ng.cut, &t).valid && oracle::is_tight_at_anchor(&ng.cut, &t),
        "",
    ));
    Ok(out)
}

fn fixmi_suite() -> Result<Vec<Verdict>> {
    let inst = fixmi();
    let grid = oracle::build_grid_table(&inst, 0, 0.5)?;
    let anchor = [1.0, 1.0];
    let corners = relu::ball_corners(&anchor, 2.0);
    let cf = relu::closed_form_rho(RhoSource::Candidates(&corners), &anchor, 2.0, 0.0);
    let mut out = vec![Verdict::new("closed_form_distance", cf.d == Some(2.0), format!("d = {:?}", cf.d))];
    let rho = 2.0;
    out.push(Verdict::new(
        "initial_cut_dual_optimal",
        oracle::is_relu_dual_optimal(&[-rho; 2], &[-rho; 2], &anchor, &grid),
        "rho = 2",
    ));
    let st = strengthen::strengthen_mixed_cut(&inst, 0, &anchor, 2.0, rho, &MixedOptions::default())?;
    let obj = st.objective.unwrap_or(f64::NAN);
    out.push(Verdict::new(
        "strengthening_objective",
        st.status == StrengthenStatus::Improved && close(obj, 8.0),
        format!("eta+ {:?}, eta- {:?}, objective {obj}", st.eta, st.eta_minus.clone().unwrap_or_default()),
    ));
    let want = relu(&anchor, 2.0, &[1.0, 1.0], &[-1.0, -1.0]);
    let same = st.cut.pi_plus.iter().zip(&want.pi_plus).chain(st.cut.pi_minus.iter().zip(&want.pi_minus)).all(|(a, b)| close(*a, *b));
    out.push(Verdict::new(
        "final_cut_facet_defining",
        same && oracle::is_cut_valid(&st.cut, &grid).valid && oracle::is_facet_defining(&st.cut, &grid),
        format!("pi+ {:?}, pi- {:?}", st.cut.pi_plus, st.cut.pi_minus),
    ));
    Ok(out)
}

/// Most anchors checked per scenario by [`instance_suite`].
pub const MAX_ANCHORS: usize = 256;

/// Generic checks: modelling assumptions, then for every scenario the oracle
/// can enumerate, cut validity and anchor tightness of the ReLU family.
pub fn instance_suite(inst: &SmipInstance) -> Result<Vec<Verdict>> {
    let mut out = vec![match instances::check_assumptions(inst) {
        Ok(()) => Verdict::new("assumptions", true, ""),
        Err(e) => Verdict::new("assumptions", false, e.to_string()),
    }];
    if !inst.all_integer() {
        out.push(Verdict::new("cut_checks", true, "skipped: continuous first-stage variables"));
        return Ok(out);
    }
    let lowers = driver::scenario_lower_bounds(inst)?;
    let cfg = DriverConfig::default();
    let set = CutFamily::R.cuts(false);
    let kinds = &inst.var_kinds;
    for s in 0..inst.num_scenarios() {
        let t = match oracle::build_table(inst, s) {
            Ok(t) => t,
            Err(e) => {
                out.push(Verdict::new(&format!("scenario{s}_cuts"), true, format!("skipped: {e}")));
                continue;
            }
        };
        let mut bad = 0;
        let mut checked = 0;
        for (a, &q) in t.points.iter().zip(&t.values).take(MAX_ANCHORS) {
            let mut cuts = Vec::new();
            if inst.all_binary() {
                cuts.extend(driver::scenario_cuts(inst, s, a, q, lowers[s], &set, &cfg)?.relu);
            } else {
                cuts.push(cuts::lambda_shaped_cut(&CutRequest::new(s, a, q, lowers[s]), kinds)?);
                let r = relu::closed_form_rho(RhoSource::Table(&t), a, q, t.min());
                cuts.push(ReluCut::norm_cut(a, q, r.rho, ScenarioTag::Scenario(s)));
            }
            for c in &cuts {
                checked += 1;
                if !(oracle::is_cut_valid(c, &t).valid && oracle::is_tight_at_anchor(c, &t)) {
                    bad += 1;
                }
            }
        }
        out.push(Verdict::new(
            &format!("scenario{s}_cuts"),
            bad == 0,
            format!("{bad} of {checked} cuts invalid or not tight"),
        ));
    }
    Ok(out)
}


#[cfg(test)]
mod tests;
