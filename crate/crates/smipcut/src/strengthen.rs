//! LP-based strengthening of tight cuts.
//!
//! Every strengthening problem has the shape "choose η so that an inner
//! minimization stays ≥ Q(x̂)". The inner problem is an LP (integrality
//! relaxed), so [`add_dual_condition`] replaces it by its dual and the
//! whole thing becomes one LP over η and the dual multipliers.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::milp::{self, LpModel, LpStatus, RowSense, Sense};
use crate::model::{ReluCut, ScenarioTag, SmipInstance};
use crate::oracle::{self, RecourseTable};
use crate::recourse::joint_model;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StrengthenMode {
    BinaryNoGood,
    MixedLifted,
}

/// How unboundedness of the binary strengthening LP is prevented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Objective vector only (bounded when `−a` lies in the tangent cone).
    #[serde(rename = "obj")]
    ObjectiveOnly,
    /// Explicit bounds on η.
    #[serde(rename = "box")]
    BoxBounds,
    /// `(x̂ − x)ᵀη ≤ 0` over the relaxed no-good region.
    #[serde(rename = "cone")]
    ReverseNormalCone,
    /// `a = χ` with `χᵢηᵢ ≤ 0`, then the box `χᵢηᵢ ≥ −(Q − L)` if unbounded.
    Auto,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Strategy::Auto),
            "obj" => Ok(Strategy::ObjectiveOnly),
            "box" => Ok(Strategy::BoxBounds),
            "cone" => Ok(Strategy::ReverseNormalCone),
            _ => Err(Error::InvalidConfig(format!("unknown strategy '{s}' (auto, obj, box, cone)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StrengthenStatus {
    Improved,
    Unbounded,
    Infeasible,
    /// The LP failed under every fallback; the seed cut is returned.
    Degraded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthenOutcome {
    pub status: StrengthenStatus,
    /// η (binary mode) or η⁺ (mixed mode). Zero unless Improved.
    pub eta: Vec<f64>,
    /// η⁻ in mixed mode.
    pub eta_minus: Option<Vec<f64>>,
    /// Optimal `aᵀη` when Improved.
    pub objective: Option<f64>,
    pub cut: ReluCut,
}

/// An assembled strengthening LP together with the handles needed to read
/// η back.
#[derive(Debug, Clone)]
pub struct StrengthenProblem {
    pub mode: StrengthenMode,
    pub anchor: Vec<f64>,
    pub target: f64,
    pub lp: LpModel,
    pub eta: Vec<usize>,
    pub eta_minus: Vec<usize>,
}

impl StrengthenProblem {
    fn solve(&self) -> (LpStatus, Vec<f64>, Vec<f64>, f64) {
        let sol = milp::solve_lp(&self.lp);
        if sol.status != LpStatus::Optimal {
            return (sol.status, vec![], vec![], f64::NAN);
        }
        let get = |cols: &[usize]| cols.iter().map(|&j| clean(sol.x[j])).collect::<Vec<f64>>();
        (sol.status, get(&self.eta), get(&self.eta_minus), sol.objective)
    }
}

fn clean(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Appends to `outer` the dual certificate of
/// `min_z { c₀ᵀz + Σ C_jk η_k z_j + Σ d_k η_k : inner rows, inner bounds } ≥ rhs`.
///
/// `params` lists `(inner column j, η column k in outer, C_jk)`, `consts`
/// lists `(η column k, d_k)`. Integrality flags of `inner` are ignored.
pub fn add_dual_condition(outer: &mut LpModel, inner: &LpModel, params: &[(usize, usize, f64)], consts: &[(usize, f64)], rhs: f64) {
    assert_eq!(inner.sense, Sense::Minimize);
    let nv = inner.num_vars();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    let mut value: Vec<(usize, f64)> = consts.to_vec();
    for row in &inner.rows {
        let (lo, hi) = match row.sense {
            RowSense::Ge => (0.0, f64::INFINITY),
            RowSense::Le => (f64::NEG_INFINITY, 0.0),
            RowSense::Eq => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let lam = outer.add_var(0.0, lo, hi, false);
        for &(j, a) in &row.coeffs {
            cols[j].push((lam, a));
        }
        if row.rhs != 0.0 {
            value.push((lam, row.rhs));
        }
    }
    for j in 0..nv {
        if inner.lower[j].is_finite() {
            let mu = outer.add_var(0.0, 0.0, f64::INFINITY, false);
            cols[j].push((mu, 1.0));
            if inner.lower[j] != 0.0 {
                value.push((mu, inner.lower[j]));
            }
        }
        if inner.upper[j].is_finite() {
            let nu = outer.add_var(0.0, 0.0, f64::INFINITY, false);
            cols[j].push((nu, -1.0));
            if inner.upper[j] != 0.0 {
                value.push((nu, -inner.upper[j]));
            }
        }
    }
    for &(j, k, c) in params {
        cols[j].push((k, -c));
    }
    for (j, row) in cols.into_iter().enumerate() {
        outer.add_row(row, RowSense::Eq, inner.objective[j]);
    }
    outer.add_row(value, RowSense::Ge, rhs);
}

fn chi(anchor: &[f64]) -> Vec<f64> {
    anchor.iter().map(|v| 2.0 * v - 1.0).collect()
}

/// ReLU form of the linear cut `θ ≥ q + sᵀ(x − x̂)`.
fn linear_relu(anchor: &[f64], q: f64, slope: &[f64], tag: ScenarioTag) -> ReluCut {
    ReluCut {
        anchor: anchor.to_vec(),
        intercept: q,
        pi_plus: slope.to_vec(),
        pi_minus: slope.iter().map(|s| -s).collect(),
        scenario: tag,
    }
}

#[derive(Debug, Clone)]
pub struct BinaryOptions {
    pub strategy: Strategy,
    /// Objective `a`; defaults to χ.
    pub objective: Option<Vec<f64>>,
    pub no_good: bool,
    /// Scenario lower bound for the objective cut `qᵀy ≥ L_s`.
    pub objective_cut: Option<f64>,
    /// Lower bound L used by the Auto box.
    pub lower: f64,
    /// `(M̲, M̄)` for [`Strategy::BoxBounds`]; defaults to `±(Q − L)`.
    pub box_bounds: Option<(Vec<f64>, Vec<f64>)>,
}

impl BinaryOptions {
    pub fn new(strategy: Strategy, lower: f64) -> Self {
        BinaryOptions {
            strategy,
            objective: None,
            no_good: true,
            objective_cut: None,
            lower,
            box_bounds: None,
        }
    }
}

/// `(χ, η bounds)` for one attempt.
fn eta_bounds(opts: &BinaryOptions, chi: &[f64], gap: f64, with_box: bool) -> Vec<(f64, f64)> {
    let inf = f64::INFINITY;
    match opts.strategy {
        Strategy::ObjectiveOnly | Strategy::ReverseNormalCone => vec![(-inf, inf); chi.len()],
        Strategy::BoxBounds => match &opts.box_bounds {
            Some((lo, hi)) => lo.iter().zip(hi).map(|(&l, &h)| (l, h)).collect(),
            None => vec![(-gap, gap); chi.len()],
        },
        Strategy::Auto => chi
            .iter()
            .map(|&c| {
                let far = if with_box { gap } else { inf };
                if c > 0.0 {
                    (-far, 0.0)
                } else {
                    (0.0, far)
                }
            })
            .collect(),
    }
}

/// Builds the binary strengthening LP (integrality relaxed, no-good cut
/// optional) for the seed cut `θ ≥ Q + gᵀ(x − x̂)`.
pub fn binary_problem(
    inst: &SmipInstance,
    s: usize,
    anchor: &[f64],
    q_val: f64,
    seed: &[f64],
    opts: &BinaryOptions,
    with_box: bool,
) -> Result<StrengthenProblem> {
    let n = inst.n();
    check_dims(n, anchor, seed)?;
    if !inst.all_binary() {
        return Err(Error::InvalidInstance("binary strengthening needs a binary first stage".into()));
    }
    if anchor.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::NonBinaryAnchor);
    }
    let chi = chi(anchor);
    let a = opts.objective.clone().unwrap_or_else(|| chi.clone());
    if a.len() != n || a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("strengthening objective must be finite with length n".into()));
    }
    let gap = (q_val - opts.lower).max(0.0);
    let mut outer = LpModel::new(Sense::Minimize);
    let eta: Vec<usize> = eta_bounds(opts, &chi, gap, with_box)
        .into_iter()
        .zip(&a)
        .map(|((lo, hi), &ai)| outer.add_var(ai, lo, hi, false))
        .collect();

    // min qᵀy + (g+η)ᵀ(x̂ − x) over the relaxed joint region
    let (mut inner, cols) = joint_model(inst, s, false);
    let no_good = |m: &mut LpModel, xs: &[usize]| {
        let rhs = 1.0 - chi.iter().zip(anchor).map(|(c, a)| c * a).sum::<f64>();
        m.add_row(xs.iter().zip(&chi).map(|(&j, &c)| (j, -c)).collect(), RowSense::Ge, rhs);
    };
    if opts.no_good {
        no_good(&mut inner, &cols.x);
    }
    if let Some(ls) = opts.objective_cut {
        let q = &inst.scenarios[s].q;
        inner.add_row(cols.y.iter().zip(q).map(|(&j, &c)| (j, c)).collect(), RowSense::Ge, ls);
    }
    for (i, &j) in cols.x.iter().enumerate() {
        inner.objective[j] -= seed[i];
    }
    let params: Vec<_> = (0..n).map(|i| (cols.x[i], eta[i], -1.0)).collect();
    let consts: Vec<_> = (0..n).map(|i| (eta[i], anchor[i])).collect();
    let gx: f64 = seed.iter().zip(anchor).map(|(g, a)| g * a).sum();
    add_dual_condition(&mut outer, &inner, &params, &consts, q_val - gx);

    if opts.strategy == Strategy::ReverseNormalCone {
        // min { ηᵀx : first stage, no-good, x ∈ [0,1] } ≥ ηᵀx̂
        let mut cone = LpModel::new(Sense::Minimize);
        let xs = inst.add_first_stage(&mut cone, false);
        if opts.no_good {
            no_good(&mut cone, &xs);
        }
        let params: Vec<_> = (0..n).map(|i| (xs[i], eta[i], 1.0)).collect();
        let consts: Vec<_> = (0..n).map(|i| (eta[i], -anchor[i])).collect();
        add_dual_condition(&mut outer, &cone, &params, &consts, 0.0);
    }
    Ok(StrengthenProblem {
        mode: StrengthenMode::BinaryNoGood,
        anchor: anchor.to_vec(),
        target: q_val,
        lp: outer,
        eta,
        eta_minus: vec![],
    })
}

fn check_dims(n: usize, anchor: &[f64], seed: &[f64]) -> Result<()> {
    if anchor.len() != n {
        return Err(Error::Dimension {
            what: "anchor",
            expected: n,
            got: anchor.len(),
        });
    }
    if seed.len() != n {
        return Err(Error::Dimension {
            what: "seed slope",
            expected: n,
            got: seed.len(),
        });
    }
    Ok(())
}

/// Strengthens the tight binary cut `θ ≥ Q + gᵀ(x − x̂)` into
/// `θ ≥ Q + (g + η)ᵀ(x − x̂)`.
pub fn strengthen_binary_cut(
    inst: &SmipInstance,
    s: usize,
    anchor: &[f64],
    q_val: f64,
    seed: &[f64],
    opts: &BinaryOptions,
) -> Result<StrengthenOutcome> {
    let tag = ScenarioTag::Scenario(s);
    let mut p = binary_problem(inst, s, anchor, q_val, seed, opts, false)?;
    let (mut st, mut eta, _, mut obj) = p.solve();
    if st == LpStatus::Unbounded && opts.strategy == Strategy::Auto {
        p = binary_problem(inst, s, anchor, q_val, seed, opts, true)?;
        (st, eta, _, obj) = p.solve();
    }
    let fallback = |status| StrengthenOutcome {
        status,
        eta: vec![0.0; anchor.len()],
        eta_minus: None,
        objective: None,
        cut: linear_relu(anchor, q_val, seed, tag),
    };
    Ok(match st {
        LpStatus::Optimal => {
            let slope: Vec<f64> = seed.iter().zip(&eta).map(|(g, e)| g + e).collect();
            StrengthenOutcome {
                status: StrengthenStatus::Improved,
                cut: linear_relu(anchor, q_val, &slope, tag),
                eta,
                eta_minus: None,
                objective: Some(obj),
            }
        }
        _ if opts.strategy == Strategy::Auto => fallback(StrengthenStatus::Degraded),
        LpStatus::Unbounded => fallback(StrengthenStatus::Unbounded),
        LpStatus::Infeasible => fallback(StrengthenStatus::Infeasible),
        LpStatus::NumericalError => fallback(StrengthenStatus::Degraded),
    })
}

/// Extra constraints for the table-based strengthening LP.
#[derive(Debug, Clone, Default)]
pub struct ExactConstraints {
    pub reverse_cone: bool,
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
}

/// Rows `(x̂ − x)ᵀη ≥ Q(x̂) − gᵀ(x̂ − x) − Q(x)` (and, with the reverse cone,
/// `(x̂ − x)ᵀη ≤ 0`) for every table point.
fn exact_rows(table: &RecourseTable, anchor: &[f64], q_val: f64, seed: &[f64], reverse_cone: bool) -> Vec<(Vec<f64>, RowSense, f64)> {
    let mut rows = Vec::new();
    for (x, qx) in table.points.iter().zip(&table.values) {
        let d: Vec<f64> = anchor.iter().zip(x).map(|(a, x)| a - x).collect();
        if d.iter().all(|v| *v == 0.0) {
            continue;
        }
        let gd: f64 = seed.iter().zip(&d).map(|(g, d)| g * d).sum();
        if reverse_cone {
            rows.push((d.clone(), RowSense::Le, 0.0));
        }
        rows.push((d, RowSense::Ge, q_val - gd - qx));
    }
    rows
}

/// `min aᵀη` over the exact strengthening region described by a full table.
pub fn strengthen_exact(
    table: &RecourseTable,
    anchor: &[f64],
    q_val: f64,
    seed: &[f64],
    objective: &[f64],
    extra: &ExactConstraints,
) -> Result<StrengthenOutcome> {
    let n = anchor.len();
    check_dims(n, objective, seed)?;
    let mut m = LpModel::new(Sense::Minimize);
    let eta: Vec<usize> = (0..n)
        .map(|i| match &extra.bounds {
            Some((lo, hi)) => m.add_var(objective[i], lo[i], hi[i], false),
            None => m.add_var(objective[i], f64::NEG_INFINITY, f64::INFINITY, false),
        })
        .collect();
    for (d, sense, rhs) in exact_rows(table, anchor, q_val, seed, extra.reverse_cone) {
        m.add_row(d.iter().enumerate().map(|(i, v)| (eta[i], *v)).collect(), sense, rhs);
    }
    let p = StrengthenProblem {
        mode: StrengthenMode::BinaryNoGood,
        anchor: anchor.to_vec(),
        target: q_val,
        lp: m,
        eta,
        eta_minus: vec![],
    };
    let (st, eta, _, obj) = p.solve();
    let tag = table.scenario;
    Ok(match st {
        LpStatus::Optimal => {
            let slope: Vec<f64> = seed.iter().zip(&eta).map(|(g, e)| g + e).collect();
            StrengthenOutcome {
                status: StrengthenStatus::Improved,
                cut: linear_relu(anchor, q_val, &slope, tag),
                eta,
                eta_minus: None,
                objective: Some(obj),
            }
        }
        st => StrengthenOutcome {
            status: match st {
                LpStatus::Unbounded => StrengthenStatus::Unbounded,
                LpStatus::Infeasible => StrengthenStatus::Infeasible,
                _ => StrengthenStatus::Degraded,
            },
            eta: vec![0.0; n],
            eta_minus: None,
            objective: None,
            cut: linear_relu(anchor, q_val, seed, tag),
        },
    })
}

/// Whether η satisfies every exact strengthening row on the table.
pub fn eta_feasible_on_table(eta: &[f64], table: &RecourseTable, anchor: &[f64], q_val: f64, seed: &[f64], reverse_cone: bool) -> bool {
    let tol = 1e-7 * (1.0 + q_val.abs());
    exact_rows(table, anchor, q_val, seed, reverse_cone).iter().all(|(d, sense, rhs)| {
        let lhs: f64 = d.iter().zip(eta).map(|(d, e)| d * e).sum();
        match sense {
            RowSense::Ge => lhs >= rhs - tol,
            RowSense::Le => lhs <= rhs + tol,
            RowSense::Eq => (lhs - rhs).abs() <= tol,
        }
    })
}

/// Oracle check of η against the exact (unrelaxed) strengthening condition.
/// Errors with `UnsupportedByOracle` when no table can be built.
pub fn feasible_region_membership(eta: &[f64], inst: &SmipInstance, s: usize, anchor: &[f64], q_val: f64, seed: &[f64]) -> Result<bool> {
    check_dims(inst.n(), anchor, seed)?;
    let table = oracle::build_table(inst, s)?;
    Ok(eta_feasible_on_table(eta, &table, anchor, q_val, seed, false))
}

#[derive(Debug, Clone, Default)]
pub struct MixedOptions {
    /// Objective on η⁺ and η⁻; default all ones.
    pub a_plus: Option<Vec<f64>>,
    pub a_minus: Option<Vec<f64>>,
    pub objective_cut: Option<f64>,
}

/// Builds the lifted strengthening LP for `θ ≥ Q − ρ‖x − x̂‖₁`.
pub fn mixed_problem(inst: &SmipInstance, s: usize, anchor: &[f64], q_val: f64, rho: f64, opts: &MixedOptions, with_box: bool) -> Result<StrengthenProblem> {
    let n = inst.n();
    check_dims(n, anchor, anchor)?;
    for (i, (&a, &b)) in anchor.iter().zip(&inst.upper).enumerate() {
        if !(a >= -1e-9 && a <= b + 1e-9) {
            return Err(Error::InvalidInstance(format!("anchor coordinate {i} = {a} outside [0, {b}]")));
        }
    }
    let ones = vec![1.0; n];
    let ap = opts.a_plus.as_ref().unwrap_or(&ones);
    let am = opts.a_minus.as_ref().unwrap_or(&ones);
    if ap.len() != n || am.len() != n {
        return Err(Error::InvalidConfig("strengthening objective must have length n".into()));
    }
    let mut outer = LpModel::new(Sense::Maximize);
    let hi = if with_box { 2.0 * rho } else { f64::INFINITY };
    let mut eta_p = Vec::with_capacity(n);
    let mut eta_m = Vec::with_capacity(n);
    for i in 0..n {
        // components that never multiply a nonzero term are pinned to 0
        let up = if anchor[i] >= inst.upper[i] { 0.0 } else { hi };
        let dn = if anchor[i] <= 0.0 { 0.0 } else { hi };
        eta_p.push(outer.add_var(ap[i], 0.0, up, false));
        eta_m.push(outer.add_var(am[i], 0.0, dn, false));
    }

    let (mut inner, cols) = joint_model(inst, s, false);
    if let Some(ls) = opts.objective_cut {
        let q = &inst.scenarios[s].q;
        inner.add_row(cols.y.iter().zip(q).map(|(&j, &c)| (j, c)).collect(), RowSense::Ge, ls);
    }
    let mut params = Vec::new();
    for i in 0..n {
        let room = (inst.upper[i] - anchor[i]).max(0.0);
        let wp = inner.add_var(rho, 0.0, room, false);
        let wm = inner.add_var(rho, 0.0, anchor[i].max(0.0), false);
        let z = inner.add_var(0.0, 0.0, 1.0, false);
        inner.add_row(vec![(wp, 1.0), (wm, -1.0), (cols.x[i], -1.0)], RowSense::Eq, -anchor[i]);
        inner.add_row(vec![(wp, 1.0), (z, -room)], RowSense::Le, 0.0);
        inner.add_row(vec![(wm, 1.0), (z, anchor[i])], RowSense::Le, anchor[i]);
        params.push((wp, eta_p[i], -1.0));
        params.push((wm, eta_m[i], -1.0));
    }
    add_dual_condition(&mut outer, &inner, &params, &[], q_val);
    Ok(StrengthenProblem {
        mode: StrengthenMode::MixedLifted,
        anchor: anchor.to_vec(),
        target: q_val,
        lp: outer,
        eta: eta_p,
        eta_minus: eta_m,
    })
}

/// Strengthens `θ ≥ Q − ρ‖x − x̂‖₁` into
/// `θ ≥ Q + Σ(η⁺ᵢ − ρ)(xᵢ − x̂ᵢ)⁺ + Σ(η⁻ᵢ − ρ)(xᵢ − x̂ᵢ)⁻`.
pub fn strengthen_mixed_cut(inst: &SmipInstance, s: usize, anchor: &[f64], q_val: f64, rho: f64, opts: &MixedOptions) -> Result<StrengthenOutcome> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidConfig(format!("penalty {rho} must be >= 0")));
    }
    let tag = ScenarioTag::Scenario(s);
    let mut p = mixed_problem(inst, s, anchor, q_val, rho, opts, false)?;
    let (mut st, mut ep, mut em, mut obj) = p.solve();
    if st == LpStatus::Unbounded {
        p = mixed_problem(inst, s, anchor, q_val, rho, opts, true)?;
        (st, ep, em, obj) = p.solve();
    }
    if st != LpStatus::Optimal {
        return Ok(StrengthenOutcome {
            status: StrengthenStatus::Degraded,
            eta: vec![0.0; anchor.len()],
            eta_minus: Some(vec![0.0; anchor.len()]),
            objective: None,
            cut: ReluCut::norm_cut(anchor, q_val, rho, tag),
        });
    }
    Ok(StrengthenOutcome {
        status: StrengthenStatus::Improved,
        cut: ReluCut {
            anchor: anchor.to_vec(),
            intercept: q_val,
            pi_plus: ep.iter().map(|e| e - rho).collect(),
            pi_minus: em.iter().map(|e| e - rho).collect(),
            scenario: tag,
        },
        eta: ep,
        eta_minus: Some(em),
        objective: Some(obj),
    })
}
