//! Access to a single local recourse function `Q_s`, either through MILP
//! solves on the scenario data or through an enumerated table.

use crate::milp::{self, LpModel, LpSolution, LpStatus, MilpLimits, MilpStatus, RowSense, Sense};
use crate::model::{SmipInstance, VarKind};
use crate::{Error, Result};

/// Result of an inner minimization. When the solver stops early, `value` is
/// the proven lower bound (so cuts built from it stay valid) and `exact` is false.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerMin {
    pub value: f64,
    pub x: Vec<f64>,
    pub exact: bool,
}

pub trait Recourse: Sync {
    fn dim(&self) -> usize;
    fn upper_bounds(&self) -> &[f64];
    fn value(&self, x: &[f64]) -> Result<f64>;
    /// `min_x Q(x) + πᵀ(x̂ − x)` over the first-stage domain.
    fn lagrangian(&self, anchor: &[f64], pi: &[f64]) -> Result<InnerMin>;
    /// `min_x Q(x) − Σ π⁺ᵢ(xᵢ−x̂ᵢ)⁺ − Σ π⁻ᵢ(xᵢ−x̂ᵢ)⁻` over the first-stage domain.
    fn relu_lagrangian(&self, anchor: &[f64], pi_plus: &[f64], pi_minus: &[f64]) -> Result<InnerMin>;
}

/// Column indices of a joint first/second-stage model.
#[derive(Debug, Clone)]
pub struct JointColumns {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

/// `{(x, y) : A x ≥ b, T x + W y ≥ h, bounds}` with objective `qᵀy`.
pub fn joint_model(inst: &SmipInstance, s: usize, integral: bool) -> (LpModel, JointColumns) {
    let sc = &inst.scenarios[s];
    let mut m = LpModel::new(Sense::Minimize);
    let x = inst.add_first_stage(&mut m, integral);
    let y: Vec<usize> = (0..sc.num_y())
        .map(|j| {
            let (lo, hi) = sc.y_bounds[j];
            m.add_var(sc.q[j], lo, hi, integral && sc.y_kinds[j] == VarKind::Integer)
        })
        .collect();
    let w = sc.w.row_lists();
    let t = sc.t.row_lists();
    for r in 0..sc.h.len() {
        let mut coeffs: Vec<(usize, f64)> = t[r].iter().map(|&(j, v)| (x[j], v)).collect();
        coeffs.extend(w[r].iter().map(|&(j, v)| (y[j], v)));
        m.add_row(coeffs, RowSense::Ge, sc.h[r]);
    }
    (m, JointColumns { x, y })
}

/// `min qᵀy : W y ≥ h − T x` at a fixed x.
pub fn second_stage_model(inst: &SmipInstance, s: usize, x: &[f64], integral: bool) -> LpModel {
    let sc = &inst.scenarios[s];
    let mut m = LpModel::new(Sense::Minimize);
    for j in 0..sc.num_y() {
        let (lo, hi) = sc.y_bounds[j];
        m.add_var(sc.q[j], lo, hi, integral && sc.y_kinds[j] == VarKind::Integer);
    }
    let tx = sc.t.mul(x);
    for (r, row) in sc.w.row_lists().into_iter().enumerate() {
        m.add_row(row, RowSense::Ge, sc.h[r] - tx[r]);
    }
    m
}

/// Adds `ω⁺ − ω⁻ = x − x̂`, `0 ≤ ω⁺ ≤ (B−x̂)`, `0 ≤ ω⁻ ≤ x̂`, with costs `c⁺`,
/// `c⁻`; a binary selector z is added only where both sides could be active
/// profitably (`c⁺ᵢ + c⁻ᵢ < 0`). Returns `(ω⁺, ω⁻)` column lists.
pub(crate) fn add_relu_terms(
    m: &mut LpModel,
    xs: &[usize],
    anchor: &[f64],
    upper: &[f64],
    c_plus: &[f64],
    c_minus: &[f64],
) -> (Vec<usize>, Vec<usize>) {
    let mut wp = Vec::with_capacity(xs.len());
    let mut wm = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        let up = (upper[i] - anchor[i]).max(0.0);
        let dn = anchor[i].max(0.0);
        let p = m.add_var(c_plus[i], 0.0, up, false);
        let q = m.add_var(c_minus[i], 0.0, dn, false);
        m.add_row(vec![(p, 1.0), (q, -1.0), (xs[i], -1.0)], RowSense::Eq, -anchor[i]);
        if c_plus[i] + c_minus[i] < 0.0 && up > 0.0 && dn > 0.0 {
            let z = m.add_var(0.0, 0.0, 1.0, true);
            m.add_row(vec![(p, 1.0), (z, -up)], RowSense::Le, 0.0);
            m.add_row(vec![(q, 1.0), (z, dn)], RowSense::Le, dn);
        }
        wp.push(p);
        wm.push(q);
    }
    (wp, wm)
}

/// MILP-backed recourse of one scenario.
pub struct ScenarioRecourse<'a> {
    pub inst: &'a SmipInstance,
    pub scenario: usize,
    pub limits: MilpLimits,
}

impl<'a> ScenarioRecourse<'a> {
    pub fn new(inst: &'a SmipInstance, scenario: usize) -> Self {
        ScenarioRecourse {
            inst,
            scenario,
            limits: MilpLimits::default(),
        }
    }

    /// LP relaxation of the second stage at `x` (for Benders duals).
    pub fn lp_at(&self, x: &[f64]) -> Result<LpSolution> {
        let sol = milp::solve_lp(&second_stage_model(self.inst, self.scenario, x, false));
        match sol.status {
            LpStatus::Optimal => Ok(sol),
            LpStatus::Infeasible => Err(Error::RecourseInfeasible(self.scenario)),
            s => Err(Error::Solver(format!("second-stage LP at scenario {}: {s:?}", self.scenario))),
        }
    }

    /// `min qᵀy` over the relaxed joint region: a lower bound on `Q_s` over X̄.
    pub fn lp_lower_bound(&self) -> Result<f64> {
        let (m, _) = joint_model(self.inst, self.scenario, false);
        let sol = milp::solve_lp(&m);
        match sol.status {
            LpStatus::Optimal => Ok(sol.objective),
            s => Err(Error::Solver(format!("scenario {} bound LP: {s:?}", self.scenario))),
        }
    }

    /// `min_{x ∈ X̄} Q_s(x)` by one MILP (returns the proven bound on limits).
    pub fn scenario_minimum(&self) -> Result<f64> {
        let (m, _) = joint_model(self.inst, self.scenario, true);
        Ok(self.run(&m, 0.0, &[])?.value)
    }

    fn run(&self, m: &LpModel, constant: f64, xs: &[usize]) -> Result<InnerMin> {
        let sol = milp::solve_milp(m, &self.limits);
        let pick = |sol: &milp::MilpSolution| xs.iter().map(|&j| sol.x[j]).collect::<Vec<f64>>();
        match sol.status {
            MilpStatus::Optimal => Ok(InnerMin {
                value: sol.objective + constant,
                x: pick(&sol),
                exact: true,
            }),
            MilpStatus::Limit if sol.bound.is_finite() => {
                log::warn!("scenario {}: inner MILP hit a limit; using bound", self.scenario);
                Ok(InnerMin {
                    value: sol.bound + constant,
                    x: if sol.has_incumbent() { pick(&sol) } else { Vec::new() },
                    exact: false,
                })
            }
            MilpStatus::Infeasible => Err(Error::RecourseInfeasible(self.scenario)),
            s => Err(Error::Solver(format!("scenario {} inner MILP: {s:?}", self.scenario))),
        }
    }
}

impl Recourse for ScenarioRecourse<'_> {
    fn dim(&self) -> usize {
        self.inst.n()
    }

    fn upper_bounds(&self) -> &[f64] {
        &self.inst.upper
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let m = second_stage_model(self.inst, self.scenario, x, true);
        let sol = milp::solve_milp(&m, &self.limits);
        match sol.status {
            MilpStatus::Optimal => Ok(sol.objective),
            MilpStatus::Infeasible => Err(Error::RecourseInfeasible(self.scenario)),
            s => Err(Error::Solver(format!(
                "evaluating Q_{} returned {s:?} (bound {})",
                self.scenario, sol.bound
            ))),
        }
    }

    fn lagrangian(&self, anchor: &[f64], pi: &[f64]) -> Result<InnerMin> {
        let (mut m, cols) = joint_model(self.inst, self.scenario, true);
        for (i, &j) in cols.x.iter().enumerate() {
            m.objective[j] -= pi[i];
        }
        let constant: f64 = pi.iter().zip(anchor).map(|(p, a)| p * a).sum();
        self.run(&m, constant, &cols.x)
    }

    fn relu_lagrangian(&self, anchor: &[f64], pi_plus: &[f64], pi_minus: &[f64]) -> Result<InnerMin> {
        let (mut m, cols) = joint_model(self.inst, self.scenario, true);
        let cp: Vec<f64> = pi_plus.iter().map(|v| -v).collect();
        let cm: Vec<f64> = pi_minus.iter().map(|v| -v).collect();
        add_relu_terms(&mut m, &cols.x, anchor, &self.inst.upper, &cp, &cm);
        self.run(&m, 0.0, &cols.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    #[test]
    fn fix6_values_by_milp() {
        let inst = fix6();
        let r = ScenarioRecourse::new(&inst, 0);
        let expect = [([0.0, 0.0], 8.0), ([1.0, 0.0], 4.0), ([0.0, 1.0], 4.0), ([1.0, 1.0], 2.0)];
        for (x, q) in expect {
            assert_eq!(r.value(&x).unwrap(), q);
        }
    }

    #[test]
    fn fix1_lagrangian_scan() {
        // Q₂ on {0,1,2} = {0,1,3}; anchor 1, π = 2: min{0+2, 1, 3−2} = 1
        let inst = fix1();
        let r = ScenarioRecourse::new(&inst, 1);
        let l = r.lagrangian(&[1.0], &[2.0]).unwrap();
        assert!((l.value - 1.0).abs() < 1e-9);
        assert!(l.exact);
    }

    #[test]
    fn relu_lagrangian_rewards_both_sides() {
        // Q₁ on {0,1,2} = {1,2,2}; anchor 1, π⁺ = π⁻ = 1 pays +|x−1|:
        // min{1−1, 2, 2−1} = 0
        let inst = fix1();
        let r = ScenarioRecourse::new(&inst, 0);
        let l = r.relu_lagrangian(&[1.0], &[1.0], &[1.0]).unwrap();
        assert!((l.value - 0.0).abs() < 1e-9);
        assert_eq!(l.x, vec![0.0]);
        // penalizing both sides keeps the anchor value: min{1+2, 2, 2+2} = 2
        let l = r.relu_lagrangian(&[1.0], &[-2.0], &[-2.0]).unwrap();
        assert!((l.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bounds_and_benders_lp() {
        let inst = fixmi();
        let r = ScenarioRecourse::new(&inst, 0);
        assert!((r.lp_lower_bound().unwrap() - 0.0).abs() < 1e-9);
        let lp = r.lp_at(&[1.0, 1.0]).unwrap();
        assert!((lp.objective - 2.0).abs() < 1e-9);
        assert!((lp.duals[0] - 1.0).abs() < 1e-9);
        assert_eq!(r.scenario_minimum().unwrap(), 0.0);
    }
}
