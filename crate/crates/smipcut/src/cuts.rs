//! Classical cut families, all emitted as [`LinearCut`] or [`ReluCut`].

use crate::milp::{self, LpModel, LpStatus, RowSense, Sense};
use crate::model::{LinearCut, ReluCut, ScenarioTag, SmipInstance, VarKind};
use crate::recourse::{Recourse, ScenarioRecourse};
use crate::{Error, Result};

/// Data shared by the closed-form generators.
#[derive(Debug, Clone)]
pub struct CutRequest {
    pub scenario: usize,
    pub anchor: Vec<f64>,
    /// `Q_s(x̂)`.
    pub q_val: f64,
    /// Universal lower bound L.
    pub lower: f64,
    /// Scenario bound `L_s ≥ L`, used in place of L when present.
    pub scenario_lower: Option<f64>,
    pub lipschitz: Option<f64>,
}

impl CutRequest {
    pub fn new(scenario: usize, anchor: &[f64], q_val: f64, lower: f64) -> Self {
        CutRequest {
            scenario,
            anchor: anchor.to_vec(),
            q_val,
            lower,
            scenario_lower: None,
            lipschitz: None,
        }
    }

    fn bound(&self) -> f64 {
        self.scenario_lower.unwrap_or(self.lower).max(self.lower)
    }

    /// `θ ≥ Q − ρ‖x − x̂‖₁` with `ρ = Q − bound` (zero slope when Q ≤ bound).
    fn norm_cut(&self, rho: f64) -> ReluCut {
        ReluCut::norm_cut(&self.anchor, self.q_val, rho.max(0.0), ScenarioTag::Scenario(self.scenario))
    }
}

/// A generated cut plus whether a solver limit weakened it.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated<C> {
    pub cut: C,
    pub degraded: bool,
}

fn is_integral(v: f64) -> bool {
    (v - v.round()).abs() <= 1e-9
}

/// `θ ≥ Q_LP(x̂) + gᵀ(x − x̂)` with `g = −Tᵀσ` from the second-stage LP duals.
pub fn benders_cut(inst: &SmipInstance, s: usize, anchor: &[f64]) -> Result<LinearCut> {
    let lp = ScenarioRecourse::new(inst, s).lp_at(anchor)?;
    let g: Vec<f64> = inst.scenarios[s].t.tmul(&lp.duals).into_iter().map(|v| -v).collect();
    Ok(LinearCut::through(anchor, lp.objective, &g))
}

/// Benders slope with the intercept lifted to the integer Lagrangian value.
pub fn strengthened_benders_cut(inst: &SmipInstance, s: usize, anchor: &[f64]) -> Result<Generated<LinearCut>> {
    let b = benders_cut(inst, s, anchor)?;
    let base = b.eval(anchor);
    let inner = ScenarioRecourse::new(inst, s).lagrangian(anchor, &b.coeffs)?;
    // the Lagrangian value is never below the LP value; a limit may leave only a weak bound
    let value = inner.value.max(base);
    Ok(Generated {
        cut: LinearCut::through(anchor, value, &b.coeffs),
        degraded: !inner.exact,
    })
}

/// `θ ≥ Q − (Q − L)‖x − x̂‖₁` at a binary anchor.
pub fn integer_l_shaped_cut(req: &CutRequest) -> Result<ReluCut> {
    if req.anchor.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::NonBinaryAnchor);
    }
    Ok(req.norm_cut(req.q_val - req.bound()))
}

/// The same formula at a general integer anchor.
pub fn lambda_shaped_cut(req: &CutRequest, kinds: &[VarKind]) -> Result<ReluCut> {
    if kinds.contains(&VarKind::Continuous) || !req.anchor.iter().all(|&v| is_integral(v)) {
        return Err(Error::NonIntegerAnchor);
    }
    Ok(req.norm_cut(req.q_val - req.bound()))
}

/// `θ ≥ Q − ρ_lip‖x − x̂‖₁`.
pub fn reverse_norm_cut(req: &CutRequest) -> Result<ReluCut> {
    let rho = req.lipschitz.ok_or(Error::MissingLipschitz)?;
    if !(rho >= 0.0) {
        return Err(Error::InvalidConfig(format!("Lipschitz constant {rho} must be >= 0")));
    }
    Ok(req.norm_cut(rho))
}

/// `θ ≥ L_A + πᵀ(x−x̂) − ρ‖x−x̂‖₁` in ReLU form (`π⁺ = π − ρ`, `π⁻ = −π − ρ`),
/// with `L_A` from one inner solve.
pub fn augmented_lagrangian_cut(
    rec: &dyn Recourse,
    tag: ScenarioTag,
    anchor: &[f64],
    pi: &[f64],
    rho: f64,
) -> Result<Generated<ReluCut>> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidConfig(format!("penalty {rho} must be >= 0")));
    }
    let pp: Vec<f64> = pi.iter().map(|p| p - rho).collect();
    let pm: Vec<f64> = pi.iter().map(|p| -p - rho).collect();
    let inner = rec.relu_lagrangian(anchor, &pp, &pm)?;
    Ok(Generated {
        cut: ReluCut {
            anchor: anchor.to_vec(),
            intercept: inner.value,
            pi_plus: pp,
            pi_minus: pm,
            scenario: tag,
        },
        degraded: !inner.exact,
    })
}

#[derive(Debug, Clone)]
pub struct LagrangianOptions {
    /// Box on the multipliers for the cutting-plane master.
    pub pi_bound: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LagrangianOptions {
    fn default() -> Self {
        LagrangianOptions {
            pi_bound: 1e4,
            max_iter: 500,
            tol: 1e-7,
        }
    }
}

/// Lagrangian cut `θ ≥ L(π*) + π*ᵀ(x − x̂)` with `π*` maximizing the dual,
/// found by Kelley's method over inner MILP solves and then moved to a
/// minimum-ℓ1 multiplier on the optimal face.
pub fn lagrangian_cut(
    rec: &dyn Recourse,
    anchor: &[f64],
    q_val: f64,
    opts: &LagrangianOptions,
) -> Result<Generated<LinearCut>> {
    let n = anchor.len();
    // each explored point x^k gives t ≤ Q(x^k) + πᵀ(x̂ − x^k)
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(anchor.to_vec(), q_val)];
    let mut best_pi = vec![0.0; n];
    let mut best_val = f64::NEG_INFINITY;
    let mut degraded = false;
    let mut upper = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let Some((pi, t)) = kelley_master(&pts, anchor, opts.pi_bound, None)? else {
            break;
        };
        upper = t;
        let inner = rec.lagrangian(anchor, &pi)?;
        degraded |= !inner.exact;
        if inner.value > best_val {
            best_val = inner.value;
            best_pi = pi.clone();
        }
        if upper - best_val <= opts.tol * (1.0 + best_val.abs()) || inner.x.is_empty() {
            break;
        }
        let qk = inner.value - pi.iter().zip(anchor).zip(&inner.x).map(|((p, a), x)| p * (a - x)).sum::<f64>();
        if pts.iter().any(|(p, _)| p.iter().zip(&inner.x).all(|(a, b)| (a - b).abs() < 1e-9)) {
            break;
        }
        pts.push((inner.x, qk));
    }
    if upper - best_val > 1e-5 * (1.0 + best_val.abs()) {
        log::debug!("lagrangian dual not closed: {best_val} vs {upper}");
    }
    // prefer the smallest multiplier achieving the same bound
    if let Some((pi, _)) = kelley_master(&pts, anchor, opts.pi_bound, Some(best_val))? {
        let inner = rec.lagrangian(anchor, &pi)?;
        if inner.value >= best_val - opts.tol * (1.0 + best_val.abs()) {
            degraded |= !inner.exact;
            best_val = inner.value;
            best_pi = pi;
        }
    }
    Ok(Generated {
        cut: LinearCut::through(anchor, best_val, &best_pi),
        degraded,
    })
}

/// `max t : t ≤ Q^k + πᵀ(x̂ − x^k)`, or, with `floor`, `min ‖π‖₁` subject to
/// every row being at least `floor`.
fn kelley_master(pts: &[(Vec<f64>, f64)], anchor: &[f64], bound: f64, floor: Option<f64>) -> Result<Option<(Vec<f64>, f64)>> {
    let n = anchor.len();
    let mut m = LpModel::new(if floor.is_some() { Sense::Minimize } else { Sense::Maximize });
    let pi: Vec<usize> = (0..n).map(|_| m.add_var(0.0, -bound, bound, false)).collect();
    let t = m.add_var(if floor.is_some() { 0.0 } else { 1.0 }, f64::NEG_INFINITY, f64::INFINITY, false);
    if let Some(f) = floor {
        m.lower[t] = f;
        for &p in &pi {
            let a = m.add_var(1.0, 0.0, f64::INFINITY, false);
            m.add_row(vec![(a, 1.0), (p, -1.0)], RowSense::Ge, 0.0);
            m.add_row(vec![(a, 1.0), (p, 1.0)], RowSense::Ge, 0.0);
        }
    }
    for (x, q) in pts {
        // t − πᵀ(x̂ − x) ≤ q
        let mut row = vec![(t, 1.0)];
        row.extend((0..n).map(|i| (pi[i], -(anchor[i] - x[i]))));
        m.add_row(row, RowSense::Le, *q);
    }
    let sol = milp::solve_lp(&m);
    match sol.status {
        LpStatus::Optimal => Ok(Some((pi.iter().map(|&j| sol.x[j]).collect(), sol.x[t]))),
        LpStatus::Infeasible if floor.is_some() => Ok(None),
        s => Err(Error::Solver(format!("Lagrangian master LP: {s:?}"))),
    }
}
