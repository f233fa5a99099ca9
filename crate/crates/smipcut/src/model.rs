//! Problem and cut data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::milp::{self, LpModel, LpStatus, RowSense, Sense};
use crate::{Error, Result};

pub mod fixtures;

/// Coordinate-list sparse matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            triplets: Vec::new(),
        }
    }

    pub fn from_dense(rows: &[Vec<f64>], cols: usize) -> Self {
        let mut m = SparseMatrix::new(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    m.triplets.push((i, j, v));
                }
            }
        }
        m
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.triplets.push((r, c, v));
        }
    }

    /// Entries grouped by row.
    pub fn row_lists(&self) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); self.rows];
        for &(r, c, v) in &self.triplets {
            out[r].push((c, v));
        }
        out
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &(r, c, v) in &self.triplets {
            out[r] += v * x[c];
        }
        out
    }

    /// Mᵀy.
    pub fn tmul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for &(r, c, v) in &self.triplets {
            out[c] += v * y[r];
        }
        out
    }

    fn check(&self, what: &str) -> Result<()> {
        for &(r, c, v) in &self.triplets {
            if r >= self.rows || c >= self.cols || !v.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "{what}: bad entry ({r}, {c}, {v}) for a {}x{} matrix",
                    self.rows, self.cols
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Integer,
    Continuous,
}

/// One second-stage realization: `min qᵀy s.t. W y ≥ h − T x`.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub q: Vec<f64>,
    pub w: SparseMatrix,
    pub t: SparseMatrix,
    pub h: Vec<f64>,
    pub y_kinds: Vec<VarKind>,
    /// Bounds on y; defaults to `[0, ∞)`.
    pub y_bounds: Vec<(f64, f64)>,
    pub prob: f64,
}

impl Scenario {
    pub fn num_y(&self) -> usize {
        self.q.len()
    }
}

/// Two-stage SMIP `min cᵀx + Σ p_s Q_s(x), A x ≥ b`, with first-stage bounds
/// normalized to `[0, B_i]`.
#[derive(Debug, Clone)]
pub struct SmipInstance {
    pub c: Vec<f64>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub var_kinds: Vec<VarKind>,
    /// Upper bounds `B_i` after the shift.
    pub upper: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    /// Original lower bounds; original x = normalized x + shift.
    pub shift: Vec<f64>,
    /// Optional user-supplied universal lower bound on every `Q_s`.
    pub lower_bound: Option<f64>,
}

impl SmipInstance {
    /// Build and validate an instance given in original coordinates.
    pub fn new(
        c: Vec<f64>,
        a: SparseMatrix,
        b: Vec<f64>,
        var_kinds: Vec<VarKind>,
        bounds: Vec<(f64, f64)>,
        mut scenarios: Vec<Scenario>,
    ) -> Result<Self> {
        let n = c.len();
        dim("var_kinds", n, var_kinds.len())?;
        dim("bounds", n, bounds.len())?;
        dim("A columns", n, a.cols)?;
        dim("b", a.rows, b.len())?;
        a.check("A")?;
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidInstance(format!(
                    "variable {i} needs finite bounds lo <= hi, got [{lo}, {hi}]"
                )));
            }
            if var_kinds[i] == VarKind::Integer && (lo.fract() != 0.0 || hi.fract() != 0.0) {
                return Err(Error::InvalidInstance(format!("integer variable {i} has fractional bounds")));
            }
        }
        let shift: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let upper: Vec<f64> = bounds.iter().map(|b| b.1 - b.0).collect();
        let a_shift = a.mul(&shift);
        let b: Vec<f64> = b.iter().zip(&a_shift).map(|(bi, s)| bi - s).collect();
        let mut total = 0.0;
        for (s, sc) in scenarios.iter_mut().enumerate() {
            let m = sc.q.len();
            let ctx = |what: &str| format!("scenario {s}: {what}");
            if sc.w.rows != sc.h.len() || sc.t.rows != sc.h.len() {
                return Err(Error::InvalidInstance(ctx("rows(W), rows(T), len(h) differ")));
            }
            if sc.w.cols != m || sc.t.cols != n || sc.y_kinds.len() != m {
                return Err(Error::InvalidInstance(ctx("W/T/y_kinds dimensions inconsistent")));
            }
            if sc.y_bounds.is_empty() {
                sc.y_bounds = vec![(0.0, f64::INFINITY); m];
            }
            if sc.y_bounds.len() != m {
                return Err(Error::InvalidInstance(ctx("y_bounds length")));
            }
            sc.w.check(&ctx("W"))?;
            sc.t.check(&ctx("T"))?;
            if !(sc.prob >= 0.0) {
                return Err(Error::InvalidInstance(ctx("negative probability")));
            }
            if sc.q.iter().chain(&sc.h).any(|v| !v.is_finite()) {
                return Err(Error::InvalidInstance(ctx("non-finite data")));
            }
            let ts = sc.t.mul(&shift);
            for (h, d) in sc.h.iter_mut().zip(ts) {
                *h -= d;
            }
            total += sc.prob;
        }
        if !scenarios.is_empty() && (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInstance(format!("probabilities sum to {total}, not 1")));
        }
        if c.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("non-finite first-stage data".into()));
        }
        let inst = SmipInstance {
            c,
            a,
            b,
            var_kinds,
            upper,
            scenarios,
            shift,
            lower_bound: None,
        };
        inst.check_first_stage()?;
        Ok(inst)
    }

    pub fn with_lower_bound(mut self, l: Option<f64>) -> Self {
        self.lower_bound = l;
        self
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.prob).collect()
    }

    pub fn is_integer(&self, i: usize) -> bool {
        self.var_kinds[i] == VarKind::Integer
    }

    pub fn all_integer(&self) -> bool {
        self.var_kinds.iter().all(|k| *k == VarKind::Integer)
    }

    pub fn all_binary(&self) -> bool {
        self.all_integer() && self.upper.iter().all(|&b| b <= 1.0)
    }

    /// `cᵀx` in normalized coordinates.
    pub fn first_stage_cost(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Constant `cᵀshift` separating normalized and original objective values.
    pub fn objective_offset(&self) -> f64 {
        self.c.iter().zip(&self.shift).map(|(c, s)| c * s).sum()
    }

    pub fn to_original(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.shift).map(|(v, s)| v + s).collect()
    }

    pub fn first_stage_feasible(&self, x: &[f64], tol: f64) -> bool {
        let ax = self.a.mul(x);
        ax.iter().zip(&self.b).all(|(l, r)| *l >= r - tol)
            && x.iter().zip(&self.upper).all(|(v, b)| *v >= -tol && *v <= b + tol)
    }

    /// Adds the first-stage columns and `A x ≥ b` rows to `model`; returns the column indices.
    pub fn add_first_stage(&self, model: &mut LpModel, integral: bool) -> Vec<usize> {
        let xs: Vec<usize> = (0..self.n())
            .map(|i| model.add_var(0.0, 0.0, self.upper[i], integral && self.is_integer(i)))
            .collect();
        for (i, row) in self.a.row_lists().into_iter().enumerate() {
            let coeffs = row.into_iter().map(|(j, v)| (xs[j], v)).collect();
            model.add_row(coeffs, RowSense::Ge, self.b[i]);
        }
        xs
    }

    fn check_first_stage(&self) -> Result<()> {
        let mut m = LpModel::new(Sense::Minimize);
        self.add_first_stage(&mut m, false);
        match milp::solve_lp(&m).status {
            LpStatus::Optimal => Ok(()),
            LpStatus::Infeasible => Err(Error::InvalidInstance("first-stage region is empty".into())),
            s => Err(Error::Solver(format!("first-stage feasibility check returned {s:?}"))),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: InstanceFile = serde_json::from_str(s)?;
        f.into_instance()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Serialize in original coordinates.
    pub fn to_file(&self) -> InstanceFile {
        let a_shift = self.a.mul(&self.shift);
        InstanceFile {
            c: self.c.clone(),
            a: self.a.clone(),
            b: self.b.iter().zip(&a_shift).map(|(b, s)| b + s).collect(),
            var_kinds: self.var_kinds.clone(),
            bounds: self.shift.iter().zip(&self.upper).map(|(s, u)| [*s, s + u]).collect(),
            scenarios: self
                .scenarios
                .iter()
                .map(|sc| {
                    let ts = sc.t.mul(&self.shift);
                    ScenarioFile {
                        q: sc.q.clone(),
                        w: sc.w.clone(),
                        t: sc.t.clone(),
                        h: sc.h.iter().zip(ts).map(|(h, d)| h + d).collect(),
                        y_kinds: sc.y_kinds.clone(),
                        y_bounds: Some(
                            sc.y_bounds
                                .iter()
                                .map(|&(l, u)| [finite(l), finite(u)])
                                .collect(),
                        ),
                        prob: sc.prob,
                    }
                })
                .collect(),
            lower_bound: self.lower_bound,
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { what, expected, got });
    }
    Ok(())
}

/// On-disk instance layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub var_kinds: Vec<VarKind>,
    pub bounds: Vec<[f64; 2]>,
    pub scenarios: Vec<ScenarioFile>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub q: Vec<f64>,
    #[serde(rename = "W")]
    pub w: SparseMatrix,
    #[serde(rename = "T")]
    pub t: SparseMatrix,
    pub h: Vec<f64>,
    pub y_kinds: Vec<VarKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_bounds: Option<Vec<[Option<f64>; 2]>>,
    pub prob: f64,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<SmipInstance> {
        let scenarios = self
            .scenarios
            .into_iter()
            .map(|s| Scenario {
                q: s.q,
                w: s.w,
                t: s.t,
                h: s.h,
                y_kinds: s.y_kinds,
                y_bounds: s
                    .y_bounds
                    .map(|v| {
                        v.into_iter()
                            .map(|[l, u]| (l.unwrap_or(f64::NEG_INFINITY), u.unwrap_or(f64::INFINITY)))
                            .collect()
                    })
                    .unwrap_or_default(),
                prob: s.prob,
            })
            .collect();
        let bounds = self.bounds.into_iter().map(|[l, u]| (l, u)).collect();
        Ok(SmipInstance::new(self.c, self.a, self.b, self.var_kinds, bounds, scenarios)?
            .with_lower_bound(self.lower_bound))
    }
}

/// Which recourse function a cut describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioTag {
    Scenario(usize),
    Aggregate,
}

/// `θ ≥ intercept + Σ π⁺ᵢ (xᵢ − x̂ᵢ)⁺ + Σ π⁻ᵢ (xᵢ − x̂ᵢ)⁻`, where `(t)⁻ = max(−t, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluCut {
    pub anchor: Vec<f64>,
    pub intercept: f64,
    pub pi_plus: Vec<f64>,
    pub pi_minus: Vec<f64>,
    pub scenario: ScenarioTag,
}

impl ReluCut {
    /// `θ ≥ q − ρ‖x − x̂‖₁`.
    pub fn norm_cut(anchor: &[f64], q: f64, rho: f64, scenario: ScenarioTag) -> Self {
        let n = anchor.len();
        ReluCut {
            anchor: anchor.to_vec(),
            intercept: q,
            pi_plus: vec![-rho; n],
            pi_minus: vec![-rho; n],
            scenario,
        }
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Cut value at `x` (no dimension check).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.intercept;
        for i in 0..self.anchor.len() {
            let d = x[i] - self.anchor[i];
            if d > 0.0 {
                v += self.pi_plus[i] * d;
            } else if d < 0.0 {
                v += self.pi_minus[i] * -d;
            }
        }
        v
    }
}

/// `θ ≥ rhs + coeffsᵀx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCut {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl LinearCut {
    /// Cut through `(anchor, value)` with slope `g`.
    pub fn through(anchor: &[f64], value: f64, g: &[f64]) -> Self {
        let gx: f64 = g.iter().zip(anchor).map(|(a, b)| a * b).sum();
        LinearCut {
            coeffs: g.to_vec(),
            rhs: value - gx,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.rhs + self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

pub fn evaluate_relu_cut(cut: &ReluCut, x: &[f64]) -> Result<f64> {
    dim("cut evaluation point", cut.dim(), x.len())?;
    Ok(cut.eval(x))
}

/// Reads a linear cut as a ReLU cut anchored at `anchor`; `intercept` must
/// equal the linear cut's value there.
pub fn linear_to_relu(cut: &LinearCut, anchor: &[f64], intercept: f64, scenario: ScenarioTag) -> Result<ReluCut> {
    dim("anchor", cut.coeffs.len(), anchor.len())?;
    let at = cut.eval(anchor);
    if (at - intercept).abs() > 1e-7 * (1.0 + intercept.abs()) {
        return Err(Error::NotTight(at - intercept));
    }
    Ok(ReluCut {
        anchor: anchor.to_vec(),
        intercept,
        pi_plus: cut.coeffs.clone(),
        pi_minus: cut.coeffs.iter().map(|g| -g).collect(),
        scenario,
    })
}

/// The linear form a ReLU cut takes on binary points: `π⁺ᵢ` slopes where
/// `x̂ᵢ = 0`, `−π⁻ᵢ` where `x̂ᵢ = 1`.
pub fn binary_linear_form(cut: &ReluCut) -> LinearCut {
    let g: Vec<f64> = (0..cut.dim())
        .map(|i| if cut.anchor[i] >= 0.5 { -cut.pi_minus[i] } else { cut.pi_plus[i] })
        .collect();
    LinearCut::through(&cut.anchor, cut.intercept, &g)
}

pub const GAP_EPS: f64 = 1e-10;

/// Relative optimality gap `(ub − lb) / max(|lb|, ε)`.
pub fn relative_gap(lb: f64, ub: f64) -> f64 {
    if ub == lb {
        return 0.0;
    }
    (ub - lb) / lb.abs().max(GAP_EPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    GapReached,
    IterationLimit,
    TimeLimit,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub cuts: usize,
    pub degraded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    /// Incumbent in original coordinates.
    pub incumbent: Vec<f64>,
    pub iterations: usize,
    pub cut_log: Vec<IterationLog>,
    /// Master resolves spent in the Benders warm-start phases.
    #[serde(default)]
    pub warm_start_rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

#[cfg(test)]
mod tests;
