//! LP and MILP layer.
//!
//! The built-in backend is a dense revised simplex over bounded variables
//! (one logical column per row, composite phase I, Harris ratio test, Bland
//! fallback on stalling) and a best-bound branch-and-bound on top of it.

mod backend;
mod bnb;
mod simplex;

use std::time::Duration;

pub use backend::{backend_from_env, register_backend, Backend, BuiltinBackend};
pub use simplex::{Basis, VarStat};

/// Objective direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Row sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A linear (optionally mixed-integer) program.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
}

impl LpModel {
    pub fn new(sense: Sense) -> Self {
        LpModel {
            sense,
            objective: Vec::new(),
            rows: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            integer: Vec::new(),
        }
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64, integer: bool) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integer.push(integer);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    /// Objective value of `x` in the model's own sense.
    pub fn eval_objective(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest absolute violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let act: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.sense {
                RowSense::Ge => row.rhs - act,
                RowSense::Le => act - row.rhs,
                RowSense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    /// Like [`max_violation`](Self::max_violation), with each row residual
    /// divided by `1 + max(|rhs|, Σ|aⱼxⱼ|)`.
    pub fn scaled_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let (act, mag) = row.coeffs.iter().fold((0.0, 0.0), |(s, m), &(j, a)| (s + a * x[j], m + (a * x[j]).abs()));
            let v = match row.sense {
                RowSense::Ge => row.rhs - act,
                RowSense::Le => act - row.rhs,
                RowSense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(v / (1.0 + row.rhs.abs().max(mag)));
        }
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.integer.len() != n {
            return Err("column arrays have inconsistent lengths".into());
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(format!("row {i} has a non-finite rhs"));
            }
            for &(j, a) in &row.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(format!("row {i} references bad column {j} or coefficient {a}"));
                }
            }
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(format!("objective coefficient {j} is not finite"));
            }
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(format!("column {j} has empty bounds"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalError,
}

/// Result of an LP solve. Duals follow the convention that `≥` rows have
/// nonnegative duals when minimizing (signs flip for maximization).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
    NumericalError,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Best incumbent; empty when none was found.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Proven bound on the optimal value (lower bound when minimizing).
    pub bound: f64,
    pub nodes: usize,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.x.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MilpLimits {
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    pub rel_gap: f64,
    pub int_tol: f64,
}

impl Default for MilpLimits {
    fn default() -> Self {
        MilpLimits {
            node_limit: 200_000,
            time_limit: None,
            rel_gap: 1e-9,
            int_tol: 1e-6,
        }
    }
}

/// Solve an LP (integrality flags ignored) with the configured backend.
pub fn solve_lp(model: &LpModel) -> LpSolution {
    backend::current().solve_lp(model, None)
}

/// Solve an LP starting from a previous basis when one is supplied.
pub fn solve_lp_warm(model: &LpModel, basis: Option<&Basis>) -> LpSolution {
    backend::current().solve_lp(model, basis)
}

/// Branch-and-bound with best-bound node selection and most-fractional
/// branching (ties to the lowest column index).
pub fn solve_milp(model: &LpModel, limits: &MilpLimits) -> MilpSolution {
    bnb::branch_and_bound(model, limits, backend::current().as_ref())
}
