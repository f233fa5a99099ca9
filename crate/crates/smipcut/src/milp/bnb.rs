use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::backend::Backend;
use super::simplex::Basis;
use super::{LpModel, LpStatus, MilpLimits, MilpSolution, MilpStatus, Sense};

struct Node {
    bound: f64,
    id: u64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn gap_closed(incumbent: f64, bound: f64, rel_gap: f64) -> bool {
    incumbent - bound <= rel_gap * incumbent.abs().max(1.0)
}

pub(crate) fn branch_and_bound(model: &LpModel, limits: &MilpLimits, lp: &dyn Backend) -> MilpSolution {
    let sign = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let out = |status, x: Vec<f64>, obj: f64, bound: f64, nodes| MilpSolution {
        status,
        x,
        objective: sign * obj,
        bound: sign * bound,
        nodes,
    };
    for j in 0..model.num_vars() {
        if model.integer[j] && !(model.lower[j].is_finite() && model.upper[j].is_finite()) {
            log::error!("integer column {j} is unbounded");
            return out(MilpStatus::NumericalError, Vec::new(), f64::NAN, f64::NAN, 0);
        }
    }
    let start = Instant::now();
    let mut work = model.clone();
    work.sense = Sense::Minimize;
    work.objective.iter_mut().for_each(|c| *c *= sign);
    for j in 0..work.num_vars() {
        if work.integer[j] {
            work.lower[j] = work.lower[j].ceil();
            work.upper[j] = work.upper[j].floor();
            if work.lower[j] > work.upper[j] {
                return out(MilpStatus::Infeasible, Vec::new(), f64::INFINITY, f64::INFINITY, 0);
            }
        }
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: next_id,
        lower: work.lower.clone(),
        upper: work.upper.clone(),
        basis: None,
    });
    next_id += 1;

    let mut incumbent: Option<Vec<f64>> = None;
    let mut inc_obj = f64::INFINITY;
    let mut nodes = 0usize;
    let mut root_bound = f64::NEG_INFINITY;

    while let Some(node) = heap.pop() {
        if let Some(x) = incumbent.as_ref().filter(|_| gap_closed(inc_obj, node.bound, limits.rel_gap)) {
            return out(MilpStatus::Optimal, x.clone(), inc_obj, node.bound.min(inc_obj), nodes);
        }
        let over_time = limits.time_limit.is_some_and(|t| start.elapsed() > t);
        if nodes >= limits.node_limit || over_time {
            let bound = node.bound.min(inc_obj);
            let x = incumbent.unwrap_or_default();
            return out(MilpStatus::Limit, x, inc_obj, bound, nodes);
        }
        nodes += 1;
        work.lower.clone_from(&node.lower);
        work.upper.clone_from(&node.upper);
        let mut sol = lp.solve_lp(&work, node.basis.as_ref());
        if sol.status == LpStatus::NumericalError && node.basis.is_some() {
            sol = lp.solve_lp(&work, None);
        }
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return out(MilpStatus::Unbounded, Vec::new(), f64::NEG_INFINITY, f64::NEG_INFINITY, nodes);
            }
            LpStatus::NumericalError => {
                log::warn!("LP failure at branch-and-bound node {}", node.id);
                return out(MilpStatus::NumericalError, Vec::new(), f64::NAN, f64::NAN, nodes);
            }
            LpStatus::Optimal => {}
        }
        if node.id == 0 {
            root_bound = sol.objective;
        }
        let obj = sol.objective;
        if obj >= inc_obj - limits.rel_gap * inc_obj.abs().max(1.0) {
            continue;
        }
        // most fractional integer column, lowest index on ties
        let mut branch: Option<(usize, f64)> = None;
        let mut best_frac = 0.0;
        for j in 0..work.num_vars() {
            if !work.integer[j] {
                continue;
            }
            let v = sol.x[j];
            let f = v - v.floor();
            let dist = f.min(1.0 - f);
            if dist > limits.int_tol && dist > best_frac + 1e-12 {
                best_frac = dist;
                branch = Some((j, v));
            }
        }
        match branch {
            None => {
                let mut x = sol.x.clone();
                for j in 0..x.len() {
                    if work.integer[j] {
                        x[j] = x[j].round();
                    }
                }
                let val = work.eval_objective(&x);
                if val < inc_obj {
                    debug_assert!(val >= root_bound - 1e-6 * root_bound.abs().max(1.0));
                    inc_obj = val;
                    incumbent = Some(x);
                }
            }
            Some((j, v)) => {
                let mut down_up = node.upper.clone();
                down_up[j] = v.floor();
                heap.push(Node {
                    bound: obj,
                    id: next_id,
                    lower: node.lower.clone(),
                    upper: down_up,
                    basis: sol.basis.clone(),
                });
                next_id += 1;
                let mut up_lo = node.lower;
                up_lo[j] = v.ceil();
                heap.push(Node {
                    bound: obj,
                    id: next_id,
                    lower: up_lo,
                    upper: node.upper,
                    basis: sol.basis,
                });
                next_id += 1;
            }
        }
    }
    match incumbent {
        Some(x) => out(MilpStatus::Optimal, x, inc_obj, inc_obj, nodes),
        None => out(MilpStatus::Infeasible, Vec::new(), f64::INFINITY, f64::INFINITY, nodes),
    }
}
