//! Brute-force ground truth on small instances.
//!
//! Everything here works on an explicit finite table of `(x, Q(x))` pairs, so
//! answers are exact up to the LP tolerance of the membership problems.

use num::{BigRational, Zero};

use crate::milp::{self, LpModel, LpStatus, RowSense, Sense};
use crate::model::{ReluCut, ScenarioTag, SmipInstance, VarKind};
use crate::recourse::{InnerMin, Recourse, ScenarioRecourse};
use crate::{Error, Result};

const MAX_TABLE: f64 = 1e6;

fn tol(q: f64) -> f64 {
    1e-9 * (1.0 + q.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecourseTable {
    pub scenario: ScenarioTag,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub upper: Vec<f64>,
}

impl RecourseTable {
    /// Table from explicit data; the box is the coordinatewise maximum.
    pub fn from_points(points: Vec<Vec<f64>>, values: Vec<f64>) -> Self {
        assert_eq!(points.len(), values.len());
        assert!(!points.is_empty(), "empty table");
        let n = points[0].len();
        let upper = (0..n)
            .map(|i| points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        RecourseTable {
            scenario: ScenarioTag::Scenario(0),
            points,
            values,
            upper,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.points
            .iter()
            .position(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-9))
    }

    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        self.index_of(x).map(|k| self.values[k])
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn anchor_value(&self, anchor: &[f64]) -> Result<f64> {
        self.value_at(anchor)
            .ok_or_else(|| Error::InvalidConfig(format!("anchor {anchor:?} is not a table point")))
    }
}

/// Probability-weighted sum of tables over the same point list.
pub fn expected_table(tables: &[RecourseTable], probs: &[f64]) -> RecourseTable {
    let mut out = tables[0].clone();
    out.scenario = ScenarioTag::Aggregate;
    for (k, v) in out.values.iter_mut().enumerate() {
        *v = tables.iter().zip(probs).map(|(t, p)| p * t.values[k]).sum();
    }
    out
}

impl Recourse for RecourseTable {
    fn dim(&self) -> usize {
        self.upper.len()
    }

    fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.value_at(x)
            .ok_or_else(|| Error::InvalidConfig(format!("{x:?} is not a table point")))
    }

    fn lagrangian(&self, anchor: &[f64], pi: &[f64]) -> Result<InnerMin> {
        Ok(self.scan(|x, q| q + pi.iter().zip(anchor).zip(x).map(|((p, a), v)| p * (a - v)).sum::<f64>()))
    }

    fn relu_lagrangian(&self, anchor: &[f64], pi_plus: &[f64], pi_minus: &[f64]) -> Result<InnerMin> {
        let cut = ReluCut {
            anchor: anchor.to_vec(),
            intercept: 0.0,
            pi_plus: pi_plus.to_vec(),
            pi_minus: pi_minus.to_vec(),
            scenario: self.scenario,
        };
        Ok(self.scan(|x, q| q - cut.eval(x)))
    }
}

impl RecourseTable {
    fn scan(&self, f: impl Fn(&[f64], f64) -> f64) -> InnerMin {
        let mut best = (f64::INFINITY, 0);
        for (k, (p, q)) in self.points.iter().zip(&self.values).enumerate() {
            let v = f(p, *q);
            if v < best.0 {
                best = (v, k);
            }
        }
        InnerMin {
            value: best.0,
            x: self.points[best.1].clone(),
            exact: true,
        }
    }
}

fn grid_axes(inst: &SmipInstance, step: Option<f64>) -> Result<Vec<Vec<f64>>> {
    let mut axes = Vec::with_capacity(inst.n());
    let mut count = 1.0;
    for i in 0..inst.n() {
        let b = inst.upper[i];
        let axis: Vec<f64> = match (inst.var_kinds[i], step) {
            (VarKind::Integer, _) => (0..=b as u64).map(|v| v as f64).collect(),
            (VarKind::Continuous, Some(h)) => {
                let k = (b / h).round() as u64;
                let mut a: Vec<f64> = (0..=k).map(|j| (j as f64 * h).min(b)).collect();
                a.dedup();
                a
            }
            (VarKind::Continuous, None) => {
                return Err(Error::UnsupportedByOracle("continuous first-stage variable".into()))
            }
        };
        count *= axis.len() as f64;
        axes.push(axis);
    }
    if count > MAX_TABLE {
        return Err(Error::UnsupportedByOracle(format!("{count} first-stage points")));
    }
    Ok(axes)
}

fn enumerate(inst: &SmipInstance, s: usize, axes: &[Vec<f64>]) -> Result<RecourseTable> {
    let r = ScenarioRecourse::new(inst, s);
    let n = axes.len();
    let mut idx = vec![0usize; n];
    let mut points = Vec::new();
    let mut values = Vec::new();
    loop {
        let x: Vec<f64> = (0..n).map(|i| axes[i][idx[i]]).collect();
        if inst.first_stage_feasible(&x, 1e-9) {
            values.push(r.value(&x)?);
            points.push(x);
        }
        let mut i = 0;
        while i < n {
            idx[i] += 1;
            if idx[i] < axes[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidInstance("no feasible first-stage grid point".into()));
    }
    Ok(RecourseTable {
        scenario: ScenarioTag::Scenario(s),
        points,
        values,
        upper: inst.upper.clone(),
    })
}

/// Exhaustive table of a pure-integer scenario (first coordinate varies fastest).
pub fn build_table(inst: &SmipInstance, s: usize) -> Result<RecourseTable> {
    enumerate(inst, s, &grid_axes(inst, None)?)
}

/// Table over a grid that samples continuous coordinates at spacing `step`.
/// Exact for recourse functions whose breakpoints lie on the grid.
pub fn build_grid_table(inst: &SmipInstance, s: usize, step: f64) -> Result<RecourseTable> {
    enumerate(inst, s, &grid_axes(inst, Some(step))?)
}

/// `min Σλ_k Q(x^k) : Σλ_k x^k = x, Σλ_k = 1, λ ≥ 0`.
pub fn convex_envelope_at(table: &RecourseTable, x: &[f64]) -> Result<f64> {
    let mut m = LpModel::new(Sense::Minimize);
    let lam: Vec<usize> = table.values.iter().map(|&q| m.add_var(q, 0.0, f64::INFINITY, false)).collect();
    m.add_row(lam.iter().map(|&j| (j, 1.0)).collect(), RowSense::Eq, 1.0);
    for (i, &xi) in x.iter().enumerate() {
        let row = lam.iter().zip(&table.points).map(|(&j, p)| (j, p[i])).collect();
        m.add_row(row, RowSense::Eq, xi);
    }
    let sol = milp::solve_lp(&m);
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        LpStatus::Infeasible => Err(Error::OutsideHull),
        s => Err(Error::Solver(format!("envelope LP: {s:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutCheck {
    pub valid: bool,
    /// `max(cut(x) − Q(x))` over the table; ≤ 0 for a valid cut.
    pub max_violation: f64,
}

pub fn is_cut_valid(cut: &ReluCut, table: &RecourseTable) -> CutCheck {
    let mut worst = f64::NEG_INFINITY;
    let mut valid = true;
    for (p, &q) in table.points.iter().zip(&table.values) {
        let v = cut.eval(p) - q;
        worst = worst.max(v);
        if v > tol(q) {
            valid = false;
        }
    }
    CutCheck {
        valid,
        max_violation: worst,
    }
}

/// Cut is tight at its anchor: intercept equals the table value there.
pub fn is_tight_at_anchor(cut: &ReluCut, table: &RecourseTable) -> bool {
    table
        .value_at(&cut.anchor)
        .is_some_and(|q| (q - cut.intercept).abs() <= 1e-7 * (1.0 + q.abs()))
}

/// `Q(x̂) ≤ Q(x) − Σπ⁺(x−x̂)⁺ − Σπ⁻(x−x̂)⁻` for every table x.
pub fn is_relu_dual_optimal(pi_plus: &[f64], pi_minus: &[f64], anchor: &[f64], table: &RecourseTable) -> bool {
    let Some(q) = table.value_at(anchor) else {
        return false;
    };
    let cut = ReluCut {
        anchor: anchor.to_vec(),
        intercept: q,
        pi_plus: pi_plus.to_vec(),
        pi_minus: pi_minus.to_vec(),
        scenario: table.scenario,
    };
    is_cut_valid(&cut, table).valid
}

/// `min_k Q(x^k) + πᵀ(x̂ − x^k)`.
pub fn lagrangian_dual_value(table: &RecourseTable, anchor: &[f64], pi: &[f64]) -> f64 {
    table.lagrangian(anchor, pi).expect("table scan cannot fail").value
}

fn lifted(cut: &ReluCut, x: &[f64]) -> Vec<f64> {
    let n = cut.dim();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        out.push((x[i] - cut.anchor[i]).max(0.0));
    }
    for i in 0..n {
        out.push((cut.anchor[i] - x[i]).max(0.0));
    }
    out
}

/// Rank of a set of rational vectors by exact elimination.
fn exact_rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank][c].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][c].is_zero() {
                let f = &rows[r][c] / &pivot;
                for k in c..cols {
                    let d = &f * &rows[rank][k];
                    rows[r][k] -= d;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite table data")
}

/// Number of affinely independent lifted points `(ω⁺, ω⁻, Q)` where the cut
/// holds with equality.
pub fn count_tight_affinely_independent(cut: &ReluCut, table: &RecourseTable) -> usize {
    let tight: Vec<Vec<BigRational>> = table
        .points
        .iter()
        .zip(&table.values)
        .filter(|(p, q)| (cut.eval(p) - **q).abs() <= tol(**q))
        .map(|(p, q)| {
            let mut v: Vec<BigRational> = lifted(cut, p).into_iter().map(rational).collect();
            v.push(rational(*q));
            v
        })
        .collect();
    if tight.is_empty() {
        return 0;
    }
    let base = tight[0].clone();
    let diffs = tight[1..]
        .iter()
        .map(|r| r.iter().zip(&base).map(|(a, b)| a - b).collect())
        .collect();
    exact_rank(diffs) + 1
}

/// Affine dimension of the lifted epigraph points (plus the θ ray), i.e. the
/// tight count a facet-defining cut must reach.
pub fn lifted_epigraph_dimension(cut: &ReluCut, table: &RecourseTable) -> usize {
    let pts: Vec<Vec<BigRational>> = table
        .points
        .iter()
        .zip(&table.values)
        .map(|(p, q)| {
            let mut v: Vec<BigRational> = lifted(cut, p).into_iter().map(rational).collect();
            v.push(rational(*q));
            v
        })
        .collect();
    let base = pts[0].clone();
    let mut diffs: Vec<Vec<BigRational>> = pts[1..]
        .iter()
        .map(|r| r.iter().zip(&base).map(|(a, b)| a - b).collect())
        .collect();
    let mut ray = vec![BigRational::zero(); base.len()];
    *ray.last_mut().unwrap() = BigRational::from_integer(1.into());
    diffs.push(ray);
    exact_rank(diffs)
}

pub fn is_facet_defining(cut: &ReluCut, table: &RecourseTable) -> bool {
    is_cut_valid(cut, table).valid && count_tight_affinely_independent(cut, table) == lifted_epigraph_dimension(cut, table)
}

/// Vertices `(ω⁺, ω⁻, z)` of `{0 ≤ ω⁺ ≤ u·z, 0 ≤ ω⁻ ≤ d(1−z), 0 ≤ z ≤ 1}`.
fn block_vertices(u: f64, d: f64) -> Vec<[f64; 3]> {
    // rows a·v ≤ r
    let rows: [([f64; 3], f64); 6] = [
        ([-1.0, 0.0, 0.0], 0.0),
        ([1.0, 0.0, -u], 0.0),
        ([0.0, -1.0, 0.0], 0.0),
        ([0.0, 1.0, d], d),
        ([0.0, 0.0, -1.0], 0.0),
        ([0.0, 0.0, 1.0], 1.0),
    ];
    let mut out: Vec<[f64; 3]> = Vec::new();
    for a in 0..6 {
        for b in a + 1..6 {
            for c in b + 1..6 {
                let m = [rows[a].0, rows[b].0, rows[c].0];
                let r = [rows[a].1, rows[b].1, rows[c].1];
                let Some(v) = solve3(m, r) else { continue };
                let feasible = rows
                    .iter()
                    .all(|(row, rhs)| row[0] * v[0] + row[1] * v[1] + row[2] * v[2] <= rhs + 1e-12);
                if feasible && !out.iter().any(|w| (0..3).all(|k| (w[k] - v[k]).abs() < 1e-12)) {
                    out.push(v);
                }
            }
        }
    }
    out
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *o = det(&mk) / d;
    }
    Some(out)
}

/// Checks that relaxing `z ∈ {0,1}` to `[0,1]` in the lifted representation of
/// `cut` gives exactly `conv(S1)`, where S1 is the set of `(x, θ)` with x in
/// the integer/continuous box and θ above the cut.
pub fn verify_hull_equality(cut: &ReluCut, upper: &[f64], kinds: &[VarKind]) -> Result<bool> {
    let n = cut.dim();
    if n > 3 {
        return Err(Error::UnsupportedByOracle("hull check needs n <= 3".into()));
    }
    for i in 0..n {
        if cut.anchor[i] < -1e-12 || cut.anchor[i] > upper[i] + 1e-12 {
            return Err(Error::InvalidConfig("anchor outside bounds".into()));
        }
        if kinds[i] == VarKind::Integer && upper[i] > 4.0 {
            return Err(Error::UnsupportedByOracle("integer bound above 4".into()));
        }
    }
    // S1 generators: grid for integer coordinates, breakpoints for continuous ones
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|i| match kinds[i] {
            VarKind::Integer => (0..=upper[i] as u32).map(f64::from).collect(),
            VarKind::Continuous => {
                let mut a = vec![0.0, cut.anchor[i], upper[i]];
                a.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
                a
            }
        })
        .collect();
    let gens = product(&axes);
    // converse: each generator lifts into the relaxation with θ = cut(x)
    for x in &gens {
        for i in 0..n {
            let (wp, wm) = ((x[i] - cut.anchor[i]).max(0.0), (cut.anchor[i] - x[i]).max(0.0));
            let z = if wp > 0.0 { 1.0 } else { 0.0 };
            if wp > (upper[i] - cut.anchor[i]) * z + 1e-9 || wm > cut.anchor[i] * (1.0 - z) + 1e-9 {
                return Ok(false);
            }
        }
    }
    let per: Vec<Vec<[f64; 3]>> = (0..n)
        .map(|i| block_vertices(upper[i] - cut.anchor[i], cut.anchor[i]))
        .collect();
    let mut idx = vec![0usize; n];
    loop {
        let mut x = vec![0.0; n];
        let mut theta = cut.intercept;
        for i in 0..n {
            let v = per[i][idx[i]];
            x[i] = cut.anchor[i] + v[0] - v[1];
            theta += cut.pi_plus[i] * v[0] + cut.pi_minus[i] * v[1];
        }
        if !in_upper_hull(&gens, cut, &x, theta)? {
            log::debug!("relaxation vertex x={x:?}, θ={theta} is outside conv(S1)");
            return Ok(false);
        }
        let mut i = 0;
        while i < n {
            idx[i] += 1;
            if idx[i] < per[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    Ok(true)
}

fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Is `(x, θ)` in `conv{(g, cut(g))} + {0} × R₊`?
fn in_upper_hull(gens: &[Vec<f64>], cut: &ReluCut, x: &[f64], theta: f64) -> Result<bool> {
    let vals: Vec<f64> = gens.iter().map(|g| cut.eval(g)).collect();
    let table = RecourseTable::from_points(gens.to_vec(), vals);
    match convex_envelope_at(&table, x) {
        Ok(v) => Ok(v <= theta + 1e-7 * (1.0 + theta.abs())),
        Err(Error::OutsideHull) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Description of the ReLU dual-optimal set at an anchor: per-coordinate upper
/// bounds from single-coordinate moves, plus every remaining half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBox {
    pub upper_plus: Vec<f64>,
    pub upper_minus: Vec<f64>,
    /// Rows `Σ π⁺ω⁺ + Σ π⁻ω⁻ ≤ rhs` not implied by the box.
    pub halfspaces: Vec<(Vec<f64>, Vec<f64>, f64)>,
}

impl DualBox {
    pub fn is_box(&self) -> bool {
        self.halfspaces.is_empty()
            && self.upper_plus.iter().chain(&self.upper_minus).all(|v| v.is_finite())
    }

    pub fn contains(&self, pi_plus: &[f64], pi_minus: &[f64]) -> bool {
        let t = 1e-9;
        pi_plus.iter().zip(&self.upper_plus).all(|(p, u)| *p <= u + t)
            && pi_minus.iter().zip(&self.upper_minus).all(|(p, u)| *p <= u + t)
            && self.halfspaces.iter().all(|(a, b, r)| {
                let lhs: f64 = a.iter().zip(pi_plus).map(|(x, y)| x * y).sum::<f64>()
                    + b.iter().zip(pi_minus).map(|(x, y)| x * y).sum::<f64>();
                lhs <= r + t * (1.0 + r.abs())
            })
    }
}

pub fn dual_region(table: &RecourseTable, anchor: &[f64]) -> Result<DualBox> {
    let q0 = table.anchor_value(anchor)?;
    let n = anchor.len();
    let mut up = vec![f64::INFINITY; n];
    let mut um = vec![f64::INFINITY; n];
    let mut multi = Vec::new();
    for (p, &q) in table.points.iter().zip(&table.values) {
        let wp: Vec<f64> = (0..n).map(|i| (p[i] - anchor[i]).max(0.0)).collect();
        let wm: Vec<f64> = (0..n).map(|i| (anchor[i] - p[i]).max(0.0)).collect();
        let rhs = q - q0;
        let support: Vec<(bool, usize)> = (0..n)
            .flat_map(|i| [(true, i), (false, i)])
            .filter(|&(plus, i)| if plus { wp[i] > 0.0 } else { wm[i] > 0.0 })
            .collect();
        match support.as_slice() {
            [] => {}
            [(true, i)] => up[*i] = up[*i].min(rhs / wp[*i]),
            [(false, i)] => um[*i] = um[*i].min(rhs / wm[*i]),
            _ => multi.push((wp, wm, rhs)),
        }
    }
    let halfspaces = multi
        .into_iter()
        .filter(|(a, b, r)| {
            let worst: f64 = a.iter().zip(&up).map(|(x, u)| if *x > 0.0 { x * u } else { 0.0 }).sum::<f64>()
                + b.iter().zip(&um).map(|(x, u)| if *x > 0.0 { x * u } else { 0.0 }).sum::<f64>();
            !(worst <= r + 1e-12 * (1.0 + r.abs()))
        })
        .collect();
    Ok(DualBox {
        upper_plus: up,
        upper_minus: um,
        halfspaces,
    })
}

/// Smallest nonzero ℓ1 distance from `anchor` to a table point (None when all coincide).
pub fn min_l1_distance(points: &[Vec<f64>], anchor: &[f64]) -> Option<f64> {
    points
        .iter()
        .map(|p| p.iter().zip(anchor).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .filter(|d| *d > 1e-12)
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))))
}

/// `(Q(x̂) − min Q) / d`: the closed-form reverse-norm slope at an anchor.
pub fn closed_form_slope(table: &RecourseTable, anchor: &[f64]) -> Result<f64> {
    let q = table.anchor_value(anchor)?;
    Ok(match min_l1_distance(&table.points, anchor) {
        Some(d) => (q - table.min()) / d,
        None => 1.0,
    })
}

#[cfg(test)]
mod tests;
