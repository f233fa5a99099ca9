//! Master-problem embedding of cuts and binarization of integer first stages.

use serde::Serialize;

use crate::milp::{self, LpModel, LpSolution, MilpLimits, MilpSolution, RowSense, Sense};
use crate::model::{LinearCut, ReluCut, Scenario, SmipInstance, SparseMatrix, VarKind};
use crate::oracle::{self, RecourseTable};
use crate::{Error, Result};

const ANCHOR_TOL: f64 = 1e-9;

/// Lifting variables for one anchor. Coordinates at a bound need no
/// lifting and have `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCutBlock {
    pub anchor: Vec<f64>,
    /// `(ω⁺, ω⁻, z)` column indices per coordinate.
    pub columns: Vec<Option<(usize, usize, usize)>>,
    /// Linking and bound rows owned by the block.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbedSummary {
    /// Index into [`MasterProblem::blocks`] when the cut needed a lifting.
    pub block: Option<usize>,
    pub new_columns: usize,
    pub new_rows: usize,
    /// The θ row.
    pub row: usize,
}

/// `min cᵀx + Σ w_k θ_k` over the first stage plus embedded cuts.
#[derive(Debug, Clone)]
pub struct MasterProblem {
    pub model: LpModel,
    pub x: Vec<usize>,
    pub theta: Vec<usize>,
    pub upper: Vec<f64>,
    blocks: Vec<EmbeddedCutBlock>,
}

impl MasterProblem {
    /// Box-only master; θ_k has weight `weights[k]` and lower bound `lower[k]`.
    pub fn with_box(upper: &[f64], kinds: &[VarKind], weights: &[f64], lower: &[f64]) -> Self {
        let mut model = LpModel::new(Sense::Minimize);
        let x = upper
            .iter()
            .zip(kinds)
            .map(|(&b, k)| model.add_var(0.0, 0.0, b, *k == VarKind::Integer))
            .collect();
        let theta = weights
            .iter()
            .zip(lower)
            .map(|(&w, &l)| model.add_var(w, l, f64::INFINITY, false))
            .collect();
        MasterProblem {
            model,
            x,
            theta,
            upper: upper.to_vec(),
            blocks: Vec::new(),
        }
    }

    pub fn new(inst: &SmipInstance, weights: &[f64], lower: &[f64]) -> Self {
        let mut m = Self::with_box(&inst.upper, &inst.var_kinds, weights, lower);
        for (i, &j) in m.x.iter().enumerate() {
            m.model.objective[j] = inst.c[i];
        }
        for (r, row) in inst.a.row_lists().into_iter().enumerate() {
            let coeffs = row.into_iter().map(|(j, v)| (m.x[j], v)).collect();
            m.model.add_row(coeffs, RowSense::Ge, inst.b[r]);
        }
        m
    }

    pub fn blocks(&self) -> &[EmbeddedCutBlock] {
        &self.blocks
    }

    fn at_lower(&self, _i: usize, v: f64) -> bool {
        v.abs() <= ANCHOR_TOL
    }

    fn at_upper(&self, i: usize, v: f64) -> bool {
        (v - self.upper[i]).abs() <= ANCHOR_TOL
    }

    fn find_block(&self, anchor: &[f64]) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.anchor.iter().zip(anchor).all(|(a, c)| (a - c).abs() <= ANCHOR_TOL))
    }

    fn add_block(&mut self, anchor: &[f64]) -> usize {
        let mut columns = Vec::with_capacity(anchor.len());
        let mut rows = Vec::new();
        for (i, &a) in anchor.iter().enumerate() {
            if self.at_lower(i, a) || self.at_upper(i, a) {
                columns.push(None);
                continue;
            }
            let room = self.upper[i] - a;
            let m = &mut self.model;
            let wp = m.add_var(0.0, 0.0, room, false);
            let wm = m.add_var(0.0, 0.0, a, false);
            let z = m.add_var(0.0, 0.0, 1.0, true);
            rows.push(m.add_row(vec![(wp, 1.0), (wm, -1.0), (self.x[i], -1.0)], RowSense::Eq, -a));
            rows.push(m.add_row(vec![(wp, 1.0), (z, -room)], RowSense::Le, 0.0));
            rows.push(m.add_row(vec![(wm, 1.0), (z, a)], RowSense::Le, a));
            columns.push(Some((wp, wm, z)));
        }
        self.blocks.push(EmbeddedCutBlock {
            anchor: anchor.to_vec(),
            columns,
            rows,
        });
        self.blocks.len() - 1
    }

    /// Adds `θ_k ≥ cut(x)`. Anchors with every coordinate at a bound give a
    /// single linear row; otherwise the anchor's lifting block is created or
    /// reused.
    pub fn embed_cut(&mut self, cut: &ReluCut, theta: usize) -> Result<EmbedSummary> {
        let n = self.x.len();
        if cut.dim() != n || cut.pi_plus.len() != n || cut.pi_minus.len() != n {
            return Err(Error::Dimension {
                what: "embedded cut",
                expected: n,
                got: cut.dim(),
            });
        }
        if theta >= self.theta.len() {
            return Err(Error::InvalidConfig(format!("no θ column {theta}")));
        }
        for (i, &a) in cut.anchor.iter().enumerate() {
            if !(a >= -ANCHOR_TOL && a <= self.upper[i] + ANCHOR_TOL) {
                return Err(Error::InvalidInstance(format!("cut anchor coordinate {i} = {a} outside [0, {}]", self.upper[i])));
            }
        }
        let cols0 = self.model.num_vars();
        let rows0 = self.model.num_rows();
        let needs_block = (0..n).any(|i| !self.at_lower(i, cut.anchor[i]) && !self.at_upper(i, cut.anchor[i]));
        let block = if needs_block {
            Some(self.find_block(&cut.anchor).unwrap_or_else(|| self.add_block(&cut.anchor)))
        } else {
            None
        };

        let mut row = vec![(self.theta[theta], 1.0)];
        let mut rhs = cut.intercept;
        for i in 0..n {
            let a = cut.anchor[i];
            if self.upper[i] <= ANCHOR_TOL {
                continue;
            }
            if self.at_lower(i, a) {
                row.push((self.x[i], -cut.pi_plus[i]));
            } else if self.at_upper(i, a) {
                // π⁻ (B − x)
                row.push((self.x[i], cut.pi_minus[i]));
                rhs += cut.pi_minus[i] * self.upper[i];
            } else {
                let (wp, wm, _) = self.blocks[block.unwrap()].columns[i].expect("interior coordinate has a lifting");
                row.push((wp, -cut.pi_plus[i]));
                row.push((wm, -cut.pi_minus[i]));
            }
        }
        row.retain(|&(_, v)| v != 0.0);
        let r = self.model.add_row(row, RowSense::Ge, rhs);
        Ok(EmbedSummary {
            block,
            new_columns: self.model.num_vars() - cols0,
            new_rows: self.model.num_rows() - rows0,
            row: r,
        })
    }

    /// Adds `θ_k ≥ rhs + coeffsᵀx`.
    pub fn add_linear_cut(&mut self, cut: &LinearCut, theta: usize) -> usize {
        let mut row = vec![(self.theta[theta], 1.0)];
        row.extend(cut.coeffs.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (self.x[i], -v)));
        self.model.add_row(row, RowSense::Ge, cut.rhs)
    }

    pub fn solve(&self, limits: &MilpLimits) -> MilpSolution {
        milp::solve_milp(&self.model, limits)
    }

    pub fn solve_relaxation(&self) -> LpSolution {
        milp::solve_lp(&self.model)
    }

    pub fn x_of(&self, sol: &[f64]) -> Vec<f64> {
        self.x.iter().map(|&j| sol[j]).collect()
    }

    pub fn theta_of(&self, sol: &[f64]) -> Vec<f64> {
        self.theta.iter().map(|&j| sol[j]).collect()
    }
}

/// Binary expansion `xᵢ = Σⱼ 2ʲ δʲᵢ` of an integer first stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Binarization {
    /// `Nᵢ = ⌊log₂ Bᵢ⌋` (0 when `Bᵢ ≤ 1`).
    pub levels: Vec<usize>,
    /// Indices of coordinate i's δ columns in the binarized instance.
    pub columns: Vec<Vec<usize>>,
    pub weights: Vec<Vec<f64>>,
    /// `Jᵢ`: the set bits of `Bᵢ`.
    pub support: Vec<Vec<usize>>,
    /// `(i, r, Jᵢᵣ)` for each hull row `δʳ + Σ_{τ∈Jᵢᵣ} δ^τ ≤ |Jᵢᵣ|`.
    pub hull_rows: Vec<(usize, usize, Vec<usize>)>,
    /// Objective constant dropped by the original normalization.
    pub offset: f64,
}

impl Binarization {
    pub fn num_binaries(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// δ → x (normalized coordinates).
    pub fn decode(&self, delta: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .zip(&self.weights)
            .map(|(cols, w)| cols.iter().zip(w).map(|(&j, w)| w * delta[j]).sum())
            .collect()
    }

    /// x → δ for integer x within the bounds.
    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        let mut delta = vec![0.0; self.num_binaries()];
        for (i, cols) in self.columns.iter().enumerate() {
            let v = x[i].round() as u64;
            for (j, &c) in cols.iter().enumerate() {
                delta[c] = ((v >> j) & 1) as f64;
            }
        }
        delta
    }
}

fn bit_levels(b: u64) -> usize {
    if b <= 1 {
        0
    } else {
        63 - b.leading_zeros() as usize
    }
}

/// Replaces each integer `xᵢ ∈ [0, Bᵢ]` by binaries with the knapsack row
/// `Σ 2ʲδʲ ≤ Bᵢ` and the hull rows that make its relaxation exact.
pub fn binarize_instance(inst: &SmipInstance) -> Result<(SmipInstance, Binarization)> {
    if !inst.all_integer() {
        return Err(Error::InvalidInstance("binarization needs an all-integer first stage".into()));
    }
    let n = inst.n();
    let mut levels = Vec::with_capacity(n);
    let mut columns = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut support = Vec::with_capacity(n);
    let mut hull_rows = Vec::new();
    let mut next = 0;
    for i in 0..n {
        let b = inst.upper[i].round() as u64;
        let nl = bit_levels(b);
        levels.push(nl);
        columns.push((next..next + nl + 1).collect::<Vec<usize>>());
        weights.push((0..=nl).map(|j| (1u64 << j) as f64).collect::<Vec<f64>>());
        next += nl + 1;
        let set: Vec<usize> = (0..=nl).filter(|j| (b >> j) & 1 == 1).collect();
        for r in (0..=nl).filter(|r| !set.contains(r)) {
            hull_rows.push((i, r, set.iter().copied().filter(|&l| l > r).collect::<Vec<usize>>()));
        }
        support.push(set);
    }
    let nb = next;
    let expand = |m: &SparseMatrix, extra_rows: usize| {
        let mut out = SparseMatrix::new(m.rows + extra_rows, nb);
        for &(r, c, v) in &m.triplets {
            for (&j, w) in columns[c].iter().zip(&weights[c]) {
                out.push(r, j, v * w);
            }
        }
        out
    };

    let mut c = vec![0.0; nb];
    for i in 0..n {
        for (&j, w) in columns[i].iter().zip(&weights[i]) {
            c[j] = inst.c[i] * w;
        }
    }
    let mut a = expand(&inst.a, n + hull_rows.len());
    let mut b = inst.b.clone();
    for i in 0..n {
        let r = inst.a.rows + i;
        for (&j, w) in columns[i].iter().zip(&weights[i]) {
            a.push(r, j, -w);
        }
        b.push(-inst.upper[i]);
    }
    for (k, (i, r, jir)) in hull_rows.iter().enumerate() {
        let row = inst.a.rows + n + k;
        a.push(row, columns[*i][*r], -1.0);
        for &t in jir {
            a.push(row, columns[*i][t], -1.0);
        }
        b.push(-(jir.len() as f64));
    }
    let scenarios: Vec<Scenario> = inst
        .scenarios
        .iter()
        .map(|s| Scenario {
            t: expand(&s.t, 0),
            ..s.clone()
        })
        .collect();
    let bounds: Vec<(f64, f64)> = (0..nb).map(|_| (0.0, 1.0)).collect();
    let out = SmipInstance::new(c, a, b, vec![VarKind::Integer; nb], bounds, scenarios)?.with_lower_bound(inst.lower_bound);
    Ok((
        out,
        Binarization {
            levels,
            columns,
            weights,
            support,
            hull_rows,
            offset: inst.objective_offset(),
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceViolation {
    pub x: Vec<f64>,
    /// Lower envelope of the Λ-shaped cut's hull at x.
    pub lambda_hull: f64,
    /// Value of the binarized L-shaped cut at x.
    pub binarized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    /// Whether conv(E_Λ) ⊇ conv(E_L) held at every integer point.
    pub holds: bool,
    pub checked: usize,
    pub violations: Vec<DominanceViolation>,
    /// Set when some `Bᵢ < 3`, where dominance is not expected.
    pub note: Option<String>,
}

fn grid(upper: &[f64]) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![]];
    for &b in upper {
        let mut nxt = Vec::new();
        for p in &pts {
            for v in 0..=(b.round() as i64) {
                let mut q: Vec<f64> = p.clone();
                q.push(v as f64);
                nxt.push(q);
            }
        }
        pts = nxt;
    }
    pts
}

/// Compares the hull of the Λ-shaped cut `θ ≥ Q − (Q−L)‖x − x̂‖₁` over the
/// box with the hull of the binarized L-shaped cut over the integer points.
///
/// Both hulls are epigraphs; the Λ side is the convex envelope over the box
/// corners (the cut is concave), the binarized side is generated by the
/// integer points, so comparing at integer points decides inclusion.
pub fn verify_binarization_dominance(table: &RecourseTable, anchor: &[f64], lower: f64) -> Result<DominanceReport> {
    let upper = &table.upper;
    if upper.len() > 4 {
        return Err(Error::UnsupportedByOracle("dominance check limited to n <= 4".into()));
    }
    let q = table.value_at(anchor).ok_or_else(|| Error::InvalidConfig("anchor is not a table point".into()))?;
    let gap = q - lower;
    let lam = |x: &[f64]| q - gap * x.iter().zip(anchor).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let bits = |v: f64| v.round() as u64;
    let bin = |x: &[f64]| {
        let d: u32 = x.iter().zip(anchor).map(|(a, b)| (bits(*a) ^ bits(*b)).count_ones()).sum();
        q - gap * d as f64
    };
    let corners: Vec<Vec<f64>> = (0..1u32 << upper.len())
        .map(|m| (0..upper.len()).map(|i| if m >> i & 1 == 1 { upper[i] } else { 0.0 }).collect())
        .collect();
    let corner_vals: Vec<f64> = corners.iter().map(|c| lam(c)).collect();
    let hull = RecourseTable::from_points(corners, corner_vals);
    let mut violations = Vec::new();
    let pts = grid(upper);
    for x in &pts {
        let h = oracle::convex_envelope_at(&hull, x)?;
        let v = bin(x);
        if h > v + 1e-9 {
            violations.push(DominanceViolation {
                x: x.clone(),
                lambda_hull: h,
                binarized: v,
            });
        }
    }
    let note = upper.iter().any(|&b| b < 3.0).then(|| "some B_i < 3: dominance not expected".to_string());
    Ok(DominanceReport {
        holds: violations.is_empty(),
        checked: pts.len(),
        violations,
        note,
    })
}
