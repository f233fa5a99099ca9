//! Dense revised simplex over bounded variables.
//!
//! Every row `i` gets a logical variable `s_i` with `a_i x - s_i = 0`; the
//! row sense becomes a bound on `s_i`. The all-logical basis is then always
//! available, so no artificials are needed: phase I minimizes the sum of
//! bound violations of basic variables.

use super::{LpModel, LpSolution, LpStatus, RowSense, Sense};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStat {
    Basic,
    Lower,
    Upper,
    Free,
}

/// Status of every structural column followed by every logical (row) column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<VarStat>,
}

struct Tableau<'a> {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    stat: Vec<VarStat>,
    binv: Vec<f64>,
    model: &'a LpModel,
}

enum Step {
    Optimal,
    Infeasible,
    Unbounded,
    Continue { degenerate: bool },
}

pub(crate) fn solve(model: &LpModel, warm: Option<&Basis>) -> LpSolution {
    if let Err(msg) = model.check() {
        log::error!("malformed LP: {msg}");
        return failure(model, LpStatus::NumericalError, 0);
    }
    if let Some(b) = warm {
        if b.status.len() == model.num_vars() + model.num_rows() {
            let sol = Tableau::new(model, Some(b)).and_then(|mut t| t.run());
            if let Some(sol) = sol {
                if sol.status != LpStatus::NumericalError {
                    return sol;
                }
            }
        }
    }
    Tableau::new(model, None)
        .and_then(|mut t| t.run())
        .unwrap_or_else(|| failure(model, LpStatus::NumericalError, 0))
}

fn failure(model: &LpModel, status: LpStatus, iterations: usize) -> LpSolution {
    LpSolution {
        status,
        x: vec![0.0; model.num_vars()],
        objective: f64::NAN,
        duals: vec![0.0; model.num_rows()],
        basis: None,
        iterations,
    }
}

impl<'a> Tableau<'a> {
    fn new(model: &'a LpModel, warm: Option<&Basis>) -> Option<Self> {
        let m = model.num_rows();
        let n = model.num_vars();
        let mut cols = vec![Vec::new(); n];
        for (i, row) in model.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if a != 0.0 {
                    cols[j].push((i, a));
                }
            }
        }
        // merge duplicate entries within a column
        for col in &mut cols {
            col.sort_by_key(|e| e.0);
            col.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        let mut lo = model.lower.clone();
        let mut up = model.upper.clone();
        for row in &model.rows {
            let (l, u) = match row.sense {
                RowSense::Ge => (row.rhs, f64::INFINITY),
                RowSense::Le => (f64::NEG_INFINITY, row.rhs),
                RowSense::Eq => (row.rhs, row.rhs),
            };
            lo.push(l);
            up.push(u);
        }
        let sign = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut cost: Vec<f64> = model.objective.iter().map(|c| sign * c).collect();
        cost.resize(n + m, 0.0);

        let mut stat = Vec::with_capacity(n + m);
        let mut head = Vec::with_capacity(m);
        match warm {
            Some(b) => {
                for (j, &s) in b.status.iter().enumerate() {
                    if s == VarStat::Basic {
                        head.push(j);
                    }
                    stat.push(s);
                }
                if head.len() != m {
                    return None;
                }
            }
            None => {
                stat.resize(n + m, VarStat::Lower);
                for j in n..n + m {
                    stat[j] = VarStat::Basic;
                    head.push(j);
                }
            }
        }
        let mut t = Tableau {
            m,
            n,
            cols,
            lo,
            up,
            cost,
            x: vec![0.0; n + m],
            head,
            stat,
            binv: vec![0.0; m * m],
            model,
        };
        for j in 0..n + m {
            if t.stat[j] != VarStat::Basic {
                t.stat[j] = t.nonbasic_status(j, t.stat[j]);
                t.x[j] = t.nonbasic_value(j);
            }
        }
        if !t.refactor() {
            return None;
        }
        t.recompute_basic();
        Some(t)
    }

    fn nonbasic_status(&self, j: usize, wanted: VarStat) -> VarStat {
        let lf = self.lo[j].is_finite();
        let uf = self.up[j].is_finite();
        match wanted {
            VarStat::Upper if uf => VarStat::Upper,
            VarStat::Lower if lf => VarStat::Lower,
            _ if lf => VarStat::Lower,
            _ if uf => VarStat::Upper,
            _ => VarStat::Free,
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.stat[j] {
            VarStat::Lower => self.lo[j],
            VarStat::Upper => self.up[j],
            _ => 0.0,
        }
    }

    /// Dense column of variable `j` in the full `[A | -I]` matrix.
    fn column_into(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                out[i] = a;
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    /// Gauss-Jordan inversion of the basis matrix.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        if m == 0 {
            return true;
        }
        let mut a = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (r, &j) in self.head.iter().enumerate() {
            self.column_into(j, &mut col);
            for i in 0..m {
                a[i * m + r] = col[i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut p = c;
            let mut best = a[c * m + c].abs();
            for r in c + 1..m {
                let v = a[r * m + c].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < 1e-11 {
                return false;
            }
            if p != c {
                for k in 0..m {
                    a.swap(c * m + k, p * m + k);
                    inv.swap(c * m + k, p * m + k);
                }
            }
            let piv = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[c * m + k];
                            inv[r * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        true
    }

    /// x_B = B^{-1}(-N x_N).
    fn recompute_basic(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + m {
            if self.stat[j] == VarStat::Basic {
                continue;
            }
            let v = self.x[j];
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * v;
                }
            } else {
                rhs[j - self.n] += v;
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(b, h)| b * h).sum();
            self.x[self.head[r]] = v;
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lo[j] - PRIMAL_TOL {
            -1.0
        } else if v > self.up[j] + PRIMAL_TOL {
            1.0
        } else {
            0.0
        }
    }

    fn run(&mut self) -> Option<LpSolution> {
        let m = self.m;
        let total = self.n + m;
        let max_iter = 200 * (total + 10);
        let mut since_refactor = 0;
        let mut degenerate_run = 0;
        let mut bland = false;
        let mut iterations = 0;
        let mut recheck = 0;
        loop {
            if iterations > max_iter {
                return Some(failure(self.model, LpStatus::NumericalError, iterations));
            }
            if since_refactor >= REFACTOR_EVERY {
                if !self.refactor() {
                    return None;
                }
                self.recompute_basic();
                since_refactor = 0;
            }
            match self.iterate(bland) {
                Step::Continue { degenerate } => {
                    iterations += 1;
                    since_refactor += 1;
                    if degenerate {
                        degenerate_run += 1;
                        if degenerate_run > 2 * total {
                            bland = true;
                        }
                    } else {
                        degenerate_run = 0;
                    }
                }
                Step::Optimal => {
                    // confirm with a fresh factorization before accepting
                    if !self.refactor() {
                        return None;
                    }
                    self.recompute_basic();
                    since_refactor = 0;
                    let clean = (0..m).all(|r| self.infeasibility(self.head[r]) == 0.0);
                    if clean || recheck >= 3 {
                        return Some(self.finish(iterations, clean));
                    }
                    recheck += 1;
                }
                Step::Infeasible => {
                    if recheck == 0 {
                        recheck += 1;
                        if !self.refactor() {
                            return None;
                        }
                        self.recompute_basic();
                        continue;
                    }
                    return Some(failure(self.model, LpStatus::Infeasible, iterations));
                }
                Step::Unbounded => {
                    return Some(failure(self.model, LpStatus::Unbounded, iterations));
                }
            }
        }
    }

    fn iterate(&mut self, bland: bool) -> Step {
        let m = self.m;
        let total = self.n + m;
        let mut cb = vec![0.0; m];
        let mut phase1 = false;
        for r in 0..m {
            let f = self.infeasibility(self.head[r]);
            if f != 0.0 {
                phase1 = true;
            }
            cb[r] = f;
        }
        if !phase1 {
            for r in 0..m {
                cb[r] = self.cost[self.head[r]];
            }
        }
        // y = c_B^T B^{-1}
        let mut y = vec![0.0; m];
        for r in 0..m {
            let c = cb[r];
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for i in 0..m {
                    y[i] += c * row[i];
                }
            }
        }
        // pricing
        let mut enter: Option<(usize, f64)> = None;
        let mut best = 0.0;
        for j in 0..total {
            let s = self.stat[j];
            if s == VarStat::Basic {
                continue;
            }
            let cj = if phase1 { 0.0 } else { self.cost[j] };
            let d = if j < self.n {
                cj - self.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>()
            } else {
                cj + y[j - self.n]
            };
            let dir = match s {
                VarStat::Lower if d < -DUAL_TOL && self.up[j] > self.lo[j] => 1.0,
                VarStat::Upper if d > DUAL_TOL && self.up[j] > self.lo[j] => -1.0,
                VarStat::Free if d.abs() > DUAL_TOL => -d.signum(),
                _ => continue,
            };
            if bland {
                enter = Some((j, dir));
                break;
            }
            let score = d.abs();
            if score > best {
                best = score;
                enter = Some((j, dir));
            }
        }
        let Some((q, dir)) = enter else {
            return if phase1 { Step::Infeasible } else { Step::Optimal };
        };

        // alpha = B^{-1} a_q
        let mut aq = vec![0.0; m];
        self.column_into(q, &mut aq);
        let mut alpha = vec![0.0; m];
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            alpha[r] = if q < self.n {
                self.cols[q].iter().map(|&(i, a)| row[i] * a).sum()
            } else {
                -row[q - self.n]
            };
        }

        // ratio test (Harris two-pass unless in Bland mode)
        let limit = |r: usize, relax: f64| -> Option<(f64, VarStat)> {
            let a = alpha[r];
            if a.abs() <= PIVOT_TOL {
                return None;
            }
            let v = self.head[r];
            let rate = -dir * a;
            let val = self.x[v];
            let (lo, up) = (self.lo[v], self.up[v]);
            if phase1 && val < lo - PRIMAL_TOL {
                return (rate > 0.0).then(|| (((lo - val) + relax) / rate, VarStat::Lower));
            }
            if phase1 && val > up + PRIMAL_TOL {
                return (rate < 0.0).then(|| (((val - up) + relax) / -rate, VarStat::Upper));
            }
            if rate < 0.0 && lo.is_finite() {
                Some((((val - lo) + relax).max(0.0) / -rate, VarStat::Lower))
            } else if rate > 0.0 && up.is_finite() {
                Some((((up - val) + relax).max(0.0) / rate, VarStat::Upper))
            } else {
                None
            }
        };
        let flip = self.up[q] - self.lo[q];
        let mut leave: Option<(usize, f64, VarStat)> = None;
        if bland {
            let mut tmin = f64::INFINITY;
            for r in 0..m {
                if let Some((t, st)) = limit(r, 0.0) {
                    let better = t < tmin - 1e-12
                        || (t <= tmin + 1e-12
                            && leave.is_none_or(|(lr, _, _)| self.head[r] < self.head[lr]));
                    if better {
                        tmin = tmin.min(t);
                        leave = Some((r, t, st));
                    }
                }
            }
        } else {
            let mut bound = f64::INFINITY;
            for r in 0..m {
                if let Some((t, _)) = limit(r, PRIMAL_TOL) {
                    bound = bound.min(t);
                }
            }
            let mut best_piv = 0.0;
            for r in 0..m {
                if let Some((t, st)) = limit(r, 0.0) {
                    if t <= bound && alpha[r].abs() > best_piv {
                        best_piv = alpha[r].abs();
                        leave = Some((r, t, st));
                    }
                }
            }
        }
        if flip.is_finite() && leave.is_none_or(|(_, t, _)| flip <= t) {
            // bound flip of the entering variable
            let t = flip;
            self.x[q] += dir * t;
            for r in 0..m {
                let v = self.head[r];
                self.x[v] -= dir * t * alpha[r];
            }
            self.stat[q] = if dir > 0.0 { VarStat::Upper } else { VarStat::Lower };
            self.x[q] = self.nonbasic_value(q);
            return Step::Continue { degenerate: false };
        }
        let Some((r_out, t, st)) = leave else {
            if phase1 {
                // an infeasibility direction without a block cannot occur in exact arithmetic
                return Step::Infeasible;
            }
            return Step::Unbounded;
        };
        let t = t.max(0.0);
        self.x[q] += dir * t;
        for r in 0..m {
            let v = self.head[r];
            self.x[v] -= dir * t * alpha[r];
        }
        let v_out = self.head[r_out];
        self.stat[v_out] = st;
        if self.lo[v_out] == self.up[v_out] {
            self.stat[v_out] = VarStat::Lower;
        }
        self.x[v_out] = self.nonbasic_value(v_out);
        self.head[r_out] = q;
        self.stat[q] = VarStat::Basic;

        let piv = alpha[r_out];
        let (before, rest) = self.binv.split_at_mut(r_out * m);
        let (prow, after) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        for r in 0..m {
            if r == r_out {
                continue;
            }
            let f = alpha[r];
            if f == 0.0 {
                continue;
            }
            let row = if r < r_out {
                &mut before[r * m..(r + 1) * m]
            } else {
                let k = r - r_out - 1;
                &mut after[k * m..(k + 1) * m]
            };
            for i in 0..m {
                row[i] -= f * prow[i];
            }
        }
        Step::Continue { degenerate: t <= 1e-12 }
    }

    fn finish(&self, iterations: usize, clean: bool) -> LpSolution {
        let m = self.m;
        let sign = if self.model.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut x: Vec<f64> = self.x[..self.n].to_vec();
        for j in 0..self.n {
            // snap tiny bound overshoots
            if x[j] < self.lo[j] && x[j] > self.lo[j] - 1e-7 {
                x[j] = self.lo[j];
            }
            if x[j] > self.up[j] && x[j] < self.up[j] + 1e-7 {
                x[j] = self.up[j];
            }
        }
        let mut y = vec![0.0; m];
        for r in 0..m {
            let c = self.cost[self.head[r]];
            if c != 0.0 {
                for i in 0..m {
                    y[i] += c * self.binv[r * m + i];
                }
            }
        }
        let duals: Vec<f64> = y.iter().map(|v| sign * v).collect();
        let objective = self.model.eval_objective(&x);
        let viol = self.model.scaled_violation(&x);
        let status = if clean && viol <= 1e-7 {
            LpStatus::Optimal
        } else {
            log::debug!("simplex finished with scaled residual {viol:e}");
            LpStatus::NumericalError
        };
        LpSolution {
            status,
            x,
            objective,
            duals,
            basis: Some(Basis {
                status: self.stat.clone(),
            }),
            iterations,
        }
    }
}
