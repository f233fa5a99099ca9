//! Seeded generators for SSLP, SMRCSP and DCAP.
//!
//! Every generator draws from one `ChaCha8Rng` seeded with `seed_from_u64`:
//! first-stage data first, then scenario-independent second-stage data, then
//! each scenario's draws in scenario order. Discrete uniforms are inclusive.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::milp::{self, LpModel, MilpLimits, Sense};
use crate::model::{Scenario, SmipInstance, SparseMatrix, VarKind};
use crate::recourse::{Recourse, ScenarioRecourse};
use crate::{Error, Result};

/// Name and version of the random stream layout.
pub const RNG_STREAM: &str = "chacha8-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Sslp,
    Smrcsp,
    Dcap,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Sslp => "sslp",
            Family::Smrcsp => "smrcsp",
            Family::Dcap => "dcap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub family: Family,
    /// SSLP `[|J|, |I|]`, SMRCSP `[|J|, |J_B|, T]`, DCAP `[|I|, |J|, |T|]`.
    pub sizes: Vec<usize>,
    pub scenarios: usize,
    pub seed: u64,
    /// SMRCSP resource classes K (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resources: Option<usize>,
}

impl GeneratorSpec {
    pub fn sslp(locations: usize, clients: usize, scenarios: usize, seed: u64) -> Self {
        GeneratorSpec {
            family: Family::Sslp,
            sizes: vec![locations, clients],
            scenarios,
            seed,
            resources: None,
        }
    }

    pub fn smrcsp(jobs: usize, bid_jobs: usize, periods: usize, scenarios: usize, seed: u64) -> Self {
        GeneratorSpec {
            family: Family::Smrcsp,
            sizes: vec![jobs, bid_jobs, periods],
            scenarios,
            seed,
            resources: None,
        }
    }

    pub fn dcap(resources: usize, tasks: usize, periods: usize, scenarios: usize, seed: u64) -> Self {
        GeneratorSpec {
            family: Family::Dcap,
            sizes: vec![resources, tasks, periods],
            scenarios,
            seed,
            resources: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let want = match self.family {
            Family::Sslp => 2,
            Family::Smrcsp | Family::Dcap => 3,
        };
        if self.sizes.len() != want {
            return Err(Error::InvalidConfig(format!("{} needs {want} sizes, got {}", self.family, self.sizes.len())));
        }
        if self.sizes.contains(&0) {
            return Err(Error::InvalidConfig("sizes must be positive".into()));
        }
        if self.scenarios == 0 {
            return Err(Error::InvalidConfig("need at least one scenario".into()));
        }
        if self.resources == Some(0) {
            return Err(Error::InvalidConfig("resources must be positive".into()));
        }
        Ok(())
    }

    /// e.g. `sslp(5,5)-N5-s1`.
    pub fn label(&self) -> String {
        let sizes: Vec<String> = self.sizes.iter().map(|v| v.to_string()).collect();
        format!("{}({})-N{}-s{}", self.family, sizes.join(","), self.scenarios, self.seed)
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<SmipInstance> {
    match spec.family {
        Family::Sslp => gen_sslp(spec),
        Family::Smrcsp => gen_smrcsp(spec),
        Family::Dcap => gen_dcap(spec),
    }
}

fn rng(spec: &GeneratorSpec) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(spec.seed)
}

fn uniform(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> f64 {
    rng.gen_range(lo..=hi) as f64
}

/// `Σ_k coeff_k·v_k = rhs` as two `≥` rows.
fn push_eq(m: &mut SparseMatrix, rhs: &mut Vec<f64>, coeffs: &[(usize, f64)], value: f64) {
    for sign in [1.0, -1.0] {
        let r = m.rows;
        m.rows += 1;
        for &(j, v) in coeffs {
            m.push(r, j, sign * v);
        }
        rhs.push(sign * value);
    }
}

fn with_rows(m: &mut SparseMatrix, n: usize) {
    m.rows += n;
}

/// Stochastic server location. First stage `x_j` binary with `Σx ≤ ⌈|J|/3⌉`;
/// recourse assigns available clients with capacity overflow `y_0j` at cost 1000.
pub fn gen_sslp(spec: &GeneratorSpec) -> Result<SmipInstance> {
    spec.validate()?;
    let (nj, ni) = (spec.sizes[0], spec.sizes[1]);
    let mut rng = rng(spec);
    let c: Vec<f64> = (0..nj).map(|_| uniform(&mut rng, 40, 80)).collect();
    let v = nj.div_ceil(3) as f64;
    let d: Vec<Vec<f64>> = (0..ni).map(|_| (0..nj).map(|_| uniform(&mut rng, 0, 25)).collect()).collect();
    let q: Vec<Vec<f64>> = (0..ni).map(|_| (0..nj).map(|_| uniform(&mut rng, 0, 25)).collect()).collect();
    let u = 50.0;

    let mut a = SparseMatrix::new(1, nj);
    for j in 0..nj {
        a.push(0, j, -1.0);
    }
    let yij = |i: usize, j: usize| i * nj + j;
    let y0 = |j: usize| ni * nj + j;
    let ny = ni * nj + nj;
    let mut cost = vec![0.0; ny];
    let mut kinds = vec![VarKind::Integer; ny];
    let mut bounds = vec![(0.0, 1.0); ny];
    for i in 0..ni {
        for j in 0..nj {
            cost[yij(i, j)] = -q[i][j];
        }
    }
    for j in 0..nj {
        cost[y0(j)] = 1000.0;
        kinds[y0(j)] = VarKind::Continuous;
        bounds[y0(j)] = (0.0, f64::INFINITY);
    }

    let scenarios = (0..spec.scenarios)
        .map(|_| {
            let avail: Vec<f64> = (0..ni).map(|_| if rng.gen_bool(0.7) { 1.0 } else { 0.0 }).collect();
            let mut w = SparseMatrix::new(0, ny);
            let mut t = SparseMatrix::new(0, nj);
            let mut h = Vec::new();
            // u x_j − Σ_i d_ij y_ij + y_0j ≥ 0
            for j in 0..nj {
                let r = w.rows;
                with_rows(&mut w, 1);
                with_rows(&mut t, 1);
                for i in 0..ni {
                    if d[i][j] != 0.0 {
                        w.push(r, yij(i, j), -d[i][j]);
                    }
                }
                w.push(r, y0(j), 1.0);
                t.push(r, j, u);
                h.push(0.0);
            }
            for (i, &hi) in avail.iter().enumerate() {
                let row: Vec<(usize, f64)> = (0..nj).map(|j| (yij(i, j), 1.0)).collect();
                push_eq(&mut w, &mut h, &row, hi);
                with_rows(&mut t, 2);
            }
            Scenario {
                q: cost.clone(),
                w,
                t,
                h,
                y_kinds: kinds.clone(),
                y_bounds: bounds.clone(),
                prob: 1.0 / spec.scenarios as f64,
            }
        })
        .collect();
    SmipInstance::new(c, a, vec![-v], vec![VarKind::Integer; nj], vec![(0.0, 1.0); nj], scenarios)
}

/// `S(j,t) = [max(1, t−p+1), min(t, last)]` as an inclusive range (possibly empty).
pub fn window(t: usize, p: usize, first: usize, last: usize) -> std::ops::RangeInclusive<usize> {
    let lo = (t + 1).saturating_sub(p).max(first);
    let hi = t.min(last);
    lo..=hi
}

/// Stochastic multiple-resource-constrained scheduling. Known jobs are
/// scheduled in `[1, T]`, capacity expansions `z_tk` cover `[1, T₀]`;
/// accepted bids are scheduled in `[T₀+1, T+T₀]` in the second stage.
pub fn gen_smrcsp(spec: &GeneratorSpec) -> Result<SmipInstance> {
    spec.validate()?;
    let (nj, nb, tt) = (spec.sizes[0], spec.sizes[1], spec.sizes[2]);
    let k = spec.resources.unwrap_or(2);
    let t0 = tt.div_ceil(4);
    let mut rng = rng(spec);
    let p: Vec<usize> = (0..nj + nb).map(|_| rng.gen_range(1..=tt)).collect();
    let r: Vec<Vec<f64>> = (0..nj + nb).map(|_| (0..k).map(|_| uniform(&mut rng, 1, 5)).collect()).collect();
    let b: Vec<f64> = (0..k).map(|_| uniform(&mut rng, 10, 20)).collect();
    let rho: f64 = rng.gen_range(0.5..=1.2);

    let mean = |v: &mut dyn Iterator<Item = f64>, n: usize| v.sum::<f64>() / n as f64;
    let pbar = mean(&mut p[..nj].iter().map(|&v| v as f64), nj);
    let pbar_b = mean(&mut p[nj..].iter().map(|&v| v as f64), nb);
    let cap: Vec<f64> = (0..k)
        .map(|kk| {
            let rbar = mean(&mut r[..nj].iter().map(|v| v[kk]), nj);
            let rbar_b = mean(&mut r[nj..].iter().map(|v| v[kk]), nb);
            (pbar * rbar * nj as f64 + 0.75 * pbar_b * rbar_b * nb as f64) / ((tt + t0) as f64 * rho)
        })
        .collect();
    let big_m: Vec<f64> = (0..k)
        .map(|kk| (((nj + nb) * tt) as f64).max(r.iter().map(|v| v[kk]).sum()))
        .collect();

    // first stage: x_jt for t ∈ [1, T−p_j+1], then z_tk for t ∈ [1, T₀]
    let mut xcol = Vec::with_capacity(nj);
    let mut c = Vec::new();
    for j in 0..nj {
        let last = tt - p[j] + 1;
        xcol.push(c.len());
        c.extend((1..=last).map(|t| (t + p[j] - 1) as f64));
    }
    let z0 = c.len();
    for _ in 1..=t0 {
        c.extend(b.iter().copied());
    }
    let n = c.len();
    let x_at = |j: usize, tau: usize| xcol[j] + tau - 1;

    let mut a = SparseMatrix::new(0, n);
    let mut rhs = Vec::new();
    for j in 0..nj {
        let row: Vec<(usize, f64)> = (1..=tt - p[j] + 1).map(|t| (x_at(j, t), 1.0)).collect();
        push_eq(&mut a, &mut rhs, &row, 1.0);
    }
    // Σ r x − M z ≤ R  ⇔  −Σ r x + M z ≥ −R
    let x_usage = |t: usize, kk: usize| -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for j in 0..nj {
            for tau in window(t, p[j], 1, tt - p[j] + 1) {
                out.push((x_at(j, tau), r[j][kk]));
            }
        }
        out
    };
    for t in 1..=t0 {
        for kk in 0..k {
            let row = a.rows;
            with_rows(&mut a, 1);
            for (j, v) in x_usage(t, kk) {
                a.push(row, j, -v);
            }
            a.push(row, z0 + (t - 1) * k + kk, big_m[kk]);
            rhs.push(-cap[kk]);
        }
    }

    // second stage: y_jt for bids, t ∈ [T₀+1, T+T₀−p_j+1], then u_tk for t ∈ [T₀+1, T+T₀]
    let mut ycol = Vec::with_capacity(nb);
    let mut q = Vec::new();
    for jb in 0..nb {
        let pj = p[nj + jb];
        ycol.push(q.len());
        q.extend((t0 + 1..=tt + t0 - pj + 1).map(|t| (t + pj - 1) as f64));
    }
    let u0 = q.len();
    for _ in t0 + 1..=tt + t0 {
        q.extend(b.iter().copied());
    }
    let ny = q.len();
    let y_at = |jb: usize, tau: usize| ycol[jb] + tau - (t0 + 1);

    let scenarios = (0..spec.scenarios)
        .map(|_| {
            let accepted: Vec<f64> = (0..nb).map(|_| if rng.gen_bool(0.75) { 1.0 } else { 0.0 }).collect();
            let mut w = SparseMatrix::new(0, ny);
            let mut tm = SparseMatrix::new(0, n);
            let mut h = Vec::new();
            for jb in 0..nb {
                let pj = p[nj + jb];
                let row: Vec<(usize, f64)> = (t0 + 1..=tt + t0 - pj + 1).map(|t| (y_at(jb, t), 1.0)).collect();
                push_eq(&mut w, &mut h, &row, accepted[jb]);
                with_rows(&mut tm, 2);
            }
            for t in t0 + 1..=tt + t0 {
                for kk in 0..k {
                    let row = w.rows;
                    with_rows(&mut w, 1);
                    with_rows(&mut tm, 1);
                    for jb in 0..nb {
                        let pj = p[nj + jb];
                        for tau in window(t, pj, t0 + 1, tt + t0 - pj + 1) {
                            w.push(row, y_at(jb, tau), -r[nj + jb][kk]);
                        }
                    }
                    w.push(row, u0 + (t - t0 - 1) * k + kk, big_m[kk]);
                    for (j, v) in x_usage(t, kk) {
                        tm.push(row, j, -v);
                    }
                    h.push(-cap[kk]);
                }
            }
            Scenario {
                q: q.clone(),
                w,
                t: tm,
                h,
                y_kinds: vec![VarKind::Integer; ny],
                y_bounds: vec![(0.0, 1.0); ny],
                prob: 1.0 / spec.scenarios as f64,
            }
        })
        .collect();
    SmipInstance::new(c, a, rhs, vec![VarKind::Integer; n], vec![(0.0, 1.0); n], scenarios)
}

/// Dynamic capacity acquisition and allocation. First stage: continuous
/// `x_it ∈ [0, 50]` (index `i·T + t`) then binary `u_it` with `x ≤ 50u`.
pub fn gen_dcap(spec: &GeneratorSpec) -> Result<SmipInstance> {
    spec.validate()?;
    let (ni, nj, nt) = (spec.sizes[0], spec.sizes[1], spec.sizes[2]);
    let cap = 50.0;
    let penalty = 1000.0;
    let mut rng = rng(spec);
    let alpha: Vec<f64> = (0..ni * nt).map(|_| uniform(&mut rng, 20, 40)).collect();
    let beta: Vec<f64> = (0..ni * nt).map(|_| uniform(&mut rng, 50, 70)).collect();
    let nx = ni * nt;
    let mut c = alpha;
    c.extend(beta);
    let mut kinds = vec![VarKind::Continuous; nx];
    kinds.extend(vec![VarKind::Integer; nx]);
    let mut bounds = vec![(0.0, cap); nx];
    bounds.extend(vec![(0.0, 1.0); nx]);
    let mut a = SparseMatrix::new(nx, 2 * nx);
    for k in 0..nx {
        // b u − x ≥ 0
        a.push(k, nx + k, cap);
        a.push(k, k, -1.0);
    }

    let y = |i: usize, j: usize, t: usize| (i * nj + j) * nt + t;
    let y0 = |i: usize, t: usize| ni * nj * nt + i * nt + t;
    let ny = ni * nj * nt + ni * nt;
    let mut y_kinds = vec![VarKind::Integer; ni * nj * nt];
    y_kinds.extend(vec![VarKind::Continuous; ni * nt]);
    let mut y_bounds = vec![(0.0, 1.0); ni * nj * nt];
    y_bounds.extend(vec![(0.0, f64::INFINITY); ni * nt]);

    let scenarios = (0..spec.scenarios)
        .map(|_| {
            let mut q = vec![penalty; ny];
            for i in 0..ni {
                for j in 0..nj {
                    for t in 0..nt {
                        q[y(i, j, t)] = uniform(&mut rng, 40, 80);
                    }
                }
            }
            let d: Vec<Vec<f64>> = (0..nj).map(|_| (0..nt).map(|_| uniform(&mut rng, 1, 10)).collect()).collect();
            let mut w = SparseMatrix::new(0, ny);
            let mut tm = SparseMatrix::new(0, 2 * nx);
            let mut h = Vec::new();
            // Σ_{τ≤t} x_iτ − Σ_j d_jt y_ijt + y⁰_it ≥ 0
            for i in 0..ni {
                for t in 0..nt {
                    let row = w.rows;
                    with_rows(&mut w, 1);
                    with_rows(&mut tm, 1);
                    for j in 0..nj {
                        w.push(row, y(i, j, t), -d[j][t]);
                    }
                    w.push(row, y0(i, t), 1.0);
                    for tau in 0..=t {
                        tm.push(row, i * nt + tau, 1.0);
                    }
                    h.push(0.0);
                }
            }
            for j in 0..nj {
                for t in 0..nt {
                    let row: Vec<(usize, f64)> = (0..ni).map(|i| (y(i, j, t), 1.0)).collect();
                    push_eq(&mut w, &mut h, &row, 1.0);
                    with_rows(&mut tm, 2);
                }
            }
            Scenario {
                q,
                w,
                t: tm,
                h,
                y_kinds: y_kinds.clone(),
                y_bounds: y_bounds.clone(),
                prob: 1.0 / spec.scenarios as f64,
            }
        })
        .collect();
    SmipInstance::new(c, a, vec![0.0; nx], kinds, bounds, scenarios)
}

/// Spot checks of the standing assumptions: a feasible first stage, bounded
/// scenario relaxations, and feasible recourse at the cheapest and the most
/// expensive first-stage points.
pub fn check_assumptions(inst: &SmipInstance) -> Result<()> {
    let mut probes = Vec::new();
    for sign in [1.0, -1.0] {
        let mut m = LpModel::new(Sense::Minimize);
        let xs = inst.add_first_stage(&mut m, true);
        for (i, &j) in xs.iter().enumerate() {
            m.objective[j] = sign * inst.c[i];
        }
        let sol = milp::solve_milp(&m, &MilpLimits::default());
        if !sol.has_incumbent() {
            return Err(Error::InvalidInstance(format!("first-stage MILP returned {:?}", sol.status)));
        }
        probes.push(xs.iter().map(|&j| sol.x[j]).collect::<Vec<f64>>());
    }
    for s in 0..inst.num_scenarios() {
        let rec = ScenarioRecourse::new(inst, s);
        rec.lp_lower_bound()?;
        for x in &probes {
            rec.value(x)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
