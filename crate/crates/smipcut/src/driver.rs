//! Cutting-plane loops: resolve the master MILP, evaluate the scenarios at
//! its solution, add cuts, repeat until the bounds meet.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cuts::{self, CutRequest, LagrangianOptions};
use crate::embed::{binarize_instance, MasterProblem};
use crate::instances::{self, GeneratorSpec};
use crate::milp::{MilpLimits, MilpStatus};
use crate::model::{fixtures, relative_gap, IterationLog, LinearCut, ReluCut, ScenarioTag, SmipInstance, SolveReport, SolveStatus, VarKind};
use crate::recourse::{Recourse, ScenarioRecourse};
use crate::relu::binary_search_rho;
use crate::strengthen::{self, BinaryOptions, MixedOptions, StrengthenStatus, Strategy};
use crate::{Error, Result};

/// Which cut generators run at every anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CutSet {
    pub benders: bool,
    pub strengthened_benders: bool,
    /// Integer L-shaped cut; on mixed domains the initial norm cut.
    pub l_shaped: bool,
    /// Strengthened ReLU cut.
    pub relu: bool,
    /// Augmented Lagrangian cut with π = 0.
    pub augmented: bool,
    pub lagrangian: bool,
}

impl CutSet {
    fn parts(&self) -> [(bool, &'static str); 6] {
        [
            (self.benders, "b"),
            (self.strengthened_benders, "sb"),
            (self.l_shaped, "l"),
            (self.relu, "r"),
            (self.augmented, "al"),
            (self.lagrangian, "lag"),
        ]
    }

    pub fn is_empty(&self) -> bool {
        self.parts().iter().all(|p| !p.0)
    }

    /// Only Lagrangian cuts: no warm start, no binarization.
    pub fn lagrangian_only(&self) -> bool {
        self.lagrangian && self.parts().iter().filter(|p| p.0).count() == 1
    }
}

/// Named cut combinations plus `a+b` custom combos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CutFamily {
    /// Integer L-shaped cuts.
    L,
    /// Benders + L.
    B,
    /// Strengthened Benders + L.
    SB,
    /// Strengthened ReLU cuts (plus strengthened Benders on mixed domains).
    R,
    /// Augmented Lagrangian cuts (plus strengthened Benders on mixed domains).
    AL,
    /// Lagrangian cuts only, in the original space.
    Lag,
    Custom(CutSet),
}

impl CutFamily {
    pub fn cuts(&self, mixed: bool) -> CutSet {
        let mut c = CutSet::default();
        match self {
            CutFamily::L => c.l_shaped = true,
            CutFamily::B => (c.benders, c.l_shaped) = (true, true),
            CutFamily::SB => (c.strengthened_benders, c.l_shaped) = (true, true),
            CutFamily::R => (c.relu, c.strengthened_benders) = (true, mixed),
            CutFamily::AL => (c.augmented, c.strengthened_benders) = (true, mixed),
            CutFamily::Lag => c.lagrangian = true,
            CutFamily::Custom(set) => c = *set,
        }
        c
    }
}

impl FromStr for CutFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "l" => return Ok(CutFamily::L),
            "b" => return Ok(CutFamily::B),
            "sb" => return Ok(CutFamily::SB),
            "r" => return Ok(CutFamily::R),
            "al" => return Ok(CutFamily::AL),
            "lag" => return Ok(CutFamily::Lag),
            _ => {}
        }
        let mut set = CutSet::default();
        for part in s.split('+') {
            let flag = match part.trim() {
                "b" => &mut set.benders,
                "sb" => &mut set.strengthened_benders,
                "l" => &mut set.l_shaped,
                "r" => &mut set.relu,
                "al" => &mut set.augmented,
                "lag" => &mut set.lagrangian,
                other => return Err(Error::InvalidConfig(format!("unknown cut family '{other}' (l, b, sb, r, al, lag or a+b combos)"))),
            };
            *flag = true;
        }
        Ok(CutFamily::Custom(set))
    }
}

impl TryFrom<String> for CutFamily {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for CutFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CutFamily::L => "l".to_string(),
            CutFamily::B => "b".to_string(),
            CutFamily::SB => "sb".to_string(),
            CutFamily::R => "r".to_string(),
            CutFamily::AL => "al".to_string(),
            CutFamily::Lag => "lag".to_string(),
            CutFamily::Custom(set) => set.parts().iter().filter(|p| p.0).map(|p| p.1).collect::<Vec<_>>().join("+"),
        };
        f.write_str(&s)
    }
}

impl From<CutFamily> for String {
    fn from(f: CutFamily) -> String {
        f.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// One θ, cuts weighted by scenario probability.
    Single,
    /// One θ per scenario.
    Multi,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Aggregation::Single),
            "multi" => Ok(Aggregation::Multi),
            _ => Err(Error::InvalidConfig(format!("unknown aggregation '{s}' (single, multi)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverConfig {
    pub cuts: CutFamily,
    pub aggregation: Aggregation,
    /// Relative gap tolerance.
    pub gap: f64,
    /// Seconds.
    pub time_limit: Option<f64>,
    pub iteration_limit: usize,
    pub strategy: Strategy,
    pub objective_cuts: bool,
    pub warm_start: bool,
    pub seed: u64,
    /// Scenario fan-out width; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    /// Record wall time in the report.
    pub timing: bool,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            cuts: CutFamily::R,
            aggregation: Aggregation::Single,
            gap: 1e-4,
            time_limit: None,
            iteration_limit: 10_000,
            strategy: Strategy::Auto,
            objective_cuts: true,
            warm_start: true,
            seed: 0,
            jobs: None,
            timing: false,
        }
    }
}

impl DriverConfig {
    pub fn with_cuts(cuts: CutFamily) -> Self {
        DriverConfig {
            cuts,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap > 0.0) {
            return Err(Error::InvalidConfig(format!("gap tolerance must be > 0, got {}", self.gap)));
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig(format!("time limit must be > 0, got {t}")));
            }
        }
        if self.iteration_limit == 0 {
            return Err(Error::InvalidConfig("iteration limit must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidConfig("jobs must be positive".into()));
        }
        if let CutFamily::Custom(set) = self.cuts {
            if set.is_empty() {
                return Err(Error::InvalidConfig("empty cut combination".into()));
            }
        }
        Ok(())
    }
}

/// Absolute slack under which the bounds count as equal.
const ABS_TOL: f64 = 1e-9;
const WARM_START_ROUNDS: usize = 200;

/// Cuts generated for one scenario at one anchor, in generator order.
#[derive(Debug, Clone, Default)]
pub struct ScenarioCuts {
    pub linear: Vec<LinearCut>,
    pub relu: Vec<ReluCut>,
    pub degraded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Domain {
    Binary,
    /// Pure integer or mixed, in the original space.
    General,
}

/// Per-scenario lower bound `L_s` on `Q_s`: the instance's bound if given,
/// else the joint LP relaxation (less a small safety margin).
pub fn scenario_lower_bounds(inst: &SmipInstance) -> Result<Vec<f64>> {
    (0..inst.num_scenarios())
        .map(|s| match inst.lower_bound {
            Some(l) => Ok(l),
            None => {
                let v = ScenarioRecourse::new(inst, s).lp_lower_bound()?;
                Ok(v - 1e-7 * (1.0 + v.abs()))
            }
        })
        .collect()
}

fn chi(anchor: &[f64]) -> Vec<f64> {
    anchor.iter().map(|&v| 2.0 * v - 1.0).collect()
}

/// Generates the configured cuts for scenario `s` at `anchor` with `Q_s(anchor) = q`.
pub fn scenario_cuts(inst: &SmipInstance, s: usize, anchor: &[f64], q: f64, lower: f64, set: &CutSet, cfg: &DriverConfig) -> Result<ScenarioCuts> {
    let binary = inst.all_binary();
    let rec = ScenarioRecourse::new(inst, s);
    let tag = ScenarioTag::Scenario(s);
    let mut out = ScenarioCuts::default();
    let rho = || -> Result<f64> { Ok(binary_search_rho(&rec, anchor, q, lower, (q - lower).max(1.0))?.rho) };
    if set.benders {
        out.linear.push(cuts::benders_cut(inst, s, anchor)?);
    }
    if set.strengthened_benders {
        let g = cuts::strengthened_benders_cut(inst, s, anchor)?;
        out.degraded += g.degraded as usize;
        out.linear.push(g.cut);
    }
    if set.l_shaped {
        let req = CutRequest::new(s, anchor, q, lower);
        let cut = if binary {
            cuts::integer_l_shaped_cut(&req)?
        } else if inst.all_integer() {
            cuts::lambda_shaped_cut(&req, &inst.var_kinds)?
        } else {
            ReluCut::norm_cut(anchor, q, rho()?, tag)
        };
        out.relu.push(cut);
    }
    if set.relu {
        let out_cut = if binary {
            let seed: Vec<f64> = chi(anchor).iter().map(|c| (q - lower).max(0.0) * c).collect();
            let mut opts = BinaryOptions::new(cfg.strategy, lower);
            opts.objective_cut = cfg.objective_cuts.then_some(lower);
            strengthen::strengthen_binary_cut(inst, s, anchor, q, &seed, &opts)?
        } else {
            let opts = MixedOptions {
                objective_cut: cfg.objective_cuts.then_some(lower),
                ..Default::default()
            };
            strengthen::strengthen_mixed_cut(inst, s, anchor, q, rho()?, &opts)?
        };
        if out_cut.status != StrengthenStatus::Improved {
            out.degraded += 1;
        }
        out.relu.push(out_cut.cut);
    }
    if set.augmented {
        let r = rho()?;
        let g = cuts::augmented_lagrangian_cut(&rec, tag, anchor, &vec![0.0; anchor.len()], r)?;
        out.degraded += g.degraded as usize;
        out.relu.push(g.cut);
    }
    if set.lagrangian {
        let g = cuts::lagrangian_cut(&rec, anchor, q, &LagrangianOptions::default())?;
        out.degraded += g.degraded as usize;
        out.linear.push(g.cut);
    }
    Ok(out)
}

fn weighted_linear(cuts: &[(f64, &LinearCut)]) -> LinearCut {
    let n = cuts[0].1.coeffs.len();
    let mut coeffs = vec![0.0; n];
    let mut rhs = 0.0;
    for (p, c) in cuts {
        rhs += p * c.rhs;
        for (a, b) in coeffs.iter_mut().zip(&c.coeffs) {
            *a += p * b;
        }
    }
    LinearCut { coeffs, rhs }
}

/// Probability-weighted sum of ReLU cuts sharing one anchor.
fn weighted_relu(cuts: &[(f64, &ReluCut)]) -> ReluCut {
    let first = cuts[0].1;
    let n = first.dim();
    let mut out = ReluCut {
        anchor: first.anchor.clone(),
        intercept: 0.0,
        pi_plus: vec![0.0; n],
        pi_minus: vec![0.0; n],
        scenario: ScenarioTag::Aggregate,
    };
    for (p, c) in cuts {
        out.intercept += p * c.intercept;
        for i in 0..n {
            out.pi_plus[i] += p * c.pi_plus[i];
            out.pi_minus[i] += p * c.pi_minus[i];
        }
    }
    out
}

/// Master plus bound bookkeeping for one run.
pub(crate) struct MasterState<'a> {
    inst: &'a SmipInstance,
    cfg: &'a DriverConfig,
    set: CutSet,
    domain: Domain,
    probs: Vec<f64>,
    lower: Vec<f64>,
    master: MasterProblem,
    pool: rayon::ThreadPool,
    start: Instant,
    lb: f64,
    ub: f64,
    incumbent: Option<Vec<f64>>,
    log: Vec<IterationLog>,
    warm_rounds: usize,
    /// Added to every reported bound (the working instance may be a transform).
    offset: f64,
}

impl<'a> MasterState<'a> {
    fn new(inst: &'a SmipInstance, cfg: &'a DriverConfig, domain: Domain) -> Result<Self> {
        cfg.validate()?;
        let mixed = !inst.all_integer();
        let set = cfg.cuts.cuts(mixed);
        let probs = inst.probabilities();
        let lower = scenario_lower_bounds(inst)?;
        let (weights, lows) = match (cfg.aggregation, probs.len()) {
            (_, 0) => (vec![], vec![]),
            (Aggregation::Single, _) => (vec![1.0], vec![probs.iter().zip(&lower).map(|(p, l)| p * l).sum()]),
            (Aggregation::Multi, _) => (probs.clone(), lower.clone()),
        };
        let master = MasterProblem::new(inst, &weights, &lows);
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(j) = cfg.jobs {
            pool = pool.num_threads(j);
        }
        let pool = pool.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        Ok(MasterState {
            inst,
            cfg,
            set,
            domain,
            probs,
            lower,
            master,
            pool,
            start: Instant::now(),
            lb: f64::NEG_INFINITY,
            ub: f64::INFINITY,
            incumbent: None,
            log: Vec::new(),
            warm_rounds: 0,
            offset: inst.objective_offset(),
        })
    }

    fn remaining(&self) -> Option<Duration> {
        self.cfg
            .time_limit
            .map(|t| Duration::from_secs_f64(t).saturating_sub(self.start.elapsed()))
    }

    fn out_of_time(&self) -> bool {
        self.remaining().is_some_and(|d| d.is_zero())
    }

    fn limits(&self) -> MilpLimits {
        MilpLimits {
            time_limit: self.remaining(),
            ..Default::default()
        }
    }

    fn converged(&self) -> bool {
        self.ub - self.lb <= ABS_TOL * (1.0 + self.ub.abs()) || relative_gap(self.lb, self.ub) <= self.cfg.gap
    }

    /// Adds one cut per scenario (aggregated in single-cut mode).
    fn add_linear(&mut self, cuts: &[LinearCut]) {
        match self.cfg.aggregation {
            Aggregation::Single => {
                let w: Vec<(f64, &LinearCut)> = self.probs.iter().copied().zip(cuts).collect();
                self.master.add_linear_cut(&weighted_linear(&w), 0);
            }
            Aggregation::Multi => {
                for (s, c) in cuts.iter().enumerate() {
                    self.master.add_linear_cut(c, s);
                }
            }
        }
    }

    fn add_relu(&mut self, cuts: &[ReluCut]) -> Result<()> {
        match self.cfg.aggregation {
            Aggregation::Single => {
                let w: Vec<(f64, &ReluCut)> = self.probs.iter().copied().zip(cuts).collect();
                self.master.embed_cut(&weighted_relu(&w), 0)?;
            }
            Aggregation::Multi => {
                for (s, c) in cuts.iter().enumerate() {
                    self.master.embed_cut(c, s)?;
                }
            }
        }
        Ok(())
    }

    /// θ value the master assigns at its solution, on the single-cut scale.
    fn theta_total(&self, sol: &[f64]) -> f64 {
        let th = self.master.theta_of(sol);
        match self.cfg.aggregation {
            Aggregation::Single => th.first().copied().unwrap_or(0.0),
            Aggregation::Multi => th.iter().zip(&self.probs).map(|(t, p)| t * p).sum(),
        }
    }

    /// Benders cuts until the master (relaxed or integral in x) stops moving.
    fn benders_phase(&mut self, integral: bool) -> Result<()> {
        if self.probs.is_empty() {
            return Ok(());
        }
        for _ in 0..WARM_START_ROUNDS {
            if self.out_of_time() {
                break;
            }
            let (x, sol) = if integral {
                let sol = self.master.solve(&self.limits());
                if !sol.has_incumbent() {
                    return master_error(sol.status);
                }
                (self.master.x_of(&sol.x), sol.x)
            } else {
                let sol = self.master.solve_relaxation();
                match sol.status {
                    crate::milp::LpStatus::Optimal => {}
                    crate::milp::LpStatus::Infeasible => return Err(Error::MasterInfeasible),
                    s => return Err(Error::Solver(format!("master relaxation: {s:?}"))),
                }
                (self.master.x_of(&sol.x), sol.x)
            };
            let x = self.clean(&x, integral);
            let inst = self.inst;
            let cuts: Vec<LinearCut> = self.pool.install(|| {
                (0..inst.num_scenarios())
                    .into_par_iter()
                    .map(|s| cuts::benders_cut(inst, s, &x))
                    .collect::<Result<Vec<_>>>()
            })?;
            let th = self.master.theta_of(&sol);
            let violated = match self.cfg.aggregation {
                Aggregation::Single => {
                    let v: f64 = cuts.iter().zip(&self.probs).map(|(c, p)| p * c.eval(&x)).sum();
                    v > th[0] + 1e-7 * (1.0 + v.abs())
                }
                Aggregation::Multi => cuts.iter().zip(&th).any(|(c, t)| c.eval(&x) > t + 1e-7 * (1.0 + t.abs())),
            };
            if !violated {
                break;
            }
            self.add_linear(&cuts);
            self.warm_rounds += 1;
        }
        Ok(())
    }

    /// Snap to bounds (and to integers where `integral`) so anchors compare exactly.
    fn clean(&self, x: &[f64], integral: bool) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let b = self.inst.upper[i];
                let v = v.clamp(0.0, b);
                if integral && self.inst.var_kinds[i] == VarKind::Integer {
                    v.round()
                } else if v.abs() <= 1e-9 {
                    0.0
                } else if (v - b).abs() <= 1e-9 {
                    b
                } else {
                    v
                }
            })
            .collect()
    }

    fn main_loop(&mut self) -> Result<SolveStatus> {
        let mut seen: HashMap<Vec<u64>, (usize, f64)> = HashMap::new();
        let mut iter = 0;
        loop {
            if iter >= self.cfg.iteration_limit {
                return Ok(SolveStatus::IterationLimit);
            }
            if self.out_of_time() {
                return Ok(SolveStatus::TimeLimit);
            }
            iter += 1;
            let sol = self.master.solve(&self.limits());
            if !sol.has_incumbent() {
                return master_error(sol.status);
            }
            let bound = if sol.status == MilpStatus::Optimal { sol.objective } else { sol.bound };
            let x = self.clean(&self.master.x_of(&sol.x), true);
            let theta = self.theta_total(&sol.x);
            self.lb = self.lb.max(bound);

            let inst = self.inst;
            let q: Vec<f64> = self.pool.install(|| {
                (0..inst.num_scenarios())
                    .into_par_iter()
                    .map(|s| ScenarioRecourse::new(inst, s).value(&x))
                    .collect::<Result<Vec<_>>>()
            })?;
            let value = inst.first_stage_cost(&x) + q.iter().zip(&self.probs).map(|(a, p)| a * p).sum::<f64>();
            if value < self.ub {
                self.ub = value;
                self.incumbent = Some(x.clone());
            }
            let mut entry = IterationLog {
                iteration: iter,
                lower_bound: self.lb + self.offset,
                upper_bound: self.ub + self.offset,
                cuts: 0,
                degraded: 0,
            };
            log::debug!("iter {iter}: lb {} ub {} x {:?} θ {theta}", self.lb, self.ub, x);
            if self.converged() {
                self.log.push(entry);
                return Ok(SolveStatus::Optimal);
            }
            // a repeated anchor without progress means the cuts cannot separate it
            let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            let visit = seen.entry(key).or_insert((0, f64::NEG_INFINITY));
            visit.0 += 1;
            let stalled = visit.0 >= 3 || (visit.0 == 2 && self.lb <= visit.1 + ABS_TOL * (1.0 + self.lb.abs()));
            visit.1 = self.lb;
            if stalled {
                self.log.push(entry);
                return Ok(SolveStatus::Stalled);
            }

            let (set, cfg, lower) = (self.set, self.cfg, &self.lower);
            let per: Vec<ScenarioCuts> = self.pool.install(|| {
                (0..inst.num_scenarios())
                    .into_par_iter()
                    .map(|s| scenario_cuts(inst, s, &x, q[s], lower[s], &set, cfg))
                    .collect::<Result<Vec<_>>>()
            })?;
            if let Some(first) = per.first() {
                for k in 0..first.linear.len() {
                    let cuts: Vec<LinearCut> = per.iter().map(|c| c.linear[k].clone()).collect();
                    self.add_linear(&cuts);
                    entry.cuts += 1;
                }
                for k in 0..first.relu.len() {
                    let cuts: Vec<ReluCut> = per.iter().map(|c| c.relu[k].clone()).collect();
                    self.add_relu(&cuts)?;
                    entry.cuts += 1;
                }
            }
            entry.degraded = per.iter().map(|c| c.degraded).sum();
            self.log.push(entry);
            if self.domain == Domain::Binary && self.probs.is_empty() {
                return Ok(SolveStatus::Optimal);
            }
        }
    }

    fn run(mut self) -> Result<(SolveReport, Option<Vec<f64>>)> {
        if self.cfg.warm_start && !self.set.lagrangian_only() {
            self.benders_phase(false)?;
            if !self.inst.all_integer() {
                self.benders_phase(true)?;
            }
        }
        let status = self.main_loop()?;
        let off = self.offset;
        let (lb, ub) = (self.lb + off, self.ub + off);
        let gap = if self.ub.is_finite() && self.lb.is_finite() { relative_gap(lb, ub).max(0.0) } else { f64::INFINITY };
        let report = SolveReport {
            status,
            lower_bound: lb,
            upper_bound: ub,
            gap,
            incumbent: Vec::new(),
            iterations: self.log.len(),
            cut_log: self.log,
            warm_start_rounds: self.warm_rounds,
            wall_time_secs: self.cfg.timing.then(|| self.start.elapsed().as_secs_f64()),
        };
        Ok((report, self.incumbent))
    }
}

fn master_error<T>(status: MilpStatus) -> Result<T> {
    match status {
        MilpStatus::Infeasible => Err(Error::MasterInfeasible),
        s => Err(Error::Solver(format!("master MILP returned {s:?} without an incumbent"))),
    }
}

/// Cutting-plane loop for an all-binary first stage.
pub fn solve_binary(inst: &SmipInstance, cfg: &DriverConfig) -> Result<SolveReport> {
    if !inst.all_binary() {
        return Err(Error::InvalidInstance("solve_binary needs a binary first stage".into()));
    }
    let (mut report, inc) = MasterState::new(inst, cfg, Domain::Binary)?.run()?;
    report.incumbent = inc.map(|x| inst.to_original(&x)).unwrap_or_default();
    Ok(report)
}

/// Dispatch on the first-stage domain: binary as is, pure integer through
/// binarization (Lagrangian-only runs stay in the original space), mixed
/// through the lifted ReLU loop.
pub fn solve_general(inst: &SmipInstance, cfg: &DriverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    if inst.all_binary() {
        return solve_binary(inst, cfg);
    }
    let set = cfg.cuts.cuts(!inst.all_integer());
    if inst.all_integer() && !set.lagrangian_only() {
        let (bin, map) = binarize_instance(inst)?;
        let mut state = MasterState::new(&bin, cfg, Domain::Binary)?;
        state.offset += inst.objective_offset();
        let (mut report, inc) = state.run()?;
        report.incumbent = inc.map(|d| inst.to_original(&map.decode(&d))).unwrap_or_default();
        return Ok(report);
    }
    let (mut report, inc) = MasterState::new(inst, cfg, Domain::General)?.run()?;
    report.incumbent = inc.map(|x| inst.to_original(&x)).unwrap_or_default();
    Ok(report)
}

/// `min cᵀx + Σ p_s Q_s(x)` by enumerating an integer first stage (small n only).
pub fn enumerate_optimum(inst: &SmipInstance) -> Result<(f64, Vec<f64>)> {
    if !inst.all_integer() {
        return Err(Error::UnsupportedByOracle("enumeration needs an integer first stage".into()));
    }
    let sizes: Vec<u64> = inst.upper.iter().map(|&b| b as u64 + 1).collect();
    let total: u64 = sizes.iter().product();
    if total > 1 << 16 {
        return Err(Error::UnsupportedByOracle(format!("{total} first-stage points")));
    }
    let probs = inst.probabilities();
    let mut best = (f64::INFINITY, Vec::new());
    for k in 0..total {
        let mut rest = k;
        let x: Vec<f64> = sizes
            .iter()
            .map(|&m| {
                let v = rest % m;
                rest /= m;
                v as f64
            })
            .collect();
        if !inst.first_stage_feasible(&x, 1e-9) {
            continue;
        }
        let mut v = inst.first_stage_cost(&x);
        for (s, p) in probs.iter().enumerate() {
            v += p * ScenarioRecourse::new(inst, s).value(&x)?;
        }
        if v < best.0 {
            best = (v, x);
        }
    }
    if best.1.is_empty() && inst.n() > 0 {
        return Err(Error::MasterInfeasible);
    }
    Ok((best.0 + inst.objective_offset(), inst.to_original(&best.1)))
}

/// Instances a benchmark row can refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BenchInstance {
    Fixture {
        fixture: String,
    },
    Grid {
        family: instances::Family,
        sizes: Vec<usize>,
        scenarios: Vec<usize>,
        seeds: Vec<u64>,
        #[serde(default)]
        resources: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub instances: Vec<BenchInstance>,
    pub cuts: Vec<CutFamily>,
    /// Base configuration; `cuts` is overridden per row.
    #[serde(default)]
    pub config: DriverConfig,
}

impl BenchSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: BenchSpec = serde_json::from_str(s)?;
        if spec.cuts.is_empty() {
            return Err(Error::InvalidConfig("bench spec lists no cut families".into()));
        }
        spec.config.validate()?;
        Ok(spec)
    }

    /// `(label, instance or construction error)` in spec order.
    fn expand(&self) -> Vec<(String, Result<SmipInstance>)> {
        let mut out = Vec::new();
        for item in &self.instances {
            match item {
                BenchInstance::Fixture { fixture } => out.push((
                    fixture.clone(),
                    fixtures::by_name(fixture).ok_or_else(|| Error::InvalidConfig(format!("unknown fixture '{fixture}'"))),
                )),
                BenchInstance::Grid {
                    family,
                    sizes,
                    scenarios,
                    seeds,
                    resources,
                } => {
                    for &n in scenarios {
                        for &seed in seeds {
                            let spec = GeneratorSpec {
                                family: *family,
                                sizes: sizes.clone(),
                                scenarios: n,
                                seed,
                                resources: *resources,
                            };
                            out.push((spec.label(), instances::generate(&spec)));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub cuts: String,
    pub status: Option<SolveStatus>,
    pub lb: Option<f64>,
    pub ub: Option<f64>,
    pub gap: Option<f64>,
    pub time: f64,
    pub iterations: Option<usize>,
    /// Iterations of the cutting-plane loop, the analogue of B&B nodes.
    pub nodes: Option<usize>,
    pub error: Option<String>,
}

/// One row per (instance, cut family); failures are recorded, not raised.
pub fn run_benchmark(spec: &BenchSpec) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for (label, inst) in spec.expand() {
        for &cuts in &spec.cuts {
            let cfg = DriverConfig {
                cuts,
                ..spec.config.clone()
            };
            let start = Instant::now();
            let res = inst.as_ref().map_err(|e| e.to_string()).and_then(|i| solve_general(i, &cfg).map_err(|e| e.to_string()));
            let time = start.elapsed().as_secs_f64();
            rows.push(match res {
                Ok(r) => BenchRow {
                    instance: label.clone(),
                    cuts: cuts.to_string(),
                    status: Some(r.status),
                    lb: Some(r.lower_bound),
                    ub: Some(r.upper_bound),
                    gap: Some(r.gap),
                    time,
                    iterations: Some(r.iterations),
                    nodes: Some(r.iterations),
                    error: None,
                },
                Err(e) => BenchRow {
                    instance: label.clone(),
                    cuts: cuts.to_string(),
                    status: None,
                    lb: None,
                    ub: None,
                    gap: None,
                    time,
                    iterations: None,
                    nodes: None,
                    error: Some(e),
                },
            });
        }
    }
    rows
}
