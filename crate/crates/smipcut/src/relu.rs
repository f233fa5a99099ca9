//! Penalty selection for the initial ReLU cut `θ ≥ Q(x̂) − ρ‖x − x̂‖₁`.

use serde::Serialize;

use crate::cuts::CutRequest;
use crate::model::{ReluCut, ScenarioTag};
use crate::oracle::{self, RecourseTable};
use crate::recourse::Recourse;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RhoMethod {
    ClosedForm,
    BinarySearch,
    Lipschitz,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoEstimate {
    pub rho: f64,
    pub method: RhoMethod,
    /// Minimal ℓ1 distance used by the closed form.
    pub d: Option<f64>,
    /// Set when no candidate differed from the anchor (ρ defaults to 1).
    pub all_at_anchor: bool,
}

/// Where the closed form takes its candidate extreme points from.
#[derive(Debug, Clone, Copy)]
pub enum RhoSource<'a> {
    Table(&'a RecourseTable),
    Candidates(&'a [Vec<f64>]),
}

/// `x̂ ± r·eᵢ`: the vertices of the ℓ1 ball of radius r.
pub fn ball_corners(anchor: &[f64], radius: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * anchor.len());
    for i in 0..anchor.len() {
        for s in [-1.0, 1.0] {
            let mut p = anchor.to_vec();
            p[i] += s * radius;
            out.push(p);
        }
    }
    out
}

/// Default candidates for a mixed domain: corners of the box and of the ℓ1
/// ball of radius `Σ Bᵢ` clipped to it. Underestimating d only raises ρ.
pub fn default_candidates(anchor: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let r: f64 = upper.iter().sum();
    let mut out: Vec<Vec<f64>> = ball_corners(anchor, r)
        .into_iter()
        .map(|p| p.iter().zip(upper).map(|(v, b)| v.clamp(0.0, *b)).collect())
        .collect();
    let n = anchor.len().min(16);
    for mask in 0u32..(1 << n) {
        out.push((0..anchor.len()).map(|i| if i < n && mask >> i & 1 == 1 { upper[i] } else { 0.0 }).collect());
    }
    out
}

/// `ρ = (Q(x̂) − L)/d` with d the smallest nonzero ℓ1 distance to a candidate.
pub fn closed_form_rho(src: RhoSource<'_>, anchor: &[f64], q_val: f64, lower: f64) -> RhoEstimate {
    let pts = match src {
        RhoSource::Table(t) => &t.points[..],
        RhoSource::Candidates(c) => c,
    };
    match oracle::min_l1_distance(pts, anchor) {
        Some(d) => RhoEstimate {
            rho: ((q_val - lower) / d).max(0.0),
            method: RhoMethod::ClosedForm,
            d: Some(d),
            all_at_anchor: false,
        },
        None => RhoEstimate {
            rho: 1.0,
            method: RhoMethod::ClosedForm,
            d: None,
            all_at_anchor: true,
        },
    }
}

/// Reverse-norm dual value `min Q(x) + ρ‖x − x̂‖₁`, with exactness.
pub fn norm_dual(rec: &dyn Recourse, anchor: &[f64], rho: f64) -> Result<(f64, bool)> {
    let p = vec![-rho; anchor.len()];
    let inner = rec.relu_lagrangian(anchor, &p, &p)?;
    Ok((inner.value, inner.exact))
}

const BRACKET: f64 = 1e-3;

/// Smallest ρ (to a relative bracket of 1e-3, upper end returned) whose
/// reverse-norm dual reaches `Q(x̂)`.
pub fn binary_search_rho(rec: &dyn Recourse, anchor: &[f64], q_val: f64, lower: f64, rho_hi: f64) -> Result<RhoEstimate> {
    let gap = (q_val - lower).max(0.0);
    let saturated = |rho: f64| -> Result<bool> {
        let (v, _) = norm_dual(rec, anchor, rho)?;
        Ok(v >= q_val - 1e-9 * (1.0 + q_val.abs()))
    };
    let cap = 2f64.powi(20) * gap.max(1e-9);
    let mut hi = if rho_hi > 0.0 { rho_hi } else { gap.max(1.0) };
    let mut lo = 0.0;
    if saturated(0.0)? {
        // anchor minimizes Q; any positive probe works
        hi = hi.min(BRACKET);
        return Ok(RhoEstimate {
            rho: hi,
            method: RhoMethod::BinarySearch,
            d: None,
            all_at_anchor: false,
        });
    }
    while !saturated(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return Err(Error::NoFiniteRho);
        }
    }
    while hi - lo > BRACKET * hi {
        let mid = 0.5 * (lo + hi);
        if saturated(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(RhoEstimate {
        rho: hi,
        method: RhoMethod::BinarySearch,
        d: None,
        all_at_anchor: false,
    })
}

/// `θ ≥ Q(x̂) − ρ‖x − x̂‖₁`.
pub fn initial_mixed_cut(req: &CutRequest, rho: &RhoEstimate) -> ReluCut {
    ReluCut::norm_cut(&req.anchor, req.q_val, rho.rho, ScenarioTag::Scenario(req.scenario))
}
