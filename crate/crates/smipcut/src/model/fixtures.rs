//! Small named instances and tables used throughout the tests.

use super::{ReluCut, Scenario, ScenarioTag, SmipInstance, SparseMatrix, VarKind};

fn int(n: usize) -> Vec<VarKind> {
    vec![VarKind::Integer; n]
}

fn no_rows(n: usize) -> SparseMatrix {
    SparseMatrix::new(0, n)
}

/// Scenario `min y : y ≥ slope·x + off, y ∈ Z ∩ [0, ymax]` over a scalar x.
fn affine_floor(slope: f64, off: f64, ymax: f64, prob: f64) -> Scenario {
    Scenario {
        q: vec![1.0],
        w: SparseMatrix::from_dense(&[vec![1.0]], 1),
        t: SparseMatrix::from_dense(&[vec![-slope]], 1),
        h: vec![off],
        y_kinds: int(1),
        y_bounds: vec![(0.0, ymax)],
        prob,
    }
}

/// Encodes an arbitrary recourse table as a scenario: one binary λ per point,
/// `Σλ = 1` and `Σ λ_k x^k = x`, cost `Σ λ_k Q(x^k)`.
pub fn table_scenario(points: &[Vec<f64>], values: &[f64], prob: f64) -> Scenario {
    let k = points.len();
    let n = points[0].len();
    let mut w = SparseMatrix::new(2 + 2 * n, k);
    let mut t = SparseMatrix::new(2 + 2 * n, n);
    let mut h = vec![1.0, -1.0];
    for j in 0..k {
        w.push(0, j, 1.0);
        w.push(1, j, -1.0);
    }
    for i in 0..n {
        for (j, p) in points.iter().enumerate() {
            w.push(2 + 2 * i, j, p[i]);
            w.push(3 + 2 * i, j, -p[i]);
        }
        t.push(2 + 2 * i, i, -1.0);
        t.push(3 + 2 * i, i, 1.0);
        h.extend([0.0, 0.0]);
    }
    Scenario {
        q: values.to_vec(),
        w,
        t,
        h,
        y_kinds: int(k),
        y_bounds: vec![(0.0, 1.0); k],
        prob,
    }
}

/// `min −x + ½Q₁(x) + ½Q₂(x)`, x ∈ {0,1,2}, with `Q₁ = ⌈x/2 + 1⌉` and
/// `Q₂ = max(⌈2x − 1⌉, 0)`. Optimal value 1/2.
pub fn fix1() -> SmipInstance {
    SmipInstance::new(
        vec![-1.0],
        no_rows(1),
        vec![],
        int(1),
        vec![(0.0, 2.0)],
        vec![affine_floor(0.5, 1.0, 10.0, 0.5), affine_floor(2.0, -1.0, 10.0, 0.5)],
    )
    .expect("fix1 is well formed")
}

/// Seven points with an isolated deep minimum at (1, 2).
pub fn fix2_points() -> (Vec<Vec<f64>>, Vec<f64>) {
    let pts = [
        ([0.0, 0.0], 0.0),
        ([0.0, 1.0], 1.0),
        ([2.0, 1.0], 1.0),
        ([0.0, 3.0], 3.0),
        ([2.0, 3.0], 3.0),
        ([1.0, 4.0], 4.0),
        ([1.0, 2.0], -10.0),
    ];
    (pts.iter().map(|p| p.0.to_vec()).collect(), pts.iter().map(|p| p.1).collect())
}

/// Eleven-point table whose facet cut at (1, 2) is asymmetric.
pub fn fix3_points() -> (Vec<Vec<f64>>, Vec<f64>) {
    let pts = [
        ([0.0, 1.0], 3.0),
        ([0.0, 2.0], 2.0),
        ([0.0, 3.0], 1.0),
        ([1.0, 0.0], 5.0),
        ([1.0, 1.0], 7.5),
        ([1.0, 2.0], 10.0),
        ([1.0, 3.0], 5.5),
        ([1.0, 4.0], 1.0),
        ([2.0, 1.0], 5.0),
        ([2.0, 2.0], 4.0),
        ([2.0, 3.0], 3.0),
    ];
    (pts.iter().map(|p| p.0.to_vec()).collect(), pts.iter().map(|p| p.1).collect())
}

/// `θ ≥ 10 − 6(x₁−1)⁺ − 8(x₁−1)⁻ − 4.5(x₂−2)⁺ − 2.5(x₂−2)⁻` on the fix3 table.
pub fn fix3_cut() -> ReluCut {
    ReluCut {
        anchor: vec![1.0, 2.0],
        intercept: 10.0,
        pi_plus: vec![-6.0, -4.5],
        pi_minus: vec![-8.0, -2.5],
        scenario: ScenarioTag::Scenario(0),
    }
}

/// Values of the two fix4 recourse functions on {0,1,2,3}.
pub fn fix4_tables() -> [Vec<f64>; 2] {
    [vec![0.0, 1.0, 1.0, 0.0], vec![4.0, 1.0, 1.0, 4.0]]
}

/// x ∈ {0,..,3}, c = 0, two equiprobable table scenarios; optimum 1 at x ∈ {1,2}.
pub fn fix4() -> SmipInstance {
    let pts: Vec<Vec<f64>> = (0..4).map(|k| vec![k as f64]).collect();
    let [q1, q2] = fix4_tables();
    SmipInstance::new(
        vec![0.0],
        no_rows(1),
        vec![],
        int(1),
        vec![(0.0, 3.0)],
        vec![table_scenario(&pts, &q1, 0.5), table_scenario(&pts, &q2, 0.5)],
    )
    .expect("fix4 is well formed")
}

/// Second stage `min 2y₁ + 2y₂ : 0.2y₁ + y₂ ≥ 2.4 − x₁ − 0.5x₂, y ∈ {0,1,2}²`.
pub fn fix6_scenario() -> Scenario {
    Scenario {
        q: vec![2.0, 2.0],
        w: SparseMatrix::from_dense(&[vec![0.2, 1.0]], 2),
        t: SparseMatrix::from_dense(&[vec![1.0, 0.5]], 2),
        h: vec![2.4],
        y_kinds: int(2),
        y_bounds: vec![(0.0, 2.0); 2],
        prob: 1.0,
    }
}

/// Binary x ∈ {0,1}², c = 0, one scenario (fix6_scenario).
pub fn fix6() -> SmipInstance {
    SmipInstance::new(
        vec![0.0, 0.0],
        no_rows(2),
        vec![],
        int(2),
        vec![(0.0, 1.0); 2],
        vec![fix6_scenario()],
    )
    .expect("fix6 is well formed")
}

/// `Q(x) = min{y : y ≥ x₁ + x₂, y ∈ Z}`, x₁ ∈ {0,1,2}, x₂ ∈ [0,2], c = 0.
pub fn fixmi() -> SmipInstance {
    SmipInstance::new(
        vec![0.0, 0.0],
        no_rows(2),
        vec![],
        vec![VarKind::Integer, VarKind::Continuous],
        vec![(0.0, 2.0); 2],
        vec![Scenario {
            q: vec![1.0],
            w: SparseMatrix::from_dense(&[vec![1.0]], 1),
            t: SparseMatrix::from_dense(&[vec![-1.0, -1.0]], 2),
            h: vec![0.0],
            y_kinds: int(1),
            y_bounds: vec![(0.0, 4.0)],
            prob: 1.0,
        }],
    )
    .expect("fixmi is well formed")
}

/// `Q(x) = min{y : y ≥ x, y ∈ Z}` over x ∈ {0,..,B}.
pub fn ceil_identity(b: u32) -> SmipInstance {
    SmipInstance::new(
        vec![0.0],
        no_rows(1),
        vec![],
        int(1),
        vec![(0.0, b as f64)],
        vec![affine_floor(1.0, 0.0, b as f64, 1.0)],
    )
    .expect("ceil_identity is well formed")
}

/// Seeded random instance with integer first stage `x ∈ {0..upper}ⁿ` and
/// `scenarios` equiprobable scenarios. Each scenario has two bounded integer
/// recourse variables and an expensive continuous slack, so recourse is
/// always complete while the LP relaxation keeps an integrality gap.
pub fn random_small(seed: u64, n: usize, upper: u32, scenarios: usize) -> SmipInstance {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
    let rows = 2;
    let scen = (0..scenarios)
        .map(|_| {
            let mut w = SparseMatrix::new(rows, 3);
            let mut t = SparseMatrix::new(rows, n);
            let mut h = Vec::with_capacity(rows);
            for r in 0..rows {
                for j in 0..2 {
                    w.push(r, j, rng.gen_range(1..=3) as f64);
                }
                w.push(r, 2, 1.0);
                for i in 0..n {
                    let v = rng.gen_range(-2..=2);
                    if v != 0 {
                        t.push(r, i, v as f64);
                    }
                }
                h.push(rng.gen_range(1..=6) as f64 + 0.5 * rng.gen_range(0..2) as f64);
            }
            Scenario {
                q: vec![rng.gen_range(1..=4) as f64, rng.gen_range(1..=4) as f64, 10.0],
                w,
                t,
                h,
                y_kinds: vec![VarKind::Integer, VarKind::Integer, VarKind::Continuous],
                y_bounds: vec![(0.0, 4.0), (0.0, 4.0), (0.0, f64::INFINITY)],
                prob: 1.0 / scenarios as f64,
            }
        })
        .collect();
    SmipInstance::new(c, no_rows(n), vec![], int(n), vec![(0.0, upper as f64); n], scen).expect("random_small is well formed")
}

/// Instances addressable by name from the command line.
pub const NAMED: [&str; 4] = ["fix1", "fix4", "fix6", "fixmi"];

pub fn by_name(name: &str) -> Option<SmipInstance> {
    match name {
        "fix1" => Some(fix1()),
        "fix4" => Some(fix4()),
        "fix6" => Some(fix6()),
        "fixmi" => Some(fixmi()),
        _ => None,
    }
}
