use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic_grid::{Cube, DyadicGrid, GoodnessParams};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagResult {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub eta: f64,
    /// `2d 3^{d-1} / beta`, the constant the ratio stays under.
    pub bound: f64,
}

/// `eta = beta - gamma (beta + d)`.
pub fn offdiag_eta(beta: f64, params: &GoodnessParams) -> f64 {
    beta - params.gamma_f64() * (beta + params.dim as f64)
}

pub fn offdiag_bound(beta: f64, dim: usize) -> f64 {
    2.0 * dim as f64 * 3f64.powi(dim as i32 - 1) / beta
}

/// `int_{Top \ P} lQ^beta / d(y, Q)^{beta + d} dy` against `(lQ/lP)^eta`, where `Top` is the
/// ancestor of `P` at the grid's top generation and `d` is the `l^inf` distance.
pub fn offdiag_check(
    grid: &DyadicGrid,
    q: &Cube,
    p: &Cube,
    beta: f64,
    params: &GoodnessParams,
) -> Result<OffDiagResult> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta = {beta} must be positive")));
    }
    if !grid.contains_cube(q) || !grid.contains_cube(p) {
        return Err(Error::Precondition("cubes outside the grid".into()));
    }
    if q.gen - (params.r as i32) < p.gen || !grid.contains(p, q) {
        return Err(Error::Precondition("Q^(r) is not contained in P".into()));
    }
    if !grid.is_good(q, params, grid.top) {
        return Err(Error::Precondition("Q is not good".into()));
    }
    let (qlo, qhi) = grid.bounds_f64(q);
    let lq = q.side_f64();
    let mut lhs = 0.0;
    let mut cur = p.clone();
    while cur.gen > grid.top {
        let parent = grid.parent(&cur)?;
        for s in grid.children(&parent, 1)? {
            if s != cur {
                let (lo, hi) = grid.bounds_f64(&s);
                lhs += integrate_box(&lo, &hi, &qlo, &qhi, beta, 0);
            }
        }
        cur = parent;
    }
    lhs *= lq.powf(beta);
    let eta = offdiag_eta(beta, params);
    let rhs = (lq / p.side_f64()).powf(eta);
    Ok(OffDiagResult {
        lhs,
        rhs,
        ratio: lhs / rhs,
        eta,
        bound: offdiag_bound(beta, params.dim),
    })
}

fn box_distance(lo: &[f64], hi: &[f64], qlo: &[f64], qhi: &[f64]) -> f64 {
    (0..lo.len())
        .map(|i| (qlo[i] - hi[i]).max(lo[i] - qhi[i]).max(0.0))
        .fold(0.0, f64::max)
}

fn point_distance(y: &[f64], qlo: &[f64], qhi: &[f64]) -> f64 {
    (0..y.len())
        .map(|i| (qlo[i] - y[i]).max(y[i] - qhi[i]).max(0.0))
        .fold(0.0, f64::max)
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// `int_box d(y, Q)^{-(beta + d)} dy`, refined until boxes are small against their distance to `Q`.
fn integrate_box(lo: &[f64], hi: &[f64], qlo: &[f64], qhi: &[f64], beta: f64, level: u32) -> f64 {
    let d = lo.len();
    let side = hi[0] - lo[0];
    let dist = box_distance(lo, hi, qlo, qhi);
    if side * 8.0 > dist && level < 40 {
        let mut s = 0.0;
        for e in 0..1usize << d {
            let mut clo = lo.to_vec();
            let mut chi = hi.to_vec();
            for a in 0..d {
                let mid = 0.5 * (lo[a] + hi[a]);
                if e >> (d - 1 - a) & 1 == 1 {
                    clo[a] = mid;
                } else {
                    chi[a] = mid;
                }
            }
            s += integrate_box(&clo, &chi, qlo, qhi, beta, level + 1);
        }
        return s;
    }
    let half = 0.5 * side;
    let n = 3usize.pow(d as u32);
    let mut s = 0.0;
    let mut y = vec![0.0; d];
    for mut k in 0..n {
        let mut w = 1.0;
        for a in 0..d {
            let (x, wx) = GAUSS3[k % 3];
            k /= 3;
            y[a] = lo[a] + half * (1.0 + x);
            w *= wx;
        }
        s += w * point_distance(&y, qlo, qhi).powf(-(beta + d as f64));
    }
    s * half.powi(d as i32)
}

/// `n` pairs `(Q, P)` with `Q` good, `Q^{(r)} ⊆ P`, `Q` at generations up to the grid's finest.
pub fn random_admissible_pairs(
    grid: &DyadicGrid,
    params: &GoodnessParams,
    n: usize,
    seed: u64,
) -> Result<Vec<(Cube, Cube)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo_gen = grid.top + params.r as i32;
    if lo_gen > grid.finest {
        return Err(Error::Config("grid too shallow for r".into()));
    }
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 10_000 * n.max(1) {
            return Err(Error::Config("no admissible pairs found".into()));
        }
        let gen = rng.gen_range(lo_gen..=grid.finest);
        let top_cube = Cube {
            gen: grid.top,
            coords: vec![0; grid.dim],
            shift_id: grid.shift_id,
        };
        let rel = gen - grid.top;
        let mut q = top_cube;
        for _ in 0..rel {
            let kids = grid.children(&q, 1)?;
            q = kids[rng.gen_range(0..kids.len())].clone();
        }
        if !grid.is_good(&q, params, grid.top) {
            continue;
        }
        let k = rng.gen_range(params.r..=(gen - grid.top) as u32);
        let p = grid.ancestor(&q, k)?;
        out.push((q, p));
    }
    Ok(out)
}
