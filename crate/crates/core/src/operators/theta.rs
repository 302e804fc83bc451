use serde::{Deserialize, Serialize};

use super::kernel::{KernelSpec, Profile};
use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::grid_fn::{tree, GridFunction};
use crate::scalar::Real;

/// One quadrature node of `dt/t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSample {
    pub t: f64,
    pub weight: f64,
    /// The Whitney generation `j` with `t` in `[2^{-j-1}, 2^{-j})`.
    pub whitney_gen: i32,
}

/// Midpoint rule in `log t`: `samples_per_octave` nodes in each Whitney interval
/// of generations `gen_lo..=gen_hi` (absolute), each of weight `ln 2 / M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub samples_per_octave: usize,
    pub gen_lo: i32,
    pub gen_hi: i32,
}

impl TimeGrid {
    /// Covers `[2^{1-J} lQ0, 2^{k_top} lQ0]` for a root of generation `root_gen`.
    pub fn new(root_gen: i32, depth: u32, samples_per_octave: usize, k_top: u32) -> Self {
        TimeGrid {
            samples_per_octave,
            gen_lo: root_gen - k_top as i32,
            gen_hi: root_gen + depth as i32 - 2,
        }
    }

    pub fn for_function<T>(f: &GridFunction<T>, samples_per_octave: usize, k_top: u32) -> Self
    where
        T: crate::scalar::Scalar,
    {
        Self::new(f.root().gen, f.depth(), samples_per_octave, k_top)
    }

    pub fn with_generations(mut self, lo: i32, hi: i32) -> Self {
        self.gen_lo = lo;
        self.gen_hi = hi;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.samples_per_octave == 0 || self.gen_lo > self.gen_hi
    }

    pub fn node(&self, j: i32, m: usize) -> f64 {
        (2f64).powf(-(j as f64) - (m as f64 + 0.5) / self.samples_per_octave as f64)
    }

    pub fn samples(&self) -> Vec<TimeSample> {
        let w = std::f64::consts::LN_2 / self.samples_per_octave.max(1) as f64;
        let mut out = Vec::new();
        for j in self.gen_lo..=self.gen_hi {
            for m in 0..self.samples_per_octave {
                out.push(TimeSample {
                    t: self.node(j, m),
                    weight: w,
                    whitney_gen: j,
                });
            }
        }
        out
    }
}

/// `T_s f(x) = s^{-d} int L((x-y)/s) f(y) dy` at cell centres, exactly, one axis at a time.
fn tent_smooth<T: Real>(vals: &[T], dim: usize, depth: u32, sigma: T) -> Vec<T> {
    let n = 1usize << depth;
    let mut cur = vals.to_vec();
    let mut next = vec![T::zero(); vals.len()];
    let mut line = vec![T::zero(); n];
    let mut out = vec![T::zero(); n];
    let mut p0 = vec![T::zero(); n + 1];
    let mut p1 = vec![T::zero(); n + 1];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let outer = n.pow(axis as u32);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * n * stride + inner;
                for (c, l) in line.iter_mut().enumerate() {
                    *l = cur[base + c * stride];
                }
                smooth_line(&line, &mut p0, &mut p1, sigma, &mut out);
                for (c, &v) in out.iter().enumerate() {
                    next[base + c * stride] = v;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// One-dimensional tent average of a step function with unit cells.
fn smooth_line<T: Real>(v: &[T], p0: &mut [T], p1: &mut [T], sigma: T, out: &mut [T]) {
    let n = v.len();
    let half = T::of_f64(0.5);
    p0[0] = T::zero();
    p1[0] = T::zero();
    for i in 0..n {
        p0[i + 1] = p0[i] + v[i];
        p1[i + 1] = p1[i] + v[i] * (T::of_usize(i) + half);
    }
    let nf = T::of_usize(n);
    let cum = |a: T| -> (T, T) {
        if a <= T::zero() {
            return (T::zero(), T::zero());
        }
        if a >= nf {
            return (p0[n], p1[n]);
        }
        let i = a.floor();
        let k = i.to_usize().unwrap_or(0).min(n - 1);
        (
            p0[k] + v[k] * (a - i),
            p1[k] + v[k] * (a * a - i * i) * half,
        )
    };
    for (c, o) in out.iter_mut().enumerate() {
        let x = T::of_usize(c) + half;
        let (fa, ma) = cum(x - sigma);
        let (fx, mx) = cum(x);
        let (fb, mb) = cum(x + sigma);
        let (fl, fr) = (fx - fa, fb - fx);
        let ml = (mx - ma) - x * fl;
        let mr = (mb - mx) - x * fr;
        *o = (fl + ml / sigma + fr - mr / sigma) / sigma;
    }
}

fn check_resolution<T: Real>(f: &GridFunction<T>, t: f64) -> Result<()> {
    if !(t >= 2.0 * f.cell_side_f64() * (1.0 - 1e-12)) {
        return Err(Error::Resolution(format!(
            "t = {t} below two cells ({})",
            2.0 * f.cell_side_f64()
        )));
    }
    Ok(())
}

/// `theta_t f = psi_t * f` at cell centres.
pub fn theta_apply<T: Real>(
    f: &GridFunction<T>,
    t: f64,
    spec: &KernelSpec,
) -> Result<GridFunction<T>> {
    check_resolution(f, t)?;
    if spec.dim != f.dim() {
        return Err(Error::Config("kernel dimension mismatch".into()));
    }
    if spec.profile == Profile::Zero {
        return GridFunction::zeros(f.dim(), f.depth(), f.root().clone());
    }
    let sigma = T::of_f64(t / f.cell_side_f64());
    let a = tent_smooth(f.values(), f.dim(), f.depth(), sigma);
    let b = tent_smooth(f.values(), f.dim(), f.depth(), sigma + sigma);
    f.with_values(a.iter().zip(&b).map(|(&x, &y)| x - y).collect())
}

/// Calls `visit(sample, theta_t f)` for every node, reusing `T_{2t} = T_{t'}` across octaves.
fn for_each_theta<T: Real>(
    f: &GridFunction<T>,
    spec: &KernelSpec,
    tg: &TimeGrid,
    mut visit: impl FnMut(&TimeSample, &[T]),
) -> Result<()> {
    if tg.is_empty() {
        return Err(Error::Config("empty time grid".into()));
    }
    if spec.dim != f.dim() {
        return Err(Error::Config("kernel dimension mismatch".into()));
    }
    check_resolution(f, tg.node(tg.gen_hi, tg.samples_per_octave - 1))?;
    let w = std::f64::consts::LN_2 / tg.samples_per_octave as f64;
    if spec.profile == Profile::Zero {
        let zeros = vec![T::zero(); f.len()];
        for s in tg.samples() {
            visit(&s, &zeros);
        }
        return Ok(());
    }
    let h = f.cell_side_f64();
    let mut theta = vec![T::zero(); f.len()];
    for m in 0..tg.samples_per_octave {
        let mut prev = tent_smooth(
            f.values(),
            f.dim(),
            f.depth(),
            T::of_f64(tg.node(tg.gen_lo - 1, m) / h),
        );
        for j in tg.gen_lo..=tg.gen_hi {
            let t = tg.node(j, m);
            let cur = tent_smooth(f.values(), f.dim(), f.depth(), T::of_f64(t / h));
            for ((o, &a), &b) in theta.iter_mut().zip(&cur).zip(&prev) {
                *o = a - b;
            }
            visit(
                &TimeSample {
                    t,
                    weight: w,
                    whitney_gen: j,
                },
                &theta,
            );
            prev = cur;
        }
    }
    Ok(())
}

/// `(Sf)^2 = sum_t w_t |theta_t f|^2` on the root.
pub fn square_function_sq<T: Real>(
    f: &GridFunction<T>,
    spec: &KernelSpec,
    tg: &TimeGrid,
) -> Result<GridFunction<T>> {
    let mut acc = vec![T::zero(); f.len()];
    for_each_theta(f, spec, tg, |s, th| {
        let w = T::of_f64(s.weight);
        for (a, &v) in acc.iter_mut().zip(th) {
            *a = *a + w * v * v;
        }
    })?;
    f.with_values(acc)
}

pub fn square_function<T: Real>(
    f: &GridFunction<T>,
    spec: &KernelSpec,
    tg: &TimeGrid,
) -> Result<GridFunction<T>> {
    let sq = square_function_sq(f, spec, tg)?;
    Ok(sq.map(|v| v.sqrt()))
}

/// `int (Sf)^2 |g|` split by Whitney generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LhsBreakdown {
    pub total: f64,
    pub per_generation: Vec<(i32, f64)>,
    /// Part with `t > lQ0`.
    pub above_root: f64,
}

pub fn bilinear_lhs_breakdown<T: Real>(
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    spec: &KernelSpec,
    tg: &TimeGrid,
) -> Result<LhsBreakdown> {
    f.ensure_same_layout(g)?;
    let vol = f.cell_volume();
    let ag: Vec<T> = g.values().iter().map(|v| v.abs() * vol).collect();
    let ngen = (tg.gen_hi - tg.gen_lo + 1).max(0) as usize;
    let mut per = vec![T::zero(); ngen];
    for_each_theta(f, spec, tg, |s, th| {
        let mut acc = T::zero();
        for (&v, &gw) in th.iter().zip(&ag) {
            acc = acc + v * v * gw;
        }
        per[(s.whitney_gen - tg.gen_lo) as usize] =
            per[(s.whitney_gen - tg.gen_lo) as usize] + acc * T::of_f64(s.weight);
    })?;
    let total = per.iter().fold(T::zero(), |a, &b| a + b).as_f64();
    let above_root = per
        .iter()
        .enumerate()
        .filter(|(i, _)| tg.gen_lo + (*i as i32) < f.root().gen)
        .fold(0.0, |a, (_, v)| a + v.as_f64());
    Ok(LhsBreakdown {
        total,
        per_generation: per
            .iter()
            .enumerate()
            .map(|(i, v)| (tg.gen_lo + i as i32, v.as_f64()))
            .collect(),
        above_root,
    })
}

/// `<(Sf)^2, |g|>` over the root.
pub fn bilinear_lhs<T: Real>(
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    spec: &KernelSpec,
    tg: &TimeGrid,
) -> Result<T> {
    f.ensure_same_layout(g)?;
    let sq = square_function_sq(f, spec, tg)?;
    let vol = f.cell_volume();
    Ok(sq
        .values()
        .iter()
        .zip(g.values())
        .fold(T::zero(), |a, (&s, &gv)| a + s * gv.abs() * vol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestingParams {
    pub dim: usize,
    pub depth: u32,
    pub samples_per_octave: usize,
    /// Only cubes with at least `2^{min_relative_depth}` cells per side are sampled.
    pub min_relative_depth: u32,
}

impl TestingParams {
    pub fn new(dim: usize, depth: u32, samples_per_octave: usize) -> Self {
        TestingParams {
            dim,
            depth,
            samples_per_octave,
            min_relative_depth: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestingEntry {
    pub cube: Cube,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestingReport {
    pub value: f64,
    pub per_cube: Vec<TestingEntry>,
}

/// Max over sampled dyadic `Q` of `|Q|^{-1} int_Q int_0^{lQ} |theta_t 1_Q|^2 dt/t dx`.
pub fn testing_constant(spec: &KernelSpec, params: &TestingParams) -> Result<TestingReport> {
    let d = params.dim;
    let root = Cube::unit(d);
    let top_level = params.depth.saturating_sub(params.min_relative_depth);
    let mut per_cube = Vec::new();
    for k in 0..=top_level {
        let mut picks = vec![vec![0u64; d]];
        if k >= 1 {
            picks.push(vec![1u64 << (k - 1); d]);
        }
        for local in picks {
            let idx = tree::encode(k, &local);
            let f = GridFunction::<f64>::zeros(d, params.depth, root.clone())?;
            let q = f.tree_cube(k, idx);
            let mask = f.indicator_mask(&q)?;
            let ind = f.with_values(mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect())?;
            let tg = TimeGrid {
                samples_per_octave: params.samples_per_octave,
                gen_lo: q.gen,
                gen_hi: params.depth as i32 - 2,
            };
            let sq = square_function_sq(&ind, spec, &tg)?;
            let vol = ind.cell_volume_f64();
            let s: f64 = sq
                .values()
                .iter()
                .zip(&mask)
                .filter(|(_, &m)| m)
                .map(|(&v, _)| v * vol)
                .sum();
            per_cube.push(TestingEntry {
                cube: q.clone(),
                value: s / q.volume_f64(),
            });
        }
    }
    let value = per_cube.iter().map(|e| e.value).fold(0.0, f64::max);
    Ok(TestingReport { value, per_cube })
}
