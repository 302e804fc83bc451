//! Muckenhoupt characteristics and the weighted square-function experiment.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::grid_fn::{generate, lp_norm, tree, Generator, GridFunction};
use crate::operators::{square_function, KernelSpec, TimeGrid};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubeFamily {
    /// Tree cubes of the root.
    Dyadic,
    /// Every cube of dyadic side with corners on the finest-cell lattice, inside the root.
    Lattice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub p: f64,
    pub characteristic: f64,
    /// Lower corner (in finest cells) and side (in cells) of the maximising cube.
    pub argmax_corner: Vec<u64>,
    pub argmax_side_cells: u64,
    /// The maximiser as a dyadic cube when it is one.
    pub argmax_cube: Option<Cube>,
    pub cube_family: CubeFamily,
}

/// d-dimensional summed-area table with `(n+1)^d` entries.
struct Prefix {
    dim: usize,
    n: usize,
    table: Vec<f64>,
}

impl Prefix {
    fn new(vals: &[f64], dim: usize, n: usize) -> Self {
        let m = n + 1;
        let mut table = vec![0.0; m.pow(dim as u32)];
        for (idx, &v) in vals.iter().enumerate() {
            let mut t = idx;
            let mut pos = 0usize;
            let mut coords = vec![0usize; dim];
            for c in coords.iter_mut().rev() {
                *c = t % n;
                t /= n;
            }
            for &c in &coords {
                pos = pos * m + c + 1;
            }
            table[pos] = v;
        }
        for axis in 0..dim {
            let stride = m.pow((dim - 1 - axis) as u32);
            for pos in 0..table.len() {
                if (pos / stride) % m != 0 {
                    table[pos] += table[pos - stride];
                }
            }
        }
        Prefix { dim, n, table }
    }

    /// Sum over the box `[lo, lo + side)` in cell coordinates.
    fn box_sum(&self, lo: &[usize], side: usize) -> f64 {
        let m = self.n + 1;
        let mut s = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut pos = 0usize;
            let mut sign = 1.0;
            for (i, &l) in lo.iter().enumerate() {
                let hi = (corner >> (self.dim - 1 - i)) & 1 == 1;
                pos = pos * m + if hi { l + side } else { l };
                if !hi {
                    sign = -sign;
                }
            }
            s += sign * self.table[pos];
        }
        s
    }
}

/// `[w]_{A_p} = sup_Q <w>_Q <w^{-1/(p-1)}>_Q^{p-1}` over the chosen family.
pub fn ap_characteristic<T: Real>(
    w: &GridFunction<T>,
    p: f64,
    family: CubeFamily,
) -> Result<ApReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p = {p} must exceed 1")));
    }
    if w.values().iter().any(|&v| !(v > T::zero())) {
        return Err(Error::Domain(
            "weight must be positive on every cell".into(),
        ));
    }
    let dim = w.dim();
    let depth = w.depth();
    let wv: Vec<f64> = w.values().iter().map(|v| v.as_f64()).collect();
    let sv: Vec<f64> = wv.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
    let mut best = (f64::NEG_INFINITY, vec![0u64; dim], 0u64);
    let mut consider = |lo: Vec<u64>, side: u64, sw: f64, ss: f64| {
        let cells = (side as f64).powi(dim as i32);
        let c = (sw / cells) * (ss / cells).powf(p - 1.0);
        if c > best.0 {
            best = (c, lo, side);
        }
    };
    match family {
        CubeFamily::Dyadic => {
            let wi = GridFunction::<f64>::new(dim, depth, w.root().clone(), wv)?.integrator();
            let si = GridFunction::<f64>::new(dim, depth, w.root().clone(), sv)?.integrator();
            for k in 0..=depth {
                let side = 1u64 << (depth - k);
                for i in 0..tree::level_len(dim, k) {
                    let lo = tree::decode(dim, k, i).iter().map(|c| c * side).collect();
                    consider(lo, side, wi.level_sum(k, i), si.level_sum(k, i));
                }
            }
        }
        CubeFamily::Lattice => {
            let n = 1usize << depth;
            let pw = Prefix::new(&wv, dim, n);
            let ps = Prefix::new(&sv, dim, n);
            for k in 0..=depth {
                let side = 1usize << (depth - k);
                let span = n - side + 1;
                let count = span.pow(dim as u32);
                for mut t in 0..count {
                    let mut lo = vec![0usize; dim];
                    for l in lo.iter_mut().rev() {
                        *l = t % span;
                        t /= span;
                    }
                    let (a, b) = (pw.box_sum(&lo, side), ps.box_sum(&lo, side));
                    consider(lo.iter().map(|&x| x as u64).collect(), side as u64, a, b);
                }
            }
        }
    }
    let (characteristic, corner, side) = best;
    let level = depth - side.trailing_zeros();
    let aligned = corner.iter().all(|c| c % side == 0);
    let argmax_cube = aligned.then(|| {
        let local: Vec<u64> = corner.iter().map(|c| c / side).collect();
        w.tree_cube(level, tree::encode(level, &local))
    });
    Ok(ApReport {
        p,
        characteristic,
        argmax_corner: corner,
        argmax_side_cells: side,
        argmax_cube,
        cube_family: family,
    })
}

/// One weight of the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightCase {
    pub label: String,
    pub beta: Option<f64>,
    pub weight: GridFunction<f64>,
}

impl WeightCase {
    /// `|x - c|^beta` on the given tree.
    pub fn power(beta: f64, center: Vec<f64>, dim: usize, depth: u32, root: Cube) -> Result<Self> {
        let weight = generate(&Generator::PowerWeight { beta, center }, dim, depth, root)?;
        Ok(WeightCase {
            label: format!("power({beta})"),
            beta: Some(beta),
            weight,
        })
    }
}

/// Test inputs for `R(w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputFamily {
    /// Indicators and Haar atoms of the dyadic cubes at `levels` containing `center`, and
    /// `w^{-1/(p-1)}` times those indicators.
    Adversarial {
        center: Vec<f64>,
        levels: Vec<u32>,
    },
    Custom {
        inputs: Vec<GridFunction<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub label: String,
    pub beta: Option<f64>,
    pub characteristic: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub p: f64,
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub degenerate: bool,
    pub rows: Vec<FitRow>,
    pub reference_exponent: f64,
    pub reference_curve: Vec<(f64, f64)>,
    pub exploratory: bool,
}

/// `max{1/2, 1/(p-1)}`.
pub fn reference_exponent(p: f64) -> f64 {
    (0.5f64).max(1.0 / (p - 1.0))
}

fn adversarial_inputs(
    w: &GridFunction<f64>,
    p: f64,
    center: &[f64],
    levels: &[u32],
) -> Result<Vec<GridFunction<f64>>> {
    let dim = w.dim();
    let sigma = w.map(|v| v.powf(-1.0 / (p - 1.0)));
    let mut out = Vec::new();
    for &k in levels {
        if k >= w.depth() {
            continue;
        }
        let side = (2f64).powi(-(w.root().gen + k as i32));
        let coords: Vec<i64> = center.iter().map(|c| (c / side).floor() as i64).collect();
        let q = Cube::new(w.root().gen + k as i32, coords);
        if w.indicator_mask(&q)?.iter().all(|m| !m) {
            continue;
        }
        let ind = generate::<f64>(
            &Generator::Indicator { cube: q.clone() },
            dim,
            w.depth(),
            w.root().clone(),
        )?;
        out.push(sigma.zip_with(&ind, |a, b| a * b)?);
        out.push(ind);
        out.push(generate(
            &Generator::HaarAtom {
                cube: q,
                signature: (1 << dim) - 1,
            },
            dim,
            w.depth(),
            w.root().clone(),
        )?);
    }
    Ok(out)
}

/// Fits `log R(w)` against `log [w]_{A_p}`.
pub fn sharp_exponent_experiment(
    spec: &KernelSpec,
    tg: &TimeGrid,
    p: f64,
    family: CubeFamily,
    weights: &[WeightCase],
    inputs: &InputFamily,
) -> Result<FitReport> {
    if weights.len() < 3 {
        return Err(Error::Config(format!(
            "need at least 3 weights, got {}",
            weights.len()
        )));
    }
    let rows: Vec<Result<FitRow>> = weights
        .par_iter()
        .map(|wc| {
            let ap = ap_characteristic(&wc.weight, p, family)?;
            let fs = match inputs {
                InputFamily::Adversarial { center, levels } => {
                    adversarial_inputs(&wc.weight, p, center, levels)?
                }
                InputFamily::Custom { inputs } => inputs.clone(),
            };
            let mut ratio = 0.0f64;
            for f in &fs {
                let den = lp_norm(f, p, Some(&wc.weight))?;
                if den > 0.0 {
                    let sf = square_function(f, spec, tg)?;
                    ratio = ratio.max(lp_norm(&sf, p, Some(&wc.weight))? / den);
                }
            }
            Ok(FitRow {
                label: wc.label.clone(),
                beta: wc.beta,
                characteristic: ap.characteristic,
                ratio,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.characteristic.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ratio.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let degenerate = sxx <= 1e-24 * n;
    let slope = if degenerate { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (intercept + slope * x))
        .collect();
    Ok(FitReport {
        p,
        slope,
        intercept,
        residuals,
        degenerate,
        rows,
        reference_exponent: reference_exponent(p),
        reference_curve: [2.0, 3.0]
            .iter()
            .map(|&q| (q, reference_exponent(q)))
            .collect(),
        exploratory: true,
    })
}

/// CSV rows `beta,characteristic,ratio`.
pub fn write_fit_csv<W: Write>(report: &FitReport, mut w: W) -> Result<()> {
    writeln!(w, "label,beta,characteristic,ratio")?;
    for r in &report.rows {
        let beta = r.beta.map(|b| b.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{:e},{:e}",
            r.label, beta, r.characteristic, r.ratio
        )?;
    }
    Ok(())
}
