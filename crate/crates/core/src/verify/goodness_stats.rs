use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dyadic_grid::{Cube, DyadicGrid, GoodnessParams, ShiftSeq};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodnessStatsConfig {
    pub samples: usize,
    pub seed: u64,
    /// Generation of `R`; the lattice top is generation 0.
    pub cube_gen: i32,
    /// Shift bits drawn below `R`, setting the resolution of the position statistic.
    pub position_bits: u32,
    pub bins: usize,
}

impl GoodnessStatsConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        GoodnessStatsConfig {
            samples,
            seed,
            cube_gen: 10,
            position_bits: 8,
            bins: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodnessStats {
    pub r: u32,
    pub gamma: f64,
    pub samples: usize,
    pub good: usize,
    pub pi_good: f64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub bin_good: Vec<usize>,
    pub bin_total: Vec<usize>,
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `pi_good` is 0 or 1, so the independence test is vacuous.
    pub degenerate: bool,
    pub seed: u64,
}

const CHUNK: usize = 1024;

/// Monte Carlo `pi_good` for a fixed cube under random shifts, with a chi-square test of
/// independence between goodness and the position of `R +. omega` inside its own side.
///
/// Sample `i` of chunk `c` uses the stream `c` of the seed, so results are thread-count independent
/// and equal seeds give common random numbers across `r`.
pub fn goodness_stats(params: &GoodnessParams, cfg: &GoodnessStatsConfig) -> Result<GoodnessStats> {
    if cfg.samples < 1000 {
        return Err(Error::Config(format!(
            "need at least 1000 samples, got {}",
            cfg.samples
        )));
    }
    if cfg.bins < 2 || cfg.bins > 1 << cfg.position_bits.min(20) {
        return Err(Error::Config("bins must be in 2..=2^position_bits".into()));
    }
    if cfg.cube_gen < 1 {
        return Err(Error::Config("cube generation must be positive".into()));
    }
    let dim = params.dim;
    let hi = cfg.cube_gen + cfg.position_bits as i32;
    let r_cube = Cube::new(cfg.cube_gen, vec![0; dim]);
    let chunks = cfg.samples.div_ceil(CHUNK);
    let partial: Vec<(Vec<usize>, Vec<usize>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(cfg.samples - c * CHUNK);
            let mut good = vec![0usize; cfg.bins];
            let mut total = vec![0usize; cfg.bins];
            for _ in 0..n {
                let omega = ShiftSeq::random(dim, 1, hi, &mut rng);
                let mut u = 0.0;
                for k in 1..=cfg.position_bits as i32 {
                    u += omega.bit(cfg.cube_gen + k, 0) as f64 * (2f64).powi(-k);
                }
                let bin = ((u * cfg.bins as f64) as usize).min(cfg.bins - 1);
                let grid = DyadicGrid::shifted(dim, 0, hi, omega, 1).expect("valid shifted grid");
                let q = Cube {
                    shift_id: 1,
                    ..r_cube.clone()
                };
                total[bin] += 1;
                if grid.is_good(&q, params, 0) {
                    good[bin] += 1;
                }
            }
            (good, total)
        })
        .collect();
    let mut bin_good = vec![0usize; cfg.bins];
    let mut bin_total = vec![0usize; cfg.bins];
    for (g, t) in partial {
        for b in 0..cfg.bins {
            bin_good[b] += g[b];
            bin_total[b] += t[b];
        }
    }
    let n = cfg.samples;
    let good: usize = bin_good.iter().sum();
    let pi = good as f64 / n as f64;
    let (ci_low, ci_high) = wilson(good, n);
    let degenerate = good == 0 || good == n;
    let (chi2, dof, p_value) = if degenerate {
        (0.0, 0, 1.0)
    } else {
        chi_square(&bin_good, &bin_total, pi)
    };
    Ok(GoodnessStats {
        r: params.r,
        gamma: params.gamma_f64(),
        samples: n,
        good,
        pi_good: pi,
        ci_low,
        ci_high,
        bin_good,
        bin_total,
        chi2,
        dof,
        p_value,
        degenerate,
        seed: cfg.seed,
    })
}

fn wilson(k: usize, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let low = if k == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let high = if k as f64 == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (low, high)
}

/// Pearson statistic of the `2 x bins` table against independence.
fn chi_square(good: &[usize], total: &[usize], pi: f64) -> (f64, usize, f64) {
    let mut chi2 = 0.0;
    let mut used = 0usize;
    for (&g, &t) in good.iter().zip(total) {
        if t == 0 {
            continue;
        }
        used += 1;
        let eg = pi * t as f64;
        let eb = (1.0 - pi) * t as f64;
        let b = (t - g) as f64;
        chi2 += (g as f64 - eg).powi(2) / eg + (b - eb).powi(2) / eb;
    }
    let dof = used.saturating_sub(1);
    if dof == 0 {
        return (chi2, 0, 1.0);
    }
    let p = ChiSquared::new(dof as f64)
        .map(|c| c.sf(chi2))
        .unwrap_or(1.0);
    (chi2, dof, p)
}
