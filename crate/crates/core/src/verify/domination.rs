use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cover::{build_sparse_cover, CoverReport};
use super::random::random_pair;
use crate::decomposition::{
    build_stopping_family, check_sparse, SparseCollection, SparseReport, StoppingOptions,
};
use crate::error::Result;
use crate::grid_fn::GridFunction;
use crate::operators::{bilinear_lhs_breakdown, sparse_form, KernelSpec, LhsBreakdown, TimeGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationConfig {
    pub kernel: KernelSpec,
    pub samples_per_octave: usize,
    pub k_top: u32,
    pub stopping: StoppingOptions,
    /// Initial cover constant.
    pub c0: f64,
    pub j_max: u32,
}

impl DominationConfig {
    pub fn default_for(dim: usize) -> Self {
        DominationConfig {
            kernel: KernelSpec::builtin(dim),
            samples_per_octave: 4,
            k_top: 4,
            stopping: StoppingOptions::default_for(dim),
            c0: 1.0,
            j_max: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub cubes: usize,
    pub sparse: SparseReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub lhs: LhsBreakdown,
    pub rhs: f64,
    /// `lhs / rhs`; `0` when both vanish.
    pub ratio: f64,
    pub stopping: FamilySummary,
    pub parents: FamilySummary,
    pub covers: Vec<CoverReport>,
    pub union: FamilySummary,
    /// Fitted `c` in `B_j <~ 2^{-c j}` over `j >= 1`, if at least two positive values exist.
    pub decay_c: Option<f64>,
    pub passed: bool,
}

/// Builds the stopping family, its parents and the sparse covers for `j = 0..=j_max`, certifies
/// their union as one sparse family `S` and compares the square function form with `Lambda_S`.
pub fn verify_domination(
    f: &GridFunction<f64>,
    g: &GridFunction<f64>,
    cfg: &DominationConfig,
) -> Result<DominationReport> {
    f.ensure_same_layout(g)?;
    let tg = TimeGrid::for_function(f, cfg.samples_per_octave, cfg.k_top);
    let lhs = bilinear_lhs_breakdown(f, g, &cfg.kernel, &tg)?;

    let forest = build_stopping_family(f, g, f.root(), &cfg.stopping)?;
    let stop = forest.sparse_collection();
    let parents = stop.parents()?;
    let j_max = cfg.j_max.min(f.depth().saturating_sub(1));
    let mut covers = Vec::new();
    let mut cover_sets: Vec<SparseCollection> = Vec::new();
    for j in 0..=j_max {
        let c = build_sparse_cover(f, g, j, cfg.c0, cfg.k_top)?;
        covers.push(c.report);
        cover_sets.push(c.collection);
    }
    let mut parts: Vec<&SparseCollection> = vec![&stop, &parents];
    parts.extend(cover_sets.iter());
    let union = SparseCollection::union_certified(&parts)?;
    let rhs = sparse_form(&union.cubes(), f, g)?;
    let ratio = if lhs.total == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs.total / rhs
    };

    let summary = |c: &SparseCollection| FamilySummary {
        cubes: c.len(),
        sparse: check_sparse(c),
    };
    let stopping = summary(&stop);
    let parents_s = summary(&parents);
    let union_s = summary(&union);
    let decay_c = fit_decay(&covers);
    let passed = stopping.sparse.passed
        && parents_s.sparse.passed
        && union_s.sparse.passed
        && covers.iter().all(|c| c.sparse.passed)
        && ratio.is_finite();
    Ok(DominationReport {
        lhs,
        rhs,
        ratio,
        stopping,
        parents: parents_s,
        covers,
        union: union_s,
        decay_c,
        passed,
    })
}

/// Least-squares slope of `-log2 B_j` against `j` over `j >= 1`.
fn fit_decay(covers: &[CoverReport]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = covers
        .iter()
        .filter(|c| c.j >= 1 && c.form > 0.0)
        .map(|c| (c.j as f64, -c.form.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    Some(least_squares(&pts).0)
}

/// `(slope, intercept)` of the least-squares line.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub seed: u64,
    pub ratio: f64,
    pub union_cubes: usize,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationStudy {
    pub dim: usize,
    pub depth: u32,
    pub rows: Vec<StudyRow>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub spread: f64,
}

/// `verify_domination` over seeded random pairs, in parallel.
pub fn domination_study(
    seeds: &[u64],
    dim: usize,
    depth: u32,
    cfg: &DominationConfig,
) -> Result<DominationStudy> {
    let rows: Vec<StudyRow> = seeds
        .par_iter()
        .map(|&seed| {
            let (f, g) = random_pair(seed, dim, depth)?;
            let r = verify_domination(&f, &g, cfg)?;
            Ok(StudyRow {
                seed,
                ratio: r.ratio,
                union_cubes: r.union.cubes,
                certified: r.passed,
            })
        })
        .collect::<Result<_>>()?;
    let mut sorted: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    sorted.sort_by(f64::total_cmp);
    let max_ratio = sorted.last().copied().unwrap_or(0.0);
    let median_ratio = median(&sorted);
    let spread = if median_ratio > 0.0 {
        max_ratio / median_ratio
    } else {
        f64::INFINITY
    };
    Ok(DominationStudy {
        dim,
        depth,
        rows,
        max_ratio,
        median_ratio,
        spread,
    })
}

pub(crate) fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
