use serde::{Deserialize, Serialize};

use crate::decomposition::{check_sparse, SparseCollection, SparseEntry, SparseReport, Witness};
use crate::error::{Error, Result};
use crate::grid_fn::{tree, GridFunction, Integrator};
use crate::operators::{
    dyadic_form, dyadic_square_profile, maximal_3d_profile, sparse_form, HaarEnergy, SquareVariant,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub j: u32,
    pub c_initial: f64,
    pub c_final: f64,
    pub doublings: u32,
    pub cubes: usize,
    /// Some cover cube is a finest cell.
    pub reaches_floor: bool,
    pub sparse: SparseReport,
    /// `int M^{3D} g (S_j f)^2`, exterior annuli included with the lower bound for `M^{3D} g`.
    pub integral: f64,
    /// `Lambda` over the cover.
    pub lambda: f64,
    /// `integral / ((1 + j)^2 lambda)`.
    pub ratio: f64,
    /// `B_j(g, f)`.
    pub form: f64,
}

#[derive(Clone, Debug)]
pub struct SparseCover {
    pub collection: SparseCollection,
    pub report: CoverReport,
}

struct Local<'a> {
    dim: usize,
    depth: u32,
    root_gen: i32,
    j: u32,
    energy: &'a HaarEnergy<f64>,
    fi: &'a Integrator<f64>,
    gi: &'a Integrator<f64>,
}

impl Local<'_> {
    fn volume(&self, level: u32) -> f64 {
        (2f64).powi(-(self.root_gen + level as i32) * self.dim as i32)
    }

    /// Tree neighbours at `level` of cube `idx` that stay inside `(kq, iq)`.
    fn neighbours_inside(&self, level: u32, idx: usize, kq: u32, iq: usize) -> Vec<usize> {
        let c = tree::decode(self.dim, level, idx);
        let n = 1i64 << level;
        let mut out = Vec::with_capacity(3usize.pow(self.dim as u32));
        'outer: for mut k in 0..3usize.pow(self.dim as u32) {
            let mut nc = vec![0u64; self.dim];
            for a in (0..self.dim).rev() {
                let v = c[a] as i64 + (k % 3) as i64 - 1;
                k /= 3;
                if v < 0 || v >= n {
                    continue 'outer;
                }
                nc[a] = v as u64;
            }
            let ni = tree::encode(level, &nc);
            if tree::ancestor_index(self.dim, level, ni, kq) == iq {
                out.push(ni);
            }
        }
        out
    }

    /// `(S_Q)^2` and `M_Q` on the cells of `(kq, iq)`, listed in `cells_of` order.
    fn operators(&self, kq: u32, iq: usize, cells: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let mut s2 = vec![0.0; cells.len()];
        for p in (kq + self.j)..self.depth {
            let vol = self.volume(p);
            for (v, &c) in s2.iter_mut().zip(cells) {
                let a = tree::ancestor_index(self.dim, self.depth, c, p);
                *v += self.energy.at(p as i32, a) / vol;
            }
        }
        let three = 3f64.powi(self.dim as i32);
        let mut m = vec![0.0f64; cells.len()];
        for l in kq..=self.depth {
            let at_level = tree::cells_of(self.dim, l, kq, iq);
            let denom = three * self.volume(l);
            let mut avg = std::collections::HashMap::with_capacity(at_level.len());
            for &k in &at_level {
                let s: f64 = self
                    .neighbours_inside(l, k, kq, iq)
                    .into_iter()
                    .map(|nk| self.gi.level_integral(l, nk))
                    .sum();
                avg.insert(k, s / denom);
            }
            let mut best = std::collections::HashMap::with_capacity(at_level.len());
            for &x in &at_level {
                let b = self
                    .neighbours_inside(l, x, kq, iq)
                    .into_iter()
                    .map(|k| avg[&k])
                    .fold(0.0, f64::max);
                best.insert(x, b);
            }
            for (v, &c) in m.iter_mut().zip(cells) {
                *v = v.max(best[&tree::ancestor_index(self.dim, self.depth, c, l)]);
            }
        }
        (s2, m)
    }

    /// Exceptional set of `(kq, iq)` at constant `c`, as a mask over `cells`.
    fn exceptional(&self, kq: u32, iq: usize, cells: &[usize], c: f64) -> Vec<bool> {
        let vol = self.volume(kq);
        let avg_f = self.fi.level_integral(kq, iq) / vol;
        let avg_g = self.gi.level_integral(kq, iq) / vol;
        let (s2, m) = self.operators(kq, iq, cells);
        let tf = c * (1.0 + self.j as f64) * avg_f;
        let tg = c * avg_g;
        s2.iter()
            .zip(&m)
            .map(|(&s, &mm)| s > tf * tf || mm > tg)
            .collect()
    }
}

/// Maximal tree cubes inside `(kq, iq)` all of whose cells are exceptional.
fn maximal_full(
    dim: usize,
    depth: u32,
    kq: u32,
    iq: usize,
    bad: &std::collections::HashSet<usize>,
) -> Vec<(u32, usize)> {
    let mut out = Vec::new();
    let mut stack: Vec<(u32, usize)> = (0..1usize << dim)
        .map(|e| (kq + 1, tree::child_index(dim, kq, iq, e)))
        .collect();
    while let Some((l, i)) = stack.pop() {
        let cells = tree::cells_of(dim, depth, l, i);
        let n = cells.iter().filter(|c| bad.contains(c)).count();
        if n == cells.len() {
            out.push((l, i));
        } else if n > 0 && l < depth {
            stack.extend((0..1usize << dim).map(|e| (l + 1, tree::child_index(dim, l, i, e))));
        }
    }
    out.sort_unstable();
    out
}

/// A `1/2`-sparse cover of the root for the pair `(f, g)` at offset `j`.
///
/// Each cube `Q` gets the localized operators `S_Q` (cubes `P` with `P^{(j)} ⊆ Q`) and
/// `M_Q` (enlarged averages of `g 1_Q` over `K ⊆ Q`); its children are the maximal cubes of
/// `{S_Q > C (1+j) <|f|>_Q} ∪ {M_Q > C <|g|>_Q}` and the witness is the rest of `Q`.
/// `C` starts at `c0` and doubles, restarting the whole construction, until every exceptional set
/// has at most half the measure of its cube.
pub fn build_sparse_cover(
    f: &GridFunction<f64>,
    g: &GridFunction<f64>,
    j: u32,
    c0: f64,
    k_top: u32,
) -> Result<SparseCover> {
    f.ensure_same_layout(g)?;
    if !(c0 >= 1.0) || !c0.is_finite() {
        return Err(Error::Config(format!(
            "cover constant must be at least 1, got {c0}"
        )));
    }
    let (dim, depth) = (f.dim(), f.depth());
    if depth < j + 1 {
        return Err(Error::Resolution(format!(
            "depth {depth} cannot resolve j = {j}"
        )));
    }
    let energy = HaarEnergy::new(f, 0)?;
    let fi = f.abs().integrator();
    let gi = g.abs().integrator();
    let local = Local {
        dim,
        depth,
        root_gen: f.root().gen,
        j,
        energy: &energy,
        fi: &fi,
        gi: &gi,
    };

    let mut c = c0;
    let mut doublings = 0;
    let entries = loop {
        match cover_at(&local, c)? {
            Some(e) => break e,
            None => {
                c *= 2.0;
                doublings += 1;
                if doublings > 60 {
                    return Err(Error::Precondition("cover constant diverged".into()));
                }
            }
        }
    };
    let reaches_floor = entries.iter().any(|(l, _, _)| *l == depth);
    let entries: Vec<SparseEntry> = entries
        .into_iter()
        .map(|(l, i, cells)| SparseEntry {
            cube: f.tree_cube(l, i),
            witness: Witness {
                cells: cells.into_iter().map(|c| (c as u32, 1)).collect(),
                exterior: Vec::new(),
            },
        })
        .collect();
    let collection = SparseCollection {
        dim,
        depth,
        root: f.root().clone(),
        unit_bits: 0,
        tau: 0.5,
        entries,
    };
    let sparse = check_sparse(&collection);
    let cubes = collection.cubes();
    let lambda = sparse_form(&cubes, f, g)?;
    let integral = domination_integral(f, g, j, k_top)?;
    let scale = (1.0 + j as f64).powi(2) * lambda;
    let ratio = if integral == 0.0 {
        0.0
    } else {
        integral / scale
    };
    let form = dyadic_form(g, f, j, k_top)?;
    Ok(SparseCover {
        report: CoverReport {
            j,
            c_initial: c0,
            c_final: c,
            doublings,
            cubes: cubes.len(),
            reaches_floor,
            sparse,
            integral,
            lambda,
            ratio,
            form,
        },
        collection,
    })
}

type RawEntry = (u32, usize, Vec<usize>);

fn cover_at(local: &Local<'_>, c: f64) -> Result<Option<Vec<RawEntry>>> {
    let mut out = Vec::new();
    let mut stack = vec![(0u32, 0usize)];
    while let Some((kq, iq)) = stack.pop() {
        let cells = tree::cells_of(local.dim, local.depth, kq, iq);
        let mask = local.exceptional(kq, iq, &cells, c);
        let nbad = mask.iter().filter(|&&b| b).count();
        if 2 * nbad > cells.len() {
            return Ok(None);
        }
        let bad: std::collections::HashSet<usize> = cells
            .iter()
            .zip(&mask)
            .filter(|(_, &b)| b)
            .map(|(&c, _)| c)
            .collect();
        let witness = cells
            .iter()
            .zip(&mask)
            .filter(|(_, &b)| !b)
            .map(|(&c, _)| c)
            .collect();
        out.push((kq, iq, witness));
        if nbad > 0 {
            stack.extend(maximal_full(local.dim, local.depth, kq, iq, &bad));
        }
    }
    out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Ok(Some(out))
}

/// `int M^{3D} g (S_j f)^2` over the root and the exterior annuli.
pub fn domination_integral(
    f: &GridFunction<f64>,
    g: &GridFunction<f64>,
    j: u32,
    k_top: u32,
) -> Result<f64> {
    let s = dyadic_square_profile(f, j, SquareVariant::Plain, k_top)?;
    let m = maximal_3d_profile(g, k_top)?;
    let vol = f.cell_volume_f64();
    let mut total: f64 = s
        .interior
        .values()
        .iter()
        .zip(m.interior.values())
        .map(|(a, b)| a * b * vol)
        .sum();
    let root_vol = f.root().volume_f64();
    let d = f.dim() as i32;
    for (k, (se, me)) in s.exterior.iter().zip(&m.exterior).enumerate() {
        let mm = k as i32 + 1;
        let annulus = root_vol * ((2f64).powi(mm * d) - (2f64).powi((mm - 1) * d));
        total += se * me * annulus;
    }
    Ok(total)
}
