use serde::{Deserialize, Serialize};

use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::grid_fn::{tree, tree_locate, GridFunction, Location};
use crate::haar::{haar_coefficient_with, HaarCoefficients, HaarIndex};
use crate::scalar::{Real, Scalar};

/// `e(P) = sum_eps <f, h_P^eps>^2` for tree cubes and for the ancestors `Q0^{(m)}`, `m = 1..=k_top`.
#[derive(Clone, Debug)]
pub struct HaarEnergy<T> {
    pub dim: usize,
    pub depth: u32,
    pub root: Cube,
    pub k_top: u32,
    pub tree: Vec<Vec<T>>,
    pub ancestors: Vec<T>,
}

impl<T: Real> HaarEnergy<T> {
    pub fn new(f: &GridFunction<T>, k_top: u32) -> Result<Self> {
        let integ = f.integrator();
        let coeffs = HaarCoefficients::from_integrator(&integ, f.root().clone());
        let tree = (0..f.depth())
            .map(|k| {
                (0..tree::level_len(f.dim(), k))
                    .map(|i| coeffs.energy(k, i))
                    .collect()
            })
            .collect();
        let mut ancestors = Vec::with_capacity(k_top as usize);
        for m in 1..=k_top {
            let cube = f.root().std_ancestor(m);
            let mut e = T::zero();
            for eps in 1..(1u32 << f.dim()) {
                let c = haar_coefficient_with(
                    &integ,
                    &HaarIndex {
                        cube: cube.clone(),
                        signature: eps,
                    },
                )?;
                e = e + c * c;
            }
            ancestors.push(e);
        }
        Ok(HaarEnergy {
            dim: f.dim(),
            depth: f.depth(),
            root: f.root().clone(),
            k_top,
            tree,
            ancestors,
        })
    }

    /// Energy of the cube at relative level `level` (negative: the ancestor `-level` up).
    pub fn at(&self, level: i32, index: usize) -> T {
        if level < 0 {
            self.ancestors[(-level - 1) as usize]
        } else {
            self.tree[level as usize][index]
        }
    }

    fn volume(&self, level: i32) -> T {
        T::pow2(-(self.root.gen + level) * self.dim as i32)
    }
}

/// A function on the root plus constant values on the exterior annuli `Q0^{(m)} \ Q0^{(m-1)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareProfile<T> {
    pub interior: GridFunction<T>,
    pub exterior: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareVariant {
    /// `S_j^D`.
    Plain,
    /// `S_j^{3D}`.
    Enlarged,
}

struct Acc<'a, T> {
    en: &'a HaarEnergy<T>,
    j: u32,
    interior: Vec<T>,
    exterior: Vec<T>,
}

impl<T: Real> Acc<'_, T> {
    fn add_cube(&mut self, level: i32, index: usize, value: T) {
        if level < 0 {
            self.interior.iter_mut().for_each(|v| *v = *v + value);
            for e in self.exterior.iter_mut().take((-level) as usize) {
                *e = *e + value;
            }
        } else {
            for c in tree::cells_of(self.en.dim, self.en.depth, level as u32, index) {
                self.interior[c] = self.interior[c] + value;
            }
        }
    }

    /// Adds `sum_{P in ch_j(Q)} e(P)/|P| 1_P` for the cube `Q` at `level` meeting the root.
    fn add_block(&mut self, level: i32, index: usize) {
        let p = level + self.j as i32;
        let vol = self.en.volume(p);
        if p < 0 {
            let e = self.en.at(p, 0);
            self.add_cube(p, 0, e / vol);
        } else if level < 0 {
            for i in 0..tree::level_len(self.en.dim, p as u32) {
                let e = self.en.at(p, i);
                self.add_cube(p, i, e / vol);
            }
        } else {
            for i in tree::cells_of(self.en.dim, p as u32, level as u32, index) {
                let e = self.en.at(p, i);
                self.add_cube(p, i, e / vol);
            }
        }
    }
}

/// `(S_j f)^2` on the root and the exterior annuli, with the lattice truncated `k_top` generations above the root.
pub fn dyadic_square_profile<T: Real>(
    f: &GridFunction<T>,
    j: u32,
    variant: SquareVariant,
    k_top: u32,
) -> Result<SquareProfile<T>> {
    if f.depth() < j + 1 {
        return Err(Error::Resolution(format!(
            "depth {} cannot resolve j = {j}",
            f.depth()
        )));
    }
    let en = HaarEnergy::new(f, k_top)?;
    let mut acc = Acc {
        en: &en,
        j,
        interior: vec![T::zero(); f.len()],
        exterior: vec![T::zero(); k_top as usize],
    };
    let lo = -(k_top as i32);
    let hi = f.depth() as i32 - 1 - j as i32;
    let dim = f.dim();
    match variant {
        SquareVariant::Plain => {
            for q in lo..=hi {
                if q < 0 {
                    acc.add_block(q, 0);
                } else {
                    for i in 0..tree::level_len(dim, q as u32) {
                        acc.add_block(q, i);
                    }
                }
            }
        }
        SquareVariant::Enlarged => {
            for q in lo..=hi {
                for r in lattice_near_root(f.root(), q) {
                    for nb in r.neighbours() {
                        match tree_locate(dim, f.depth(), f.root(), &nb)? {
                            Location::Inside { level, index } => acc.add_block(level as i32, index),
                            Location::ContainsRoot => acc.add_block(q, 0),
                            Location::Disjoint => {}
                        }
                    }
                }
            }
        }
    }
    Ok(SquareProfile {
        interior: f.with_values(acc.interior)?,
        exterior: acc.exterior,
    })
}

/// Every lattice cube at relative level `q` whose `3`-fold enlargement meets the root.
pub(crate) fn lattice_near_root(root: &Cube, q: i32) -> Vec<Cube> {
    let d = root.dim();
    let base: Cube = if q >= 0 {
        Cube::new(root.gen + q, root.coords.iter().map(|c| c << q).collect())
    } else {
        root.std_ancestor((-q) as u32)
    };
    let n: i64 = if q >= 0 { 1i64 << q } else { 1 };
    let span = (n + 2) as usize;
    let count = span.pow(d as u32);
    let mut out = Vec::with_capacity(count);
    for mut k in 0..count {
        let mut off = vec![0i64; d];
        for o in off.iter_mut().rev() {
            *o = (k % span) as i64 - 1;
            k /= span;
        }
        out.push(base.translated(&off));
    }
    out
}

/// `S_j f` (plain or enlarged) on the root.
pub fn dyadic_square_function<T: Real>(
    f: &GridFunction<T>,
    j: u32,
    variant: SquareVariant,
    k_top: u32,
) -> Result<GridFunction<T>> {
    Ok(dyadic_square_profile(f, j, variant, k_top)?
        .interior
        .map(|v| v.sqrt()))
}

/// `M^{3D} g` on the root; `exterior[m-1]` is `max <|g|>_{3Q}` over lattice `Q ⊇ Q0^{(m)}`-neighbours,
/// a lower bound for `M^{3D} g` on the annulus `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalProfile<T> {
    pub interior: GridFunction<T>,
    pub exterior: Vec<T>,
}

pub fn maximal_3d_profile<T: Scalar>(g: &GridFunction<T>, k_top: u32) -> Result<MaximalProfile<T>> {
    let integ = g.abs().integrator();
    let dim = g.dim();
    let depth = g.depth();
    let mut best = vec![T::zero(); g.len()];
    let offsets: Vec<Vec<i64>> = Cube::new(0, vec![0; dim])
        .neighbours()
        .into_iter()
        .map(|c| c.coords)
        .collect();
    for k in 0..=depth {
        let n = 1i64 << k;
        let span = (n + 2) as usize;
        // <|g|>_{3Q} for Q with relative coords in [-1, n]^d.
        let cubes = lattice_near_root(g.root(), k as i32);
        let mut avg3 = Vec::with_capacity(cubes.len());
        for q in &cubes {
            avg3.push(integ.enlarged_average(q)?);
        }
        for (cell, b) in best.iter_mut().enumerate() {
            let anc = tree::decode(dim, k, tree::ancestor_index(dim, depth, cell, k));
            let mut m = *b;
            for offs in &offsets {
                let flat = anc.iter().zip(offs).fold(0usize, |acc, (&c, &o)| {
                    acc * span + (c as i64 + o + 1) as usize
                });
                m = m.max_of(avg3[flat]);
            }
            *b = m;
        }
    }
    let total = integ.total_integral();
    let three_d = T::of_usize(3usize.pow(dim as u32));
    let mut exterior = Vec::with_capacity(k_top as usize);
    for m in 1..=k_top {
        let v = total / (three_d * T::pow2(-(g.root().gen - m as i32) * dim as i32));
        if m == 1 {
            best.iter_mut().for_each(|b| *b = b.max_of(v));
        }
        exterior.push(v);
    }
    Ok(MaximalProfile {
        interior: g.with_values(best)?,
        exterior,
    })
}

/// `M^{3D} g(x) = sup_Q <|g|>_{3Q} 1_{3Q}(x)` on the root.
pub fn maximal_3d<T: Scalar>(g: &GridFunction<T>, k_top: u32) -> Result<GridFunction<T>> {
    Ok(maximal_3d_profile(g, k_top)?.interior)
}
