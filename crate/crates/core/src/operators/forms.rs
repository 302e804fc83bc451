use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::grid_fn::{tree, GridFunction, Integrator};
use crate::scalar::{Real, Scalar};

use super::dyadic_sf::{lattice_near_root, HaarEnergy};

/// `B_0 = sum_P <f, h_P>^2 <|g|>_{3P}` over tree cubes and the ancestors up to `k_top`.
pub fn diagonal_form<T: Real>(g: &GridFunction<T>, f: &GridFunction<T>, k_top: u32) -> Result<T> {
    f.ensure_same_layout(g)?;
    let en = HaarEnergy::new(f, k_top)?;
    let gi = g.abs().integrator();
    let mut s = T::zero();
    for m in (1..=k_top).rev() {
        s = s + en.at(-(m as i32), 0) * gi.enlarged_average(&f.root().std_ancestor(m))?;
    }
    for k in 0..f.depth() {
        for i in 0..tree::level_len(f.dim(), k) {
            let e = en.at(k as i32, i);
            if e != T::zero() {
                s = s + e * gi.enlarged_average(&f.tree_cube(k, i))?;
            }
        }
    }
    Ok(s)
}

/// Energy of the block `ch_j(Q)` for a cube `Q` at relative level `q` meeting the root.
fn block_energy<T: Real>(en: &HaarEnergy<T>, q: i32, index: usize, j: u32) -> T {
    let p = q + j as i32;
    if p < 0 {
        en.at(p, 0)
    } else if q < 0 {
        (0..tree::level_len(en.dim, p as u32)).fold(T::zero(), |a, i| a + en.at(p, i))
    } else {
        tree::cells_of(en.dim, p as u32, q as u32, index)
            .into_iter()
            .fold(T::zero(), |a, i| a + en.at(p, i))
    }
}

fn locate_rel(root: &Cube, depth: u32, q: &Cube) -> Result<Option<(i32, usize)>> {
    use crate::grid_fn::{tree_locate, Location};
    Ok(match tree_locate(root.dim(), depth, root, q)? {
        Location::Inside { level, index } => Some((level as i32, index)),
        Location::ContainsRoot => Some((q.gen - root.gen, 0)),
        Location::Disjoint => None,
    })
}

/// `B_j = sum_K <|g|>_{3K} sum_{P ⊂ 3K, lP = 2^{-j} lK} <f, h_P>^2`, `K` over the truncated lattice.
pub fn enlarged_form<T: Real>(
    g: &GridFunction<T>,
    f: &GridFunction<T>,
    j: u32,
    k_top: u32,
) -> Result<T> {
    f.ensure_same_layout(g)?;
    if f.depth() < j + 1 {
        return Err(Error::Resolution(format!(
            "depth {} cannot resolve j = {j}",
            f.depth()
        )));
    }
    let en = HaarEnergy::new(f, k_top)?;
    let gi = g.abs().integrator();
    let mut s = T::zero();
    for q in -(k_top as i32)..=(f.depth() as i32 - 1 - j as i32) {
        for k in lattice_near_root(f.root(), q) {
            let mut inner = T::zero();
            for nb in k.neighbours() {
                if let Some((lvl, idx)) = locate_rel(f.root(), f.depth(), &nb)? {
                    inner = inner + block_energy(&en, lvl, idx, j);
                }
            }
            if inner != T::zero() {
                s = s + gi.enlarged_average(&k)? * inner;
            }
        }
    }
    Ok(s)
}

/// `c(P) = sum_{K : P ⊂ 3K, lK = 2^j lP} <|g|>_{3K}`, i.e. over the neighbours of `P^{(j)}`.
fn neighbour_weight<T: Real>(gi: &Integrator<T>, anc: &Cube) -> Result<T> {
    let mut s = T::zero();
    for k in anc.neighbours() {
        s = s + gi.enlarged_average(&k)?;
    }
    Ok(s)
}

/// `B_j` evaluated as `int sum_P c(P) <f,h_P>^2 |P|^{-1} 1_P`: density per cell, then integrated,
/// with the ancestors' mass outside the root added per annulus.
pub fn enlarged_form_cellwise<T: Real>(
    g: &GridFunction<T>,
    f: &GridFunction<T>,
    j: u32,
    k_top: u32,
) -> Result<T> {
    let (inside, outside) = cellwise_parts(g, f, j, k_top)?;
    Ok(inside + outside)
}

/// The part of `B_j` (in its integral form) living outside the root.
pub fn form_outside_root<T: Real>(
    g: &GridFunction<T>,
    f: &GridFunction<T>,
    j: u32,
    k_top: u32,
) -> Result<T> {
    Ok(cellwise_parts(g, f, j, k_top)?.1)
}

fn cellwise_parts<T: Real>(
    g: &GridFunction<T>,
    f: &GridFunction<T>,
    j: u32,
    k_top: u32,
) -> Result<(T, T)> {
    f.ensure_same_layout(g)?;
    if f.depth() < j + 1 {
        return Err(Error::Resolution(format!(
            "depth {} cannot resolve j = {j}",
            f.depth()
        )));
    }
    let en = HaarEnergy::new(f, k_top)?;
    let gi = g.abs().integrator();
    let dim = f.dim();
    let root = f.root();
    let mut density = vec![T::zero(); f.len()];
    let mut outside = T::zero();
    let root_vol = f.root_volume();
    for p in (j as i32 - k_top as i32)..=(f.depth() as i32 - 1) {
        let vol = T::pow2(-(root.gen + p) * dim as i32);
        if p < 0 {
            let cube = root.std_ancestor((-p) as u32);
            let anc = root.std_ancestor((j as i32 - p) as u32);
            let v = neighbour_weight(&gi, &anc)? * en.at(p, 0) / vol;
            density.iter_mut().for_each(|d| *d = *d + v);
            outside = outside + v * (T::pow2(-cube.gen * dim as i32) - root_vol);
        } else {
            for i in 0..tree::level_len(dim, p as u32) {
                let e = en.at(p, i);
                if e == T::zero() {
                    continue;
                }
                let anc = if p >= j as i32 {
                    f.tree_cube(
                        (p - j as i32) as u32,
                        tree::ancestor_index(dim, p as u32, i, (p - j as i32) as u32),
                    )
                } else {
                    root.std_ancestor((j as i32 - p) as u32)
                };
                let v = neighbour_weight(&gi, &anc)? * e / vol;
                for c in tree::cells_of(dim, f.depth(), p as u32, i) {
                    density[c] = density[c] + v;
                }
            }
        }
    }
    let cv = f.cell_volume();
    let inside = density.iter().fold(T::zero(), |a, &d| a + d * cv);
    Ok((inside, outside))
}

/// `B_0` for `j = 0`, the enlarged form `B_j` otherwise.
pub fn dyadic_form<T: Real>(
    g: &GridFunction<T>,
    f: &GridFunction<T>,
    j: u32,
    k_top: u32,
) -> Result<T> {
    if j == 0 {
        diagonal_form(g, f, k_top)
    } else {
        enlarged_form(g, f, j, k_top)
    }
}

/// `Lambda_S(g, f) = sum_S <|g|>_S <|f|>_S^2 |S|`.
pub fn sparse_form<T: Scalar>(
    cubes: &[Cube],
    f: &GridFunction<T>,
    g: &GridFunction<T>,
) -> Result<T> {
    f.ensure_same_layout(g)?;
    let fi = f.abs().integrator();
    let gi = g.abs().integrator();
    let mut s = T::zero();
    for q in cubes {
        let af = fi.cube_average(q)?;
        let ag = gi.cube_average(q)?;
        s = s + ag * af * af * fi.volume_of_gen(q.gen);
    }
    Ok(s)
}
