//! Haar coefficients, martingale differences, conditional expectations and
//! stopping-tree projections.

mod projection;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::grid_fn::{tree, GridFunction, Integrator, Location};
use crate::scalar::{Real, Scalar};

pub use projection::{conditional_expectation, haar_projection, ProjectionMode, StoppingSigma};

/// `(I, eps)`; bit `d-1-i` of `signature` is the component of `eps` along axis `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HaarIndex {
    pub cube: Cube,
    pub signature: u32,
}

impl HaarIndex {
    pub fn new(cube: Cube, signature: u32) -> Result<Self> {
        let d = cube.dim();
        if signature == 0 || signature >= (1 << d) {
            return Err(Error::Domain(format!(
                "signature {signature} not in 1..2^{d}"
            )));
        }
        Ok(HaarIndex { cube, signature })
    }
}

/// `(-1)^{|eps & e|}`.
#[inline]
pub fn haar_sign(signature: usize, e: usize) -> i32 {
    if (signature & e).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `<f, h_I^eps>` from an existing pyramid.
pub fn haar_coefficient_with<T: Real>(integ: &Integrator<T>, idx: &HaarIndex) -> Result<T> {
    let dim = integ.dim();
    let norm = integ.volume_of_gen(idx.cube.gen).sqrt().recip();
    match integ.locate(&idx.cube)? {
        Location::Inside { level, index } => {
            if level >= integ.depth() {
                return Err(Error::Resolution(
                    "Haar coefficient at the finest generation".into(),
                ));
            }
            let mut s = T::zero();
            for e in 0..(1usize << dim) {
                let v = integ.level_integral(level + 1, tree::child_index(dim, level, index, e));
                s = if haar_sign(idx.signature as usize, e) > 0 {
                    s + v
                } else {
                    s - v
                };
            }
            Ok(s * norm)
        }
        Location::ContainsRoot => {
            let root = integ.root();
            let child = root.std_ancestor((root.gen - idx.cube.gen - 1) as u32);
            let e = child
                .coords
                .iter()
                .zip(&idx.cube.coords)
                .fold(0usize, |acc, (c, p)| (acc << 1) | (c - 2 * p) as usize);
            let v = integ.total_integral() * norm;
            Ok(if haar_sign(idx.signature as usize, e) > 0 {
                v
            } else {
                -v
            })
        }
        Location::Disjoint => Ok(T::zero()),
    }
}

/// `<f, h_I^eps>`, for any standard lattice cube with resolvable children.
pub fn haar_coefficient<T: Real>(f: &GridFunction<T>, idx: &HaarIndex) -> Result<T> {
    haar_coefficient_with(&f.integrator(), idx)
}

/// Every Haar coefficient of the tree, plus the root mean.
///
/// `coeffs[k][i * (2^d - 1) + eps - 1]` for tree cube `(k, i)`, `k < depth`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HaarCoefficients<T> {
    pub dim: usize,
    pub depth: u32,
    pub root: Cube,
    pub mean: T,
    pub coeffs: Vec<Vec<T>>,
}

impl<T: Real> HaarCoefficients<T> {
    pub fn analyze(f: &GridFunction<T>) -> Self {
        Self::from_integrator(&f.integrator(), f.root().clone())
    }

    pub fn from_integrator(integ: &Integrator<T>, root: Cube) -> Self {
        let dim = integ.dim();
        let depth = integ.depth();
        let ne = (1usize << dim) - 1;
        let mut coeffs = Vec::with_capacity(depth as usize);
        let mut child = vec![T::zero(); 1 << dim];
        for k in 0..depth {
            let norm = integ.volume_of_gen(root.gen + k as i32).sqrt().recip();
            let n = tree::level_len(dim, k);
            let mut lvl = vec![T::zero(); n * ne];
            for i in 0..n {
                for (e, c) in child.iter_mut().enumerate() {
                    *c = integ.level_integral(k + 1, tree::child_index(dim, k, i, e));
                }
                for eps in 1..=ne {
                    let mut s = T::zero();
                    for (e, &c) in child.iter().enumerate() {
                        s = if haar_sign(eps, e) > 0 { s + c } else { s - c };
                    }
                    lvl[i * ne + eps - 1] = s * norm;
                }
            }
            coeffs.push(lvl);
        }
        let mean = integ.total_integral() / integ.volume_of_gen(root.gen);
        HaarCoefficients {
            dim,
            depth,
            root,
            mean,
            coeffs,
        }
    }

    pub fn signatures(&self) -> usize {
        (1usize << self.dim) - 1
    }

    pub fn coefficient(&self, k: u32, index: usize, signature: u32) -> T {
        self.coeffs[k as usize][index * self.signatures() + signature as usize - 1]
    }

    /// `sum_eps <f, h_P^eps>^2` for tree cube `(k, i)`.
    pub fn energy(&self, k: u32, index: usize) -> T {
        let ne = self.signatures();
        self.coeffs[k as usize][index * ne..(index + 1) * ne]
            .iter()
            .map(|&c| c * c)
            .sum()
    }

    /// `sum <f,h>^2 + <f>_{Q0}^2 |Q0|`, which equals `||f||_2^2` on the tree.
    pub fn parseval_energy(&self) -> T {
        let vol = T::pow2(-self.root.gen * self.dim as i32);
        let s: T = self
            .coeffs
            .iter()
            .flat_map(|l| l.iter())
            .map(|&c| c * c)
            .sum();
        s + self.mean * self.mean * vol
    }

    /// Inverse transform: rebuilds cell values from the mean and the coefficients.
    pub fn synthesize(&self) -> Result<GridFunction<T>> {
        let dim = self.dim;
        let mut avg = vec![self.mean];
        for k in 0..self.depth {
            let norm = T::pow2(-(self.root.gen + k as i32) * dim as i32)
                .sqrt()
                .recip();
            let ne = self.signatures();
            let mut next = vec![T::zero(); tree::level_len(dim, k + 1)];
            for (i, &a) in avg.iter().enumerate() {
                let c = &self.coeffs[k as usize][i * ne..(i + 1) * ne];
                for e in 0..(1usize << dim) {
                    let mut s = T::zero();
                    for (eps, &ce) in c.iter().enumerate() {
                        s = if haar_sign(eps + 1, e) > 0 {
                            s + ce
                        } else {
                            s - ce
                        };
                    }
                    next[tree::child_index(dim, k, i, e)] = a + s * norm;
                }
            }
            avg = next;
        }
        GridFunction::new(dim, self.depth, self.root.clone(), avg)
    }

    /// CSV rows `gen,coord_0..coord_{d-1},eps,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let coords: Vec<String> = (0..self.dim).map(|i| format!("coord_{i}")).collect();
        writeln!(w, "gen,{},eps,value", coords.join(","))?;
        let ne = self.signatures();
        for k in 0..self.depth {
            for i in 0..tree::level_len(self.dim, k) {
                let c = tree::decode(self.dim, k, i);
                let abs: Vec<String> = c
                    .iter()
                    .zip(&self.root.coords)
                    .map(|(&l, &r)| ((r << k) + l as i64).to_string())
                    .collect();
                for eps in 1..=ne {
                    let v = self.coeffs[k as usize][i * ne + eps - 1];
                    writeln!(
                        w,
                        "{},{},{},{:e}",
                        self.root.gen + k as i32,
                        abs.join(","),
                        eps,
                        v.as_f64()
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// `Delta_I f = sum_{J in ch(I)} (<f>_J - <f>_I) 1_J`.
pub fn martingale_difference<T: Scalar>(
    f: &GridFunction<T>,
    cube: &Cube,
) -> Result<GridFunction<T>> {
    let integ = f.integrator();
    let Location::Inside { level, index } = integ.locate(cube)? else {
        return Err(Error::Domain(
            "martingale difference needs a cube inside the root".into(),
        ));
    };
    if level >= f.depth() {
        return Err(Error::Resolution(
            "martingale difference at the finest generation".into(),
        ));
    }
    let dim = f.dim();
    let parent = integ.level_average(level, index);
    let mut vals = vec![T::zero(); f.len()];
    for cell in tree::cells_of(dim, f.depth(), level, index) {
        let child = tree::ancestor_index(dim, f.depth(), cell, level + 1);
        vals[cell] = integ.level_average(level + 1, child) - parent;
    }
    f.with_values(vals)
}

/// `<f>_{Q0} 1_{Q0} + sum_I Delta_I f`, computed through the coefficient synthesis.
pub fn reconstruct<T: Real>(f: &GridFunction<T>) -> Result<GridFunction<T>> {
    HaarCoefficients::analyze(f).synthesize()
}
