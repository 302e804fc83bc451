//! Piecewise-constant functions on the finest generation of a rooted dyadic tree.

mod generate;
mod integrate;
pub mod io;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub use generate::{generate, Generator};
pub use integrate::{locate as tree_locate, Integrator, Location};

/// Values on the `2^{Jd}` finest cells of the root cube, row-major over lattice coordinates.
///
/// Implicitly zero outside the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction<T> {
    dim: usize,
    depth: u32,
    root: Cube,
    values: Vec<T>,
}

impl<T> GridFunction<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn root(&self) -> &Cube {
        &self.root
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn side_cells(&self) -> u64 {
        1u64 << self.depth
    }

    pub fn cell_gen(&self) -> i32 {
        self.root.gen + self.depth as i32
    }

    pub fn same_layout<U>(&self, other: &GridFunction<U>) -> bool {
        self.dim == other.dim && self.depth == other.depth && self.root == other.root
    }

    pub fn ensure_same_layout<U>(&self, other: &GridFunction<U>) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::Domain(
                "grid functions live on different trees".into(),
            ))
        }
    }
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(dim: usize, depth: u32, root: Cube, values: Vec<T>) -> Result<Self> {
        if dim == 0 || dim > 4 {
            return Err(Error::Config(format!(
                "dimension {dim} unsupported (1..=4)"
            )));
        }
        if root.dim() != dim || root.shift_id != 0 {
            return Err(Error::Domain(
                "root must be a standard-grid cube of matching dimension".into(),
            ));
        }
        if depth as usize * dim > 30 {
            return Err(Error::Config(format!(
                "depth {depth} too large for d = {dim}"
            )));
        }
        if values.len() != tree::level_len(dim, depth) {
            return Err(Error::Domain(format!(
                "expected {} values, got {}",
                tree::level_len(dim, depth),
                values.len()
            )));
        }
        Ok(GridFunction {
            dim,
            depth,
            root,
            values,
        })
    }

    pub fn zeros(dim: usize, depth: u32, root: Cube) -> Result<Self> {
        Self::new(
            dim,
            depth,
            root,
            vec![T::zero(); tree::level_len(dim, depth)],
        )
    }

    pub fn constant(dim: usize, depth: u32, root: Cube, c: T) -> Result<Self> {
        Self::new(dim, depth, root, vec![c; tree::level_len(dim, depth)])
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(
        dim: usize,
        depth: u32,
        root: Cube,
        mut f: impl FnMut(&[f64]) -> T,
    ) -> Result<Self> {
        let mut out = Self::zeros(dim, depth, root)?;
        for i in 0..out.values.len() {
            let c = out.center(i);
            out.values[i] = f(&c);
        }
        Ok(out)
    }

    /// Builds from a function of the integer cell coordinates.
    pub fn from_cells(
        dim: usize,
        depth: u32,
        root: Cube,
        mut f: impl FnMut(&[u64]) -> T,
    ) -> Result<Self> {
        let mut out = Self::zeros(dim, depth, root)?;
        for i in 0..out.values.len() {
            let c = tree::decode(dim, depth, i);
            out.values[i] = f(&c);
        }
        Ok(out)
    }

    pub fn cell_volume(&self) -> T {
        T::pow2(-self.cell_gen() * self.dim as i32)
    }

    pub fn cell_side_f64(&self) -> f64 {
        (2f64).powi(-self.cell_gen())
    }

    pub fn cell_volume_f64(&self) -> f64 {
        (2f64).powi(-self.cell_gen() * self.dim as i32)
    }

    pub fn root_volume(&self) -> T {
        T::pow2(-self.root.gen * self.dim as i32)
    }

    pub fn cell_coords(&self, idx: usize) -> Vec<u64> {
        tree::decode(self.dim, self.depth, idx)
    }

    pub fn cell_index(&self, coords: &[u64]) -> usize {
        tree::encode(self.depth, coords)
    }

    /// The finest cell `idx` as a standard-grid cube.
    pub fn cell_cube(&self, idx: usize) -> Cube {
        let c = self.cell_coords(idx);
        Cube::new(
            self.cell_gen(),
            c.iter()
                .zip(&self.root.coords)
                .map(|(&l, &r)| (r << self.depth) + l as i64)
                .collect(),
        )
    }

    /// Tree cube at relative level `k`, index `idx`, as a standard-grid cube.
    pub fn tree_cube(&self, k: u32, idx: usize) -> Cube {
        let c = tree::decode(self.dim, k, idx);
        Cube::new(
            self.root.gen + k as i32,
            c.iter()
                .zip(&self.root.coords)
                .map(|(&l, &r)| (r << k) + l as i64)
                .collect(),
        )
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        let h = self.cell_side_f64();
        let s = (2f64).powi(-self.root.gen);
        self.cell_coords(idx)
            .iter()
            .zip(&self.root.coords)
            .map(|(&c, &r)| r as f64 * s + (c as f64 + 0.5) * h)
            .collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> GridFunction<U> {
        GridFunction {
            dim: self.dim,
            depth: self.depth,
            root: self.root.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_layout(other)?;
        Ok(GridFunction {
            dim: self.dim,
            depth: self.depth,
            root: self.root.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(self.dim, self.depth, self.root.clone(), values)
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max_of(v.abs()))
    }

    /// `f 1_Q`.
    pub fn restrict(&self, q: &Cube) -> Result<Self> {
        let mask = self.indicator_mask(q)?;
        Ok(GridFunction {
            dim: self.dim,
            depth: self.depth,
            root: self.root.clone(),
            values: self
                .values
                .iter()
                .zip(&mask)
                .map(|(&v, &m)| if m { v } else { T::zero() })
                .collect(),
        })
    }

    /// Which finest cells lie in `q`.
    pub fn indicator_mask(&self, q: &Cube) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        match integrate::locate(self.dim, self.depth, &self.root, q)? {
            Location::Inside { level, index } => {
                for c in tree::cells_of(self.dim, self.depth, level, index) {
                    mask[c] = true;
                }
            }
            Location::ContainsRoot => mask.iter_mut().for_each(|m| *m = true),
            Location::Disjoint => {}
        }
        Ok(mask)
    }

    pub fn integrator(&self) -> Integrator<T> {
        Integrator::new(self)
    }

    /// `int f` over the root, summed over the tree.
    pub fn integral(&self) -> T {
        self.integrator().total_integral()
    }

    pub fn cube_integral(&self, q: &Cube) -> Result<T> {
        self.integrator().cube_integral(q)
    }

    /// `<f>_Q`; `Q` may stick out of (or contain) the root.
    pub fn cube_average(&self, q: &Cube) -> Result<T> {
        self.integrator().cube_average(q)
    }

    /// `<f>_{3Q}`.
    pub fn enlarged_average(&self, q: &Cube) -> Result<T> {
        self.integrator().enlarged_average(q)
    }

    pub fn to_f64(&self) -> GridFunction<f64> {
        GridFunction {
            dim: self.dim,
            depth: self.depth,
            root: self.root.clone(),
            values: self.values.iter().map(|v| v.as_f64()).collect(),
        }
    }

    /// Converts every value with `T::from_f64`.
    pub fn from_f64(f: &GridFunction<f64>) -> Self {
        GridFunction {
            dim: f.dim,
            depth: f.depth,
            root: f.root.clone(),
            values: f.values.iter().map(|&v| T::of_f64(v)).collect(),
        }
    }
}

/// `(int |f|^p w)^{1/p}` over the root; `p = inf` gives the sup of `|f|` where `w > 0`.
pub fn lp_norm<T: Real>(f: &GridFunction<T>, p: f64, w: Option<&GridFunction<T>>) -> Result<T> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be at least 1")));
    }
    if let Some(w) = w {
        f.ensure_same_layout(w)?;
        if w.values().iter().any(|&v| !(v > T::zero())) {
            return Err(Error::Domain("weight must be strictly positive".into()));
        }
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let pt = T::of_f64(p);
    let integrand: Vec<T> = match w {
        Some(w) => f
            .values()
            .iter()
            .zip(w.values())
            .map(|(&v, &wv)| v.abs().powf(pt) * wv)
            .collect(),
        None => f.values().iter().map(|&v| v.abs().powf(pt)).collect(),
    };
    let g = f.with_values(integrand)?;
    Ok(g.integral().powf(T::one() / pt))
}
