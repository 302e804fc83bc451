use serde::{Deserialize, Serialize};

use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::grid_fn::{tree, GridFunction};
use crate::scalar::Scalar;

/// `b_{L_r}`: the bad part on one r-grandchild, in row-major cell order of that cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadPart<T> {
    pub cube: Cube,
    pub values: Vec<T>,
}

/// A maximal bad cube `L` with its r-grandchildren.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadCube<T> {
    pub cube: Cube,
    pub average_abs: T,
    pub parts: Vec<BadPart<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CzResult<T> {
    pub a: GridFunction<T>,
    pub b: GridFunction<T>,
    pub bad_cubes: Vec<BadCube<T>>,
    pub height: T,
    pub r: u32,
}

/// Per-instance verification of the decomposition invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CzCheck {
    pub split_exact: bool,
    pub max_split_error: f64,
    pub a_sup: f64,
    pub a_bound: f64,
    /// Largest `|<b_P>| / lambda` over the parts.
    pub max_part_mean: f64,
    pub averages_bracketed: bool,
    pub passed: bool,
}

/// `f = a + b` at height `lambda`, with `b` split over the r-grandchildren of the maximal bad cubes.
pub fn cz_decompose_r<T: Scalar>(f: &GridFunction<T>, lambda: T, r: u32) -> Result<CzResult<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::Domain("height must be positive".into()));
    }
    let dim = f.dim();
    let depth = f.depth();
    let abs = f.abs().integrator();
    if abs.level_average(0, 0) > lambda {
        return Err(Error::Domain(format!(
            "height {:?} below the root average {:?}",
            lambda,
            abs.level_average(0, 0)
        )));
    }
    let mut bad: Vec<(u32, usize)> = Vec::new();
    let mut stack: Vec<(u32, usize)> = (0..(1usize << dim))
        .map(|e| (1, tree::child_index(dim, 0, 0, e)))
        .collect();
    if depth == 0 {
        stack.clear();
    }
    while let Some((k, i)) = stack.pop() {
        if abs.level_average(k, i) > lambda {
            bad.push((k, i));
        } else if k < depth {
            for e in 0..(1usize << dim) {
                stack.push((k + 1, tree::child_index(dim, k, i, e)));
            }
        }
    }
    bad.sort_unstable();
    let signed = f.integrator();
    let mut a = f.values().to_vec();
    let mut b = vec![T::zero(); f.len()];
    let mut bad_cubes = Vec::with_capacity(bad.len());
    for &(k, i) in &bad {
        if k + r > depth {
            return Err(Error::Resolution(format!(
                "r-grandchildren of a bad cube at level {k} need depth {}",
                k + r
            )));
        }
        let mut parts = Vec::with_capacity(1 << (r as usize * dim));
        for gi in tree::cells_of(dim, k + r, k, i) {
            let avg = signed.level_average(k + r, gi);
            let cells = tree::cells_of(dim, depth, k + r, gi);
            let mut values = Vec::with_capacity(cells.len());
            for c in cells {
                let v = f.values()[c];
                a[c] = avg;
                b[c] = v - avg;
                values.push(v - avg);
            }
            parts.push(BadPart {
                cube: f.tree_cube(k + r, gi),
                values,
            });
        }
        bad_cubes.push(BadCube {
            cube: f.tree_cube(k, i),
            average_abs: abs.level_average(k, i),
            parts,
        });
    }
    Ok(CzResult {
        a: f.with_values(a)?,
        b: f.with_values(b)?,
        bad_cubes,
        height: lambda,
        r,
    })
}

impl<T: Scalar> CzResult<T> {
    /// Checks the split (relative error per cell), the bound on `a`, the mean-zero parts and `lambda < <|f|>_L <= 2^d lambda`.
    pub fn check(&self, f: &GridFunction<T>, tol: f64) -> CzCheck {
        let dim = f.dim();
        let mut max_split_error = 0.0f64;
        for (&v, (&a, &b)) in f
            .values()
            .iter()
            .zip(self.a.values().iter().zip(self.b.values()))
        {
            let scale = (v.abs() + a.abs()).as_f64();
            let err = (a + b - v).abs().as_f64();
            if err > 0.0 {
                max_split_error = max_split_error.max(err / scale);
            }
        }
        let split_exact = max_split_error == 0.0;
        let a_sup = self.a.max_abs().as_f64();
        let a_bound = (T::pow2((dim as u32 * (self.r + 1)) as i32) * self.height).as_f64();
        let mut max_part_mean = 0.0f64;
        for bc in &self.bad_cubes {
            for part in &bc.parts {
                if part.values.is_empty() {
                    continue;
                }
                let s = part.values.iter().fold(T::zero(), |acc, &v| acc + v);
                let mean = s.abs().as_f64() / part.values.len() as f64;
                max_part_mean = max_part_mean.max(mean / self.height.as_f64());
            }
        }
        let upper = T::pow2(dim as i32) * self.height;
        let averages_bracketed = self
            .bad_cubes
            .iter()
            .all(|bc| bc.average_abs > self.height && bc.average_abs <= upper);
        let passed = max_split_error <= tol
            && a_sup <= a_bound * (1.0 + tol)
            && max_part_mean <= tol
            && averages_bracketed;
        CzCheck {
            split_exact,
            max_split_error,
            a_sup,
            a_bound,
            max_part_mean,
            averages_bracketed,
            passed,
        }
    }
}
