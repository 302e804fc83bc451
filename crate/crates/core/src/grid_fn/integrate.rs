use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{tree, GridFunction};

/// Where a standard-grid cube sits relative to the rooted tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    /// A tree cube at relative level `level`.
    Inside {
        level: u32,
        index: usize,
    },
    /// A lattice cube containing the root.
    ContainsRoot,
    Disjoint,
}

/// Locates a standard-grid cube relative to the tree rooted at `root` with `depth` levels.
pub fn locate(dim: usize, depth: u32, root: &Cube, q: &Cube) -> Result<Location> {
    if q.shift_id != 0 {
        return Err(Error::Domain(
            "grid functions live on the standard grid".into(),
        ));
    }
    if q.dim() != dim {
        return Err(Error::Domain("cube dimension mismatch".into()));
    }
    if q.gen >= root.gen {
        let s = (q.gen - root.gen) as u32;
        if s > depth {
            return Err(Error::Resolution(format!(
                "cube of generation {} is finer than the grid (finest {})",
                q.gen,
                root.gen + depth as i32
            )));
        }
        let side = 1i64 << s;
        let mut local = Vec::with_capacity(dim);
        for (&m, &r) in q.coords.iter().zip(&root.coords) {
            let l = m - (r << s);
            if l < 0 || l >= side {
                return Ok(Location::Disjoint);
            }
            local.push(l as u64);
        }
        Ok(Location::Inside {
            level: s,
            index: tree::encode(s, &local),
        })
    } else {
        let up = (root.gen - q.gen) as u32;
        let contains = q
            .coords
            .iter()
            .zip(&root.coords)
            .all(|(&m, &r)| (r >> up.min(62)) == m);
        Ok(if contains {
            Location::ContainsRoot
        } else {
            Location::Disjoint
        })
    }
}

/// Pyramid of cell sums: `sums[k][i]` is the sum of the finest values inside tree cube `(k, i)`.
///
/// Built once per function; answers every cube integral in O(1).
#[derive(Clone, Debug)]
pub struct Integrator<T> {
    dim: usize,
    depth: u32,
    root: Cube,
    cell_volume: T,
    sums: Vec<Vec<T>>,
}

impl<T: Scalar> Integrator<T> {
    pub fn new(f: &GridFunction<T>) -> Self {
        let dim = f.dim();
        let depth = f.depth();
        let mut sums: Vec<Vec<T>> = vec![Vec::new(); depth as usize + 1];
        sums[depth as usize] = f.values().to_vec();
        for k in (0..depth).rev() {
            let mut lvl = vec![T::zero(); tree::level_len(dim, k)];
            let below = &sums[k as usize + 1];
            for (p, acc) in lvl.iter_mut().enumerate() {
                let mut s = T::zero();
                for e in 0..(1usize << dim) {
                    s = s + below[tree::child_index(dim, k, p, e)];
                }
                *acc = s;
            }
            sums[k as usize] = lvl;
        }
        Integrator {
            dim,
            depth,
            root: f.root().clone(),
            cell_volume: f.cell_volume(),
            sums,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn root(&self) -> &Cube {
        &self.root
    }

    pub fn locate(&self, q: &Cube) -> Result<Location> {
        locate(self.dim, self.depth, &self.root, q)
    }

    /// Raw sum of cell values in tree cube `(k, i)`.
    #[inline]
    pub fn level_sum(&self, k: u32, index: usize) -> T {
        self.sums[k as usize][index]
    }

    pub fn level_sums(&self, k: u32) -> &[T] {
        &self.sums[k as usize]
    }

    /// Integral over tree cube `(k, i)`.
    #[inline]
    pub fn level_integral(&self, k: u32, index: usize) -> T {
        self.sums[k as usize][index] * self.cell_volume
    }

    /// Average over tree cube `(k, i)`.
    #[inline]
    pub fn level_average(&self, k: u32, index: usize) -> T {
        self.sums[k as usize][index] / T::of_usize(tree::level_len(self.dim, self.depth - k))
    }

    pub fn cell_volume(&self) -> T {
        self.cell_volume
    }

    pub fn total_integral(&self) -> T {
        self.sums[0][0] * self.cell_volume
    }

    /// `|Q|` for a cube of generation `gen`.
    pub fn volume_of_gen(&self, gen: i32) -> T {
        T::pow2(-gen * self.dim as i32)
    }

    pub fn cube_integral(&self, q: &Cube) -> Result<T> {
        Ok(match self.locate(q)? {
            Location::Inside { level, index } => self.level_integral(level, index),
            Location::ContainsRoot => self.total_integral(),
            Location::Disjoint => T::zero(),
        })
    }

    pub fn cube_average(&self, q: &Cube) -> Result<T> {
        Ok(match self.locate(q)? {
            Location::Inside { level, index } => self.level_average(level, index),
            _ => self.cube_integral(q)? / self.volume_of_gen(q.gen),
        })
    }

    /// `int_{3Q} f`.
    pub fn enlarged_integral(&self, q: &Cube) -> Result<T> {
        let mut s = T::zero();
        for n in q.neighbours() {
            s = s + self.cube_integral(&n)?;
        }
        Ok(s)
    }

    /// `<f>_{3Q}`.
    pub fn enlarged_average(&self, q: &Cube) -> Result<T> {
        let three_d = T::of_usize(3usize.pow(self.dim as u32));
        Ok(self.enlarged_integral(q)? / (three_d * self.volume_of_gen(q.gen)))
    }
}
