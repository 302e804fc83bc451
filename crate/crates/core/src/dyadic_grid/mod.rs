//! Exact dyadic cube arithmetic on standard and shifted grids.

mod dyadic;
mod goodness;
mod shift;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dyadic::Dyadic;
pub use goodness::{compare_power_mean, AncestorCheck, GoodnessParams};
pub use shift::ShiftSeq;

/// A dyadic cube `2^{-gen}([0,1)^d + coords)` of the grid `shift_id`.
///
/// Geometry always goes through a [`DyadicGrid`], which knows the shift.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub gen: i32,
    pub coords: Vec<i64>,
    pub shift_id: u32,
}

impl Cube {
    pub fn new(gen: i32, coords: Vec<i64>) -> Self {
        Cube {
            gen,
            coords,
            shift_id: 0,
        }
    }

    /// The unit cube `[0,1)^d` of the standard grid.
    pub fn unit(dim: usize) -> Self {
        Cube::new(0, vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Side length as an exact dyadic.
    pub fn side(&self) -> Dyadic {
        Dyadic::pow2(-self.gen)
    }

    pub fn volume(&self) -> Dyadic {
        Dyadic::pow2(-self.gen * self.dim() as i32)
    }

    pub fn side_f64(&self) -> f64 {
        (2f64).powi(-self.gen)
    }

    pub fn volume_f64(&self) -> f64 {
        (2f64).powi(-self.gen * self.dim() as i32)
    }

    /// Standard-grid parent (ignores shifts).
    pub fn std_parent(&self) -> Cube {
        Cube {
            gen: self.gen - 1,
            coords: self.coords.iter().map(|c| c.div_euclid(2)).collect(),
            shift_id: self.shift_id,
        }
    }

    /// Standard-grid ancestor `k` generations up.
    pub fn std_ancestor(&self, k: u32) -> Cube {
        Cube {
            gen: self.gen - k as i32,
            coords: self.coords.iter().map(|c| c >> k).collect(),
            shift_id: self.shift_id,
        }
    }

    /// Same-generation translate by an integer lattice vector.
    pub fn translated(&self, by: &[i64]) -> Cube {
        Cube {
            gen: self.gen,
            coords: self.coords.iter().zip(by).map(|(c, b)| c + b).collect(),
            shift_id: self.shift_id,
        }
    }

    /// The `3^d` same-generation neighbours (including the cube itself), row-major.
    pub fn neighbours(&self) -> Vec<Cube> {
        let d = self.dim();
        let n = 3usize.pow(d as u32);
        (0..n)
            .map(|mut k| {
                let mut off = vec![0i64; d];
                for o in off.iter_mut().rev() {
                    *o = (k % 3) as i64 - 1;
                    k /= 3;
                }
                self.translated(&off)
            })
            .collect()
    }
}

/// Direction for [`DyadicGrid::relatives`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

/// A truncated (possibly shifted) dyadic lattice covering generations `top..=finest`.
///
/// Corners are integers in units of `2^{-unit_exp}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub dim: usize,
    pub top: i32,
    pub finest: i32,
    pub shift: ShiftSeq,
    pub shift_id: u32,
}

impl DyadicGrid {
    pub fn standard(dim: usize, top: i32, finest: i32) -> Self {
        DyadicGrid {
            dim,
            top,
            finest,
            shift: ShiftSeq::zero(dim),
            shift_id: 0,
        }
    }

    pub fn shifted(
        dim: usize,
        top: i32,
        finest: i32,
        shift: ShiftSeq,
        shift_id: u32,
    ) -> Result<Self> {
        if shift.dim != dim {
            return Err(Error::Domain("shift dimension mismatch".into()));
        }
        if top > finest {
            return Err(Error::Config("top generation below finest".into()));
        }
        Ok(DyadicGrid {
            dim,
            top,
            finest,
            shift,
            shift_id,
        })
    }

    pub fn unit_exp(&self) -> i32 {
        self.finest.max(self.shift.hi())
    }

    fn check(&self, q: &Cube) -> Result<()> {
        if q.shift_id != self.shift_id {
            return Err(Error::Domain(format!(
                "cube belongs to grid {} but grid is {}",
                q.shift_id, self.shift_id
            )));
        }
        if q.dim() != self.dim {
            return Err(Error::Domain("cube dimension mismatch".into()));
        }
        if q.gen < self.top || q.gen > self.finest {
            return Err(Error::OutOfRange(format!(
                "generation {} outside [{}, {}]",
                q.gen, self.top, self.finest
            )));
        }
        Ok(())
    }

    pub fn contains_cube(&self, q: &Cube) -> bool {
        self.check(q).is_ok()
    }

    pub fn parent(&self, q: &Cube) -> Result<Cube> {
        self.ancestor(q, 1)
    }

    /// `Q^{(k)}`.
    pub fn ancestor(&self, q: &Cube, k: u32) -> Result<Cube> {
        self.check(q)?;
        if q.gen - (k as i32) < self.top {
            return Err(Error::OutOfRange(format!(
                "ancestor {k} of gen {} above the lattice top",
                q.gen
            )));
        }
        let mut coords = q.coords.clone();
        for g in ((q.gen - k as i32 + 1)..=q.gen).rev() {
            for (axis, c) in coords.iter_mut().enumerate() {
                *c = (*c - self.shift.bit(g, axis)).div_euclid(2);
            }
        }
        Ok(Cube {
            gen: q.gen - k as i32,
            coords,
            shift_id: q.shift_id,
        })
    }

    /// `ch_k(Q)` in row-major offset order.
    pub fn children(&self, q: &Cube, k: u32) -> Result<Vec<Cube>> {
        self.check(q)?;
        if q.gen + k as i32 > self.finest {
            return Err(Error::OutOfRange(format!(
                "children {k} of gen {} below the finest generation",
                q.gen
            )));
        }
        let mut level = vec![q.clone()];
        for step in 0..k as i32 {
            let g = q.gen + step + 1;
            let mut next = Vec::with_capacity(level.len() << self.dim);
            for c in &level {
                for e in 0..(1u32 << self.dim) {
                    let coords = c
                        .coords
                        .iter()
                        .enumerate()
                        .map(|(axis, m)| {
                            2 * m
                                + self.shift.bit(g, axis)
                                + ((e >> (self.dim - 1 - axis)) & 1) as i64
                        })
                        .collect();
                    next.push(Cube {
                        gen: g,
                        coords,
                        shift_id: q.shift_id,
                    });
                }
            }
            level = next;
        }
        if self.dim > 0 && k > 0 {
            level.sort_by(|a, b| a.coords.cmp(&b.coords));
        }
        Ok(level)
    }

    pub fn relatives(&self, q: &Cube, k: u32, direction: Direction) -> Result<Vec<Cube>> {
        match direction {
            Direction::Up => Ok(vec![self.ancestor(q, k)?]),
            Direction::Down => self.children(q, k),
        }
    }

    /// Lower corner in units of `2^{-unit_exp}`.
    pub fn lower_units(&self, q: &Cube) -> Vec<i64> {
        let n = self.unit_exp();
        let off = self.shift.offset_units(q.gen, n);
        q.coords
            .iter()
            .zip(off)
            .map(|(m, o)| (m << (n - q.gen)) + o)
            .collect()
    }

    pub fn side_units(&self, q: &Cube) -> i64 {
        1i64 << (self.unit_exp() - q.gen)
    }

    /// Lower and upper corners, as f64 (exact for moderate depths).
    pub fn bounds_f64(&self, q: &Cube) -> (Vec<f64>, Vec<f64>) {
        let u = (2f64).powi(-self.unit_exp());
        let lo = self.lower_units(q);
        let s = self.side_units(q);
        (
            lo.iter().map(|&a| a as f64 * u).collect(),
            lo.iter().map(|&a| (a + s) as f64 * u).collect(),
        )
    }

    fn units_to_dyadic(&self, x: i64) -> Dyadic {
        Dyadic::new(x as i128, self.unit_exp())
    }

    /// `l^inf` gap between the closures, in units.
    pub fn distance_units(&self, p: &Cube, r: &Cube) -> i64 {
        let (pl, rl) = (self.lower_units(p), self.lower_units(r));
        let (ps, rs) = (self.side_units(p), self.side_units(r));
        pl.iter()
            .zip(&rl)
            .map(|(&a, &b)| (b - (a + ps)).max(a - (b + rs)).max(0))
            .max()
            .unwrap_or(0)
    }

    /// `d(P, R)` in the `l^inf` metric.
    pub fn distance(&self, p: &Cube, r: &Cube) -> Result<Dyadic> {
        self.check(p)?;
        self.check(r)?;
        Ok(self.units_to_dyadic(self.distance_units(p, r)))
    }

    /// `D(P,R) = lP + d(P,R) + lR`.
    pub fn long_distance(&self, p: &Cube, r: &Cube) -> Result<Dyadic> {
        Ok(p.side().add(self.distance(p, r)?).add(r.side()))
    }

    /// Geometric containment `inner ⊆ outer`.
    pub fn contains(&self, outer: &Cube, inner: &Cube) -> bool {
        let (ol, il) = (self.lower_units(outer), self.lower_units(inner));
        let (os, is) = (self.side_units(outer), self.side_units(inner));
        ol.iter()
            .zip(&il)
            .all(|(&o, &i)| i >= o && i + is <= o + os)
    }

    /// `3P ⊇ R`.
    pub fn enlarged_contains(&self, p: &Cube, r: &Cube) -> bool {
        let (pl, rl) = (self.lower_units(p), self.lower_units(r));
        let (ps, rs) = (self.side_units(p), self.side_units(r));
        pl.iter()
            .zip(&rl)
            .all(|(&a, &b)| b >= a - ps && b + rs <= a + 2 * ps)
    }

    /// Distance from `inner` to the boundary of `outer`, assuming containment, in units.
    pub fn boundary_distance_units(&self, inner: &Cube, outer: &Cube) -> i64 {
        let (ol, il) = (self.lower_units(outer), self.lower_units(inner));
        let (os, is) = (self.side_units(outer), self.side_units(inner));
        ol.iter()
            .zip(&il)
            .map(|(&o, &i)| (i - o).min(o + os - (i + is)))
            .min()
            .unwrap_or(0)
    }

    /// Minimal lattice cube containing both.
    pub fn common_ancestor(&self, p: &Cube, r: &Cube) -> Result<Cube> {
        self.check(p)?;
        self.check(r)?;
        let g = p.gen.min(r.gen);
        let mut a = self.ancestor(p, (p.gen - g) as u32)?;
        let mut b = self.ancestor(r, (r.gen - g) as u32)?;
        while a != b {
            if a.gen == self.top {
                return Err(Error::NoCommonAncestor);
            }
            a = self.ancestor(&a, 1)?;
            b = self.ancestor(&b, 1)?;
        }
        Ok(a)
    }

    /// `P_k(R) = {P : 3P ⊇ R, lP = 2^k lR}`.
    pub fn three_p_family(&self, r: &Cube, k: u32) -> Result<Vec<Cube>> {
        let a = self.ancestor(r, k)?;
        Ok(a.neighbours())
    }
}

/// Translate a standard-grid cube into the grid shifted by `omega`.
pub fn translate_by_shift(q: &Cube, omega: &ShiftSeq, shift_id: u32) -> Result<Cube> {
    if q.dim() != omega.dim {
        return Err(Error::Domain("shift dimension mismatch".into()));
    }
    if q.gen + 1 < omega.lo {
        return Err(Error::OutOfRange(format!(
            "shift starts at generation {} but the cube needs bits from {}",
            omega.lo,
            q.gen + 1
        )));
    }
    Ok(Cube {
        gen: q.gen,
        coords: q.coords.clone(),
        shift_id,
    })
}
