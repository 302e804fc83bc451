use serde::{Deserialize, Serialize};

use super::domination::least_squares;
use crate::error::{Error, Result};
use crate::grid_fn::GridFunction;
use crate::operators::{dyadic_square_profile, SquareVariant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weak11Row {
    pub j: u32,
    /// `sup_l l |{S_j f > l}| / ||f||_1`.
    pub profile: f64,
    /// The level attaining the sup.
    pub level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weak11Table {
    pub norm1: f64,
    pub rows: Vec<Weak11Row>,
    /// `max_j profile / (1 + j)`.
    pub constant: f64,
    /// Least-squares slope of `ln profile` against `ln(1 + j)`.
    pub exponent: f64,
}

/// Weak-type profile of `S_j^D` for each `j`, exterior annuli included.
pub fn weak11_profile(f: &GridFunction<f64>, js: &[u32], k_top: u32) -> Result<Weak11Table> {
    let norm1: f64 = f.values().iter().map(|v| v.abs()).sum::<f64>() * f.cell_volume_f64();
    if !(norm1 > 0.0) {
        return Err(Error::Domain(
            "weak (1,1) profile of a null function".into(),
        ));
    }
    let cell = f.cell_volume_f64();
    let root_vol = f.root().volume_f64();
    let d = f.dim() as i32;
    let mut rows = Vec::with_capacity(js.len());
    for &j in js {
        let s = dyadic_square_profile(f, j, SquareVariant::Plain, k_top)?;
        let mut pts: Vec<(f64, f64)> = s
            .interior
            .values()
            .iter()
            .map(|&v| (v.max(0.0).sqrt(), cell))
            .collect();
        for (k, &v) in s.exterior.iter().enumerate() {
            let m = k as i32 + 1;
            pts.push((
                v.max(0.0).sqrt(),
                root_vol * ((2f64).powi(m * d) - (2f64).powi((m - 1) * d)),
            ));
        }
        pts.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (mut best, mut level, mut mass) = (0.0f64, 0.0f64, 0.0f64);
        let mut i = 0;
        while i < pts.len() {
            let v = pts[i].0;
            while i < pts.len() && pts[i].0 == v {
                mass += pts[i].1;
                i += 1;
            }
            if v * mass > best {
                best = v * mass;
                level = v;
            }
        }
        rows.push(Weak11Row {
            j,
            profile: best / norm1,
            level,
        });
    }
    let constant = rows
        .iter()
        .map(|r| r.profile / (1.0 + r.j as f64))
        .fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.profile > 0.0)
        .map(|r| ((1.0 + r.j as f64).ln(), r.profile.ln()))
        .collect();
    let exponent = if pts.len() >= 2 {
        least_squares(&pts).0
    } else {
        0.0
    };
    Ok(Weak11Table {
        norm1,
        rows,
        constant,
        exponent,
    })
}
