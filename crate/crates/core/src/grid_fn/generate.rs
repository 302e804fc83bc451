use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{integrate, tree, GridFunction, Location};

/// Test-input factory specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Constant {
        value: f64,
    },
    Indicator {
        cube: Cube,
    },
    /// `h_P^eps`; bit `d-1-i` of `signature` selects axis `i`.
    HaarAtom {
        cube: Cube,
        signature: u32,
    },
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    RandomUniform {
        seed: u64,
        low: f64,
        high: f64,
    },
    /// Point masses; each location adds `height` (default: unit mass) to its cell.
    SpikeTrain {
        locations: Vec<Vec<f64>>,
        height: Option<f64>,
    },
    /// `|x - c|_inf^beta` with `c` snapped to the nearest cell corner.
    PowerWeight {
        beta: f64,
        center: Vec<f64>,
    },
}

pub fn generate<T: Scalar>(
    g: &Generator,
    dim: usize,
    depth: u32,
    root: Cube,
) -> Result<GridFunction<T>> {
    let mut f = GridFunction::<f64>::zeros(dim, depth, root)?;
    let n = f.len();
    let mut vals = vec![0.0f64; n];
    match g {
        Generator::Constant { value } => vals.iter_mut().for_each(|v| *v = *value),
        Generator::Indicator { cube } => {
            for (v, m) in vals.iter_mut().zip(f.indicator_mask(cube)?) {
                if m {
                    *v = 1.0;
                }
            }
        }
        Generator::HaarAtom { cube, signature } => {
            if *signature == 0 || *signature >= (1 << dim) {
                return Err(Error::Domain(format!(
                    "signature {signature} not in 1..2^d"
                )));
            }
            let Location::Inside { level, index } = integrate::locate(dim, depth, f.root(), cube)?
            else {
                return Err(Error::Domain("Haar atom cube must lie in the root".into()));
            };
            if level >= depth {
                return Err(Error::Resolution(
                    "Haar atom at the finest generation".into(),
                ));
            }
            let amp = cube.volume_f64().powf(-0.5);
            for c in tree::cells_of(dim, depth, level, index) {
                let e = tree::child_offset(dim, depth, c, level);
                let sign = if (e as u32 & signature).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                vals[c] = sign * amp;
            }
        }
        Generator::GaussianBump {
            center,
            width,
            amplitude,
        } => {
            check_point(center, dim)?;
            if !(*width > 0.0) {
                return Err(Error::Domain("bump width must be positive".into()));
            }
            for (i, v) in vals.iter_mut().enumerate() {
                let x = f.center(i);
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                *v = amplitude * (-r2 / (2.0 * width * width)).exp();
            }
        }
        Generator::RandomUniform { seed, low, high } => {
            if !(low < high) {
                return Err(Error::Domain("random range must satisfy low < high".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            vals.iter_mut()
                .for_each(|v| *v = rng.gen_range(*low..*high));
        }
        Generator::SpikeTrain { locations, height } => {
            let h = height.unwrap_or(1.0 / f.cell_volume_f64());
            let side = f.cell_side_f64();
            let rs = (2f64).powi(-f.root().gen);
            for loc in locations {
                check_point(loc, dim)?;
                let mut coords = Vec::with_capacity(dim);
                for (x, &r) in loc.iter().zip(&f.root().coords) {
                    let c = ((x - r as f64 * rs) / side).floor();
                    if c < 0.0 || c >= f.side_cells() as f64 {
                        return Err(Error::Domain(format!("spike at {loc:?} outside the root")));
                    }
                    coords.push(c as u64);
                }
                vals[f.cell_index(&coords)] += h;
            }
        }
        Generator::PowerWeight { beta, center } => {
            check_point(center, dim)?;
            if *beta <= -(dim as f64) {
                return Err(Error::NonIntegrable(format!("beta = {beta} <= -d")));
            }
            let side = f.cell_side_f64();
            let snapped: Vec<f64> = center.iter().map(|c| (c / side).round() * side).collect();
            for (i, v) in vals.iter_mut().enumerate() {
                let x = f.center(i);
                let r = x
                    .iter()
                    .zip(&snapped)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                *v = r.powf(*beta);
            }
        }
    }
    f = f.with_values(vals)?;
    Ok(GridFunction::from_f64(&f))
}

fn check_point(p: &[f64], dim: usize) -> Result<()> {
    if p.len() != dim {
        return Err(Error::Domain(format!("point {p:?} has wrong dimension")));
    }
    Ok(())
}
