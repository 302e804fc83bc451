use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::grid_fn::{tree, tree_locate, Location};

/// A witness set: shares of finest cells plus whole exterior annuli.
///
/// A cell entry `(c, u)` claims `u` units of cell `c`, one unit being `2^{-unit_bits}` of the cell.
/// Annulus `m >= 1` is `Q0^{(m)} \ Q0^{(m-1)}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub cells: Vec<(u32, u32)>,
    pub exterior: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseEntry {
    pub cube: Cube,
    pub witness: Witness,
}

/// Cubes of the standard grid around a rooted tree, with witness sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseCollection {
    pub dim: usize,
    pub depth: u32,
    pub root: Cube,
    pub unit_bits: u32,
    pub tau: f64,
    pub entries: Vec<SparseEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub cube: Cube,
    pub kind: String,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseReport {
    pub tau_claimed: f64,
    pub tau_observed: f64,
    pub worst_cube: Option<Cube>,
    pub cubes: usize,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

impl SparseCollection {
    pub fn new(dim: usize, depth: u32, root: Cube) -> Self {
        SparseCollection {
            dim,
            depth,
            root,
            unit_bits: 0,
            tau: 1.0,
            entries: Vec::new(),
        }
    }

    /// `{Q0}` with `E = Q0`.
    pub fn singleton_root(dim: usize, depth: u32, root: Cube) -> Self {
        let cells = (0..tree::level_len(dim, depth) as u32)
            .map(|c| (c, 1))
            .collect();
        SparseCollection {
            dim,
            depth,
            root: root.clone(),
            unit_bits: 0,
            tau: 1.0,
            entries: vec![SparseEntry {
                cube: root,
                witness: Witness {
                    cells,
                    exterior: Vec::new(),
                },
            }],
        }
    }

    pub fn cubes(&self) -> Vec<Cube> {
        self.entries.iter().map(|e| e.cube.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn cells_total(&self) -> u128 {
        tree::level_len(self.dim, self.depth) as u128
    }

    /// `|Q|` in units.
    fn volume_units(&self, q: &Cube) -> u128 {
        let rel = q.gen - self.root.gen;
        let cell_exp = (self.depth as i32 - rel) * self.dim as i32;
        (1u128 << cell_exp) << self.unit_bits
    }

    fn annulus_units(&self, m: u32) -> u128 {
        let d = self.dim as u32;
        (self.cells_total() << self.unit_bits) * ((1u128 << (m * d)) - (1u128 << ((m - 1) * d)))
    }

    /// Family of dyadic parents `{S^{(1)}}`; each parent takes the witnesses of its members' children.
    ///
    /// `tau`-sparse input gives a `tau 2^{-d}`-sparse output.
    pub fn parents(&self) -> Result<SparseCollection> {
        let mut grouped: BTreeMap<Cube, Witness> = BTreeMap::new();
        for e in &self.entries {
            let p = e.cube.std_parent();
            let w = grouped.entry(p).or_default();
            w.cells.extend(e.witness.cells.iter().copied());
            w.exterior.extend(e.witness.exterior.iter().copied());
        }
        Ok(SparseCollection {
            dim: self.dim,
            depth: self.depth,
            root: self.root.clone(),
            unit_bits: self.unit_bits,
            tau: self.tau * (2f64).powi(-(self.dim as i32)),
            entries: grouped
                .into_iter()
                .map(|(cube, witness)| SparseEntry { cube, witness })
                .collect(),
        })
    }

    /// Carleson constant `max_Q sum_{Q' ⊆ Q} |Q'| / |Q|` over the tree cubes of the family.
    pub fn carleson_constant(cubes: &[Cube], dim: usize, depth: u32, root: &Cube) -> Result<f64> {
        let (inside, _) = split_cubes(cubes, dim, depth, root)?;
        let members: std::collections::HashSet<(u32, usize)> = inside.iter().copied().collect();
        let mut mass: BTreeMap<(u32, usize), f64> = BTreeMap::new();
        for &(k, i) in &inside {
            let own = (2f64).powi(-((k as i32) * dim as i32));
            // Add the cube's own volume to itself and every ancestor that is also in the family.
            for up in (0..=k).rev() {
                let a = tree::ancestor_index(dim, k, i, up);
                if members.contains(&(up, a)) {
                    *mass.entry((up, a)).or_insert(0.0) += own;
                }
            }
        }
        Ok(mass
            .iter()
            .map(|(&(k, _), &m)| m / (2f64).powi(-((k as i32) * dim as i32)))
            .fold(0.0, f64::max))
    }

    /// Union of several families with witnesses reallocated bottom-up from the Carleson constant.
    ///
    /// With `Lambda` the Carleson constant, `tau = 2^{-ceil(log2 Lambda)}`; every cube gets
    /// `tau |Q|` taken from the still-free mass inside it, finest cubes first.
    pub fn union_certified(parts: &[&SparseCollection]) -> Result<SparseCollection> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Config("empty union".into()))?;
        let (dim, depth, root) = (first.dim, first.depth, first.root.clone());
        let mut all: BTreeSet<Cube> = BTreeSet::new();
        for p in parts {
            if p.dim != dim || p.depth != depth || p.root != root {
                return Err(Error::Domain("collections live on different trees".into()));
            }
            all.extend(p.entries.iter().map(|e| e.cube.clone()));
        }
        let cubes: Vec<Cube> = all.into_iter().collect();
        let lambda = Self::carleson_constant(&cubes, dim, depth, &root)?.max(1.0);
        let m = lambda.log2().ceil().max(0.0) as u32;
        let (mut inside, outside) = split_cubes(&cubes, dim, depth, &root)?;
        inside.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let cap = 1u32 << m;
        let mut free = vec![cap; tree::level_len(dim, depth)];
        let mut entries = Vec::with_capacity(cubes.len());
        for &(k, i) in &inside {
            let cells = tree::cells_of(dim, depth, k, i);
            let mut need = cells.len() as u64;
            let mut claimed = Vec::new();
            for c in cells {
                if need == 0 {
                    break;
                }
                let take = (free[c] as u64).min(need) as u32;
                if take > 0 {
                    free[c] -= take;
                    need -= take as u64;
                    claimed.push((c as u32, take));
                }
            }
            if need > 0 {
                return Err(Error::Precondition(
                    "greedy witness allocation ran out of mass".into(),
                ));
            }
            let c = tree::decode(dim, k, i);
            let cube = Cube::new(
                root.gen + k as i32,
                c.iter()
                    .zip(&root.coords)
                    .map(|(&l, &r)| (r << k) + l as i64)
                    .collect(),
            );
            entries.push(SparseEntry {
                cube,
                witness: Witness {
                    cells: claimed,
                    exterior: Vec::new(),
                },
            });
        }
        let mut tau = (2f64).powi(-(m as i32));
        for (q, up) in outside {
            entries.push(SparseEntry {
                cube: q,
                witness: Witness {
                    cells: Vec::new(),
                    exterior: vec![up],
                },
            });
            tau = tau.min(1.0 - (2f64).powi(-(dim as i32)));
        }
        Ok(SparseCollection {
            dim,
            depth,
            root,
            unit_bits: m,
            tau,
            entries,
        })
    }
}

/// Splits into tree cubes `(level, index)` and strict ancestors of the root `(cube, m)`.
fn split_cubes(
    cubes: &[Cube],
    dim: usize,
    depth: u32,
    root: &Cube,
) -> Result<(Vec<(u32, usize)>, Vec<(Cube, u32)>)> {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for q in cubes {
        match tree_locate(dim, depth, root, q)? {
            Location::Inside { level, index } => inside.push((level, index)),
            Location::ContainsRoot if q.gen < root.gen => {
                outside.push((q.clone(), (root.gen - q.gen) as u32))
            }
            Location::ContainsRoot => inside.push((0, 0)),
            Location::Disjoint => {
                return Err(Error::Domain(format!("{q:?} does not meet the root")));
            }
        }
    }
    inside.sort_unstable();
    inside.dedup();
    Ok((inside, outside))
}

/// Verifies witness containment, disjointness and `|E_Q| >= tau |Q|` in exact unit arithmetic.
pub fn check_sparse(c: &SparseCollection) -> SparseReport {
    let mut violations = Vec::new();
    let cap = 1u64 << c.unit_bits;
    let mut used = vec![0u64; c.cells_total() as usize];
    let mut annuli: BTreeSet<u32> = BTreeSet::new();
    let mut tau_observed = f64::INFINITY;
    let mut worst_cube = None;
    for e in &c.entries {
        let q = &e.cube;
        let loc = match tree_locate(c.dim, c.depth, &c.root, q) {
            Ok(l) => l,
            Err(err) => {
                violations.push(Violation {
                    cube: q.clone(),
                    kind: format!("unlocatable: {err}"),
                    ratio: 0.0,
                });
                continue;
            }
        };
        let mut measure: u128 = 0;
        for &(cell, units) in &e.witness.cells {
            let ok = match loc {
                Location::Inside { level, index } => {
                    (cell as usize) < used.len()
                        && tree::ancestor_index(c.dim, c.depth, cell as usize, level) == index
                }
                Location::ContainsRoot => (cell as usize) < used.len(),
                Location::Disjoint => false,
            };
            if !ok {
                violations.push(Violation {
                    cube: q.clone(),
                    kind: format!("cell {cell} outside the cube"),
                    ratio: 0.0,
                });
                continue;
            }
            used[cell as usize] += units as u64;
            if used[cell as usize] > cap {
                violations.push(Violation {
                    cube: q.clone(),
                    kind: format!("cell {cell} over-allocated"),
                    ratio: 0.0,
                });
            }
            measure += units as u128;
        }
        for &m in &e.witness.exterior {
            let contains =
                m >= 1 && matches!(loc, Location::ContainsRoot) && q.gen <= c.root.gen - m as i32;
            if !contains {
                violations.push(Violation {
                    cube: q.clone(),
                    kind: format!("annulus {m} outside the cube"),
                    ratio: 0.0,
                });
                continue;
            }
            if !annuli.insert(m) {
                violations.push(Violation {
                    cube: q.clone(),
                    kind: format!("annulus {m} reused"),
                    ratio: 0.0,
                });
            }
            measure += c.annulus_units(m);
        }
        let ratio = measure as f64 / c.volume_units(q) as f64;
        if ratio < tau_observed {
            tau_observed = ratio;
            worst_cube = Some(q.clone());
        }
        if (measure as f64) < c.tau * c.volume_units(q) as f64 {
            violations.push(Violation {
                cube: q.clone(),
                kind: "witness too small".into(),
                ratio,
            });
        }
    }
    if c.entries.is_empty() {
        tau_observed = 1.0;
    }
    SparseReport {
        tau_claimed: c.tau,
        tau_observed,
        worst_cube,
        cubes: c.entries.len(),
        passed: violations.is_empty(),
        violations,
    }
}
