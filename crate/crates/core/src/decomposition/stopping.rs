use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::sparse::{SparseCollection, SparseEntry, Witness};
use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::grid_fn::{tree, GridFunction, Integrator, Location};
use crate::haar::StoppingSigma;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingMode {
    /// Stop when either `<|f|>` or `<|g|>` jumps.
    FAndG,
    /// Stop on `<|g|>` only.
    GOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    Root,
    F,
    G,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingOptions {
    pub a: f64,
    pub mode: StoppingMode,
    /// Double `A` locally when the halving condition fails instead of erroring.
    pub adapt: bool,
}

impl StoppingOptions {
    /// `A = 2^{d+2}`, joint mode, adaptive.
    pub fn default_for(dim: usize) -> Self {
        StoppingOptions {
            a: (2f64).powi(dim as i32 + 2),
            mode: StoppingMode::FAndG,
            adapt: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopNode {
    pub cube: Cube,
    pub level: u32,
    pub index: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub generation: u32,
    pub trigger: Trigger,
    /// The constant used when selecting this node's children.
    pub a_used: f64,
}

/// Nested JSON view: `{cube, trigger, a_used, children}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestNode {
    pub cube: Cube,
    pub trigger: Trigger,
    pub a_used: f64,
    pub children: Vec<ForestNode>,
}

/// The stopping family with a `hat` lookup for every tree cube.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoppingForest {
    pub dim: usize,
    pub depth: u32,
    pub root: Cube,
    pub a: f64,
    pub mode: StoppingMode,
    pub nodes: Vec<StopNode>,
    /// Cubes where `A` had to be doubled, with the value used.
    pub adjustments: Vec<(Cube, f64)>,
    #[serde(skip)]
    hat: Vec<Vec<u32>>,
}

pub fn build_stopping_family<T: Scalar>(
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    q0: &Cube,
    opts: &StoppingOptions,
) -> Result<StoppingForest> {
    f.ensure_same_layout(g)?;
    if q0 != f.root() {
        return Err(Error::Domain(
            "the stopping family is rooted at the grid root".into(),
        ));
    }
    if !(opts.a > 1.0) {
        return Err(Error::Domain(format!("A = {} must exceed 1", opts.a)));
    }
    let dim = f.dim();
    let depth = f.depth();
    let fi = f.abs().integrator();
    let gi = g.abs().integrator();
    let mut hat: Vec<Vec<u32>> = (0..=depth)
        .map(|k| vec![u32::MAX; tree::level_len(dim, k)])
        .collect();
    hat[0][0] = 0;
    let mut nodes = vec![StopNode {
        cube: q0.clone(),
        level: 0,
        index: 0,
        parent: None,
        children: Vec::new(),
        generation: 0,
        trigger: Trigger::Root,
        a_used: opts.a,
    }];
    let mut adjustments = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(n) = queue.pop_front() {
        let (ks, is) = (nodes[n].level, nodes[n].index);
        let mut a = opts.a;
        let selected = loop {
            let sel = scan(
                &fi,
                &gi,
                opts.mode,
                T::of_f64(a),
                ks,
                is,
                n as u32,
                &mut hat,
            );
            let cells: usize = sel
                .iter()
                .map(|&(k, _, _)| tree::level_len(dim, depth - k))
                .sum();
            let total = tree::level_len(dim, depth - ks);
            if 2 * cells <= total {
                break sel;
            }
            if !opts.adapt {
                return Err(Error::StoppingMeasure {
                    gen: nodes[n].cube.gen,
                    coords: nodes[n].cube.coords.clone(),
                    ratio: cells as f64 / total as f64,
                });
            }
            a *= 2.0;
        };
        if a != opts.a {
            adjustments.push((nodes[n].cube.clone(), a));
        }
        nodes[n].a_used = a;
        for (k, i, trigger) in selected {
            let id = nodes.len();
            hat[k as usize][i] = id as u32;
            nodes.push(StopNode {
                cube: f.tree_cube(k, i),
                level: k,
                index: i,
                parent: Some(n),
                children: Vec::new(),
                generation: nodes[n].generation + 1,
                trigger,
                a_used: opts.a,
            });
            nodes[n].children.push(id);
            queue.push_back(id);
        }
    }
    Ok(StoppingForest {
        dim,
        depth,
        root: q0.clone(),
        a: opts.a,
        mode: opts.mode,
        nodes,
        adjustments,
        hat,
    })
}

/// Top-down scan of the subtree of `(ks, is)`; marks unselected cubes with `node` and returns the maximal triggering cubes.
#[allow(clippy::too_many_arguments)]
fn scan<T: Scalar>(
    fi: &Integrator<T>,
    gi: &Integrator<T>,
    mode: StoppingMode,
    a: T,
    ks: u32,
    is: usize,
    node: u32,
    hat: &mut [Vec<u32>],
) -> Vec<(u32, usize, Trigger)> {
    let dim = fi.dim();
    let depth = fi.depth();
    let tf = a * fi.level_average(ks, is);
    let tg = a * gi.level_average(ks, is);
    let mut out = Vec::new();
    if ks == depth {
        return out;
    }
    let mut stack: Vec<(u32, usize)> = (0..(1usize << dim))
        .map(|e| (ks + 1, tree::child_index(dim, ks, is, e)))
        .collect();
    while let Some((k, i)) = stack.pop() {
        let by_f = mode == StoppingMode::FAndG && fi.level_average(k, i) > tf;
        let by_g = gi.level_average(k, i) > tg;
        if by_f || by_g {
            let trig = match (by_f, by_g) {
                (true, true) => Trigger::Both,
                (true, false) => Trigger::F,
                _ => Trigger::G,
            };
            out.push((k, i, trig));
            continue;
        }
        hat[k as usize][i] = node;
        if k < depth {
            for e in 0..(1usize << dim) {
                stack.push((k + 1, tree::child_index(dim, k, i, e)));
            }
        }
    }
    out.sort_unstable_by_key(|&(k, i, _)| (k, i));
    out
}

impl StoppingForest {
    pub fn matches<T>(&self, f: &GridFunction<T>) -> bool {
        self.dim == f.dim() && self.depth == f.depth() && &self.root == f.root()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cubes(&self) -> Vec<Cube> {
        self.nodes.iter().map(|n| n.cube.clone()).collect()
    }

    fn locate(&self, q: &Cube) -> Result<Location> {
        crate::grid_fn::tree_locate(self.dim, self.depth, &self.root, q)
    }

    /// Node index of a stopping cube.
    pub fn node_of(&self, q: &Cube) -> Option<usize> {
        match self.locate(q).ok()? {
            Location::Inside { level, index } => {
                let n = self.hat[level as usize][index] as usize;
                (self.nodes[n].level == level && self.nodes[n].index == index).then_some(n)
            }
            _ => None,
        }
    }

    /// Node index of `hat(Q)` for tree cube `(k, i)`.
    #[inline]
    pub fn hat_node(&self, k: u32, index: usize) -> usize {
        self.hat[k as usize][index] as usize
    }

    /// Node index of `hat(Q^{(r)})`; cubes whose r-ancestor lies above the root count towards the root.
    #[inline]
    pub fn r_hat_node(&self, k: u32, index: usize, r: u32) -> usize {
        if k < r {
            0
        } else {
            self.hat_node(k - r, tree::ancestor_index(self.dim, k, index, k - r))
        }
    }

    /// `Q̂`, the minimal stopping cube containing `Q`.
    pub fn assign_hat(&self, q: &Cube) -> Result<Cube> {
        match self.locate(q)? {
            Location::Inside { level, index } => {
                Ok(self.nodes[self.hat_node(level, index)].cube.clone())
            }
            _ => Err(Error::Domain(format!("{q:?} is not inside the root"))),
        }
    }

    /// `Stop(S)` as `(level, index)` pairs.
    pub fn stop_cubes(&self, node: usize) -> Vec<(u32, usize)> {
        self.collect(node, |k, i| self.hat_node(k, i) == node)
    }

    /// `rStop(S)` as `(level, index)` pairs.
    pub fn r_stop_cubes(&self, node: usize, r: u32) -> Vec<(u32, usize)> {
        self.collect(node, |k, i| self.r_hat_node(k, i, r) == node)
    }

    fn collect(&self, node: usize, pred: impl Fn(u32, usize) -> bool) -> Vec<(u32, usize)> {
        let n = &self.nodes[node];
        let mut out = Vec::new();
        for k in n.level..=self.depth {
            for i in 0..tree::level_len(self.dim, k) {
                if tree::ancestor_index(self.dim, k, i, n.level) == n.index && pred(k, i) {
                    out.push((k, i));
                }
            }
        }
        out
    }

    /// Maximal cubes of `rStop(S)`.
    pub fn maximal_r_stop(&self, node: usize, r: u32) -> Vec<Cube> {
        let members = self.r_stop_cubes(node, r);
        let set: std::collections::HashSet<(u32, usize)> = members.iter().copied().collect();
        members
            .iter()
            .filter(|&&(k, i)| {
                k == 0 || !set.contains(&(k - 1, tree::parent_index(self.dim, k, i)))
            })
            .map(|&(k, i)| self.tree_cube(k, i))
            .collect()
    }

    fn tree_cube(&self, k: u32, i: usize) -> Cube {
        let c = tree::decode(self.dim, k, i);
        Cube::new(
            self.root.gen + k as i32,
            c.iter()
                .zip(&self.root.coords)
                .map(|(&l, &r)| (r << k) + l as i64)
                .collect(),
        )
    }

    /// `G_S`: atoms are the stopping children of `S`.
    pub fn sigma(&self, node: usize) -> StoppingSigma {
        StoppingSigma {
            parent: self.nodes[node].cube.clone(),
            atoms: self.nodes[node]
                .children
                .iter()
                .map(|&c| self.nodes[c].cube.clone())
                .collect(),
        }
    }

    /// `G_S^r`: atoms are the r-grandchildren of the stopping children of `S`.
    pub fn sigma_r(&self, node: usize, r: u32) -> Result<StoppingSigma> {
        let mut atoms = Vec::new();
        for &c in &self.nodes[node].children {
            let ch = &self.nodes[c];
            if ch.level + r > self.depth {
                return Err(Error::Resolution(
                    "r-grandchildren below the finest generation".into(),
                ));
            }
            for gi in tree::cells_of(self.dim, ch.level + r, ch.level, ch.index) {
                atoms.push(self.tree_cube(ch.level + r, gi));
            }
        }
        Ok(StoppingSigma {
            parent: self.nodes[node].cube.clone(),
            atoms,
        })
    }

    /// Witnesses `E_S = S \ ∪ children(S)`; certified 1/2-sparse by construction.
    pub fn sparse_collection(&self) -> SparseCollection {
        let cells = tree::level_len(self.dim, self.depth);
        let mut owner = vec![0u32; cells];
        for (c, o) in owner.iter_mut().enumerate() {
            *o = self.hat_node(self.depth, c) as u32;
        }
        let mut witnesses: Vec<Vec<(u32, u32)>> = vec![Vec::new(); self.nodes.len()];
        for (c, &o) in owner.iter().enumerate() {
            witnesses[o as usize].push((c as u32, 1));
        }
        let entries = self
            .nodes
            .iter()
            .zip(witnesses)
            .map(|(n, cells)| SparseEntry {
                cube: n.cube.clone(),
                witness: Witness {
                    cells,
                    exterior: Vec::new(),
                },
            })
            .collect();
        SparseCollection {
            dim: self.dim,
            depth: self.depth,
            root: self.root.clone(),
            unit_bits: 0,
            tau: 0.5,
            entries,
        }
    }

    pub fn to_tree(&self) -> ForestNode {
        self.subtree(0)
    }

    fn subtree(&self, n: usize) -> ForestNode {
        let node = &self.nodes[n];
        ForestNode {
            cube: node.cube.clone(),
            trigger: node.trigger,
            a_used: node.a_used,
            children: node.children.iter().map(|&c| self.subtree(c)).collect(),
        }
    }
}
