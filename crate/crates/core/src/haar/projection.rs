use serde::{Deserialize, Serialize};

use crate::decomposition::StoppingForest;
use crate::dyadic_grid::Cube;
use crate::error::{Error, Result};
use crate::grid_fn::{tree, GridFunction, Location};
use crate::scalar::Scalar;

/// The sigma-algebra generated by disjoint atoms inside a stopping cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingSigma {
    pub parent: Cube,
    pub atoms: Vec<Cube>,
}

/// `E[f | sigma]`: averages on the atoms, `f` elsewhere.
pub fn conditional_expectation<T: Scalar>(
    f: &GridFunction<T>,
    sigma: &StoppingSigma,
) -> Result<GridFunction<T>> {
    let integ = f.integrator();
    let parent_mask = f.indicator_mask(&sigma.parent)?;
    let mut owner: Vec<Option<usize>> = vec![None; f.len()];
    let mut vals = f.values().to_vec();
    for (a, atom) in sigma.atoms.iter().enumerate() {
        let Location::Inside { level, index } = integ.locate(atom)? else {
            return Err(Error::InvalidSigma(format!(
                "atom {atom:?} is not a cube of the tree"
            )));
        };
        let avg = integ.level_average(level, index);
        for c in tree::cells_of(f.dim(), f.depth(), level, index) {
            if !parent_mask[c] {
                return Err(Error::InvalidSigma(format!(
                    "atom {atom:?} leaves the parent cube"
                )));
            }
            if let Some(b) = owner[c] {
                return Err(Error::InvalidSigma(format!("atoms {b} and {a} overlap")));
            }
            owner[c] = Some(a);
            vals[c] = avg;
        }
    }
    f.with_values(vals)
}

/// Which part of the stopping tree a projection sums over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProjectionMode {
    /// `Stop(S)`.
    Plain,
    /// `rStop(S)`.
    RShifted { r: u32 },
    /// `{Q in rStop(S) : Q ⊆ hat}` for a maximal cube `hat` of `rStop(S)`.
    Maximal { r: u32, hat: Cube },
}

/// `sum_{Q in family} Delta_Q f` for the family selected by `mode`.
pub fn haar_projection<T: Scalar>(
    f: &GridFunction<T>,
    forest: &StoppingForest,
    s: &Cube,
    mode: &ProjectionMode,
) -> Result<GridFunction<T>> {
    if !forest.matches(f) {
        return Err(Error::Domain(
            "function and forest live on different trees".into(),
        ));
    }
    let node = forest
        .node_of(s)
        .ok_or_else(|| Error::Domain(format!("{s:?} is not a stopping cube")))?;
    let dim = f.dim();
    let depth = f.depth();
    let restrict = match mode {
        ProjectionMode::Maximal { r, hat } => {
            if !forest.maximal_r_stop(node, *r).contains(hat) {
                return Err(Error::Domain(format!(
                    "{hat:?} is not a maximal cube of rStop"
                )));
            }
            match f.integrator().locate(hat)? {
                Location::Inside { level, index } => Some((level, index)),
                _ => return Err(Error::Domain("maximal cube outside the root".into())),
            }
        }
        _ => None,
    };
    let member = |k: u32, idx: usize| -> bool {
        match mode {
            ProjectionMode::Plain => forest.hat_node(k, idx) == node,
            ProjectionMode::RShifted { r } => forest.r_hat_node(k, idx, *r) == node,
            ProjectionMode::Maximal { r, .. } => {
                let (hl, hi) = restrict.expect("validated above");
                k >= hl
                    && tree::ancestor_index(dim, k, idx, hl) == hi
                    && forest.r_hat_node(k, idx, *r) == node
            }
        }
    };
    let members: Vec<Vec<bool>> = (0..depth)
        .map(|k| (0..tree::level_len(dim, k)).map(|i| member(k, i)).collect())
        .collect();
    let integ = f.integrator();
    let mut vals = vec![T::zero(); f.len()];
    for (cell, v) in vals.iter_mut().enumerate() {
        let mut acc = T::zero();
        let mut prev = integ.level_average(0, 0);
        for k in 0..depth {
            let child = tree::ancestor_index(dim, depth, cell, k + 1);
            let next = integ.level_average(k + 1, child);
            if members[k as usize][tree::ancestor_index(dim, depth, cell, k)] {
                acc = acc + (next - prev);
            }
            prev = next;
        }
        *v = acc;
    }
    f.with_values(vals)
}
