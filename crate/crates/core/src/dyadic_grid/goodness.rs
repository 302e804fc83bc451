use std::cmp::Ordering;

use num_bigint::BigUint;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::{Cube, DyadicGrid};
use crate::error::{Error, Result};

/// Parameters of the goodness test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodnessParams {
    pub r: u32,
    pub gamma: Rational64,
    pub alpha: f64,
    pub dim: usize,
}

impl GoodnessParams {
    /// `gamma = alpha / (4 alpha + 4 d)`, computed exactly from a rational approximation of alpha.
    pub fn new(r: u32, alpha: f64, dim: usize) -> Result<Self> {
        let a = Rational64::approximate_float(alpha)
            .ok_or_else(|| Error::Domain(format!("alpha {alpha} not representable")))?;
        let four = Rational64::from_integer(4);
        let gamma = a / (four * a + four * Rational64::from_integer(dim as i64));
        Self::with_gamma(r, alpha, dim, gamma)
    }

    pub fn with_gamma(r: u32, alpha: f64, dim: usize, gamma: Rational64) -> Result<Self> {
        if r < 1 {
            return Err(Error::Domain("r must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("alpha {alpha} outside (0, 1]")));
        }
        if !(gamma.is_positive() && gamma < Rational64::new(1, 2)) {
            return Err(Error::Domain(format!("gamma {gamma} outside (0, 1/2)")));
        }
        Ok(GoodnessParams {
            r,
            gamma,
            alpha,
            dim,
        })
    }

    pub fn gamma_f64(&self) -> f64 {
        self.gamma.to_f64().unwrap_or(f64::NAN)
    }
}

/// Compares `dist_units * 2^{-unit_exp}` with `2^{extra} * (2^{-small_gen})^gamma * (2^{-large_gen})^{1-gamma}`.
///
/// Exact: both sides are raised to the denominator of gamma.
pub fn compare_power_mean(
    dist_units: i64,
    unit_exp: i32,
    small_gen: i32,
    large_gen: i32,
    gamma: Rational64,
    extra: i32,
) -> Ordering {
    if dist_units <= 0 {
        return Ordering::Less;
    }
    let a = *gamma.numer();
    let b = *gamma.denom();
    let e: i64 =
        b * extra as i64 - a * small_gen as i64 - (b - a) * large_gen as i64 + b * unit_exp as i64;
    let mut lhs = BigUint::from(dist_units as u64).pow(b as u32);
    let mut rhs = BigUint::one();
    if e >= 0 {
        rhs <<= e as usize;
    } else {
        lhs <<= (-e) as usize;
    }
    lhs.cmp(&rhs)
}

/// Outcome of [`DyadicGrid::common_ancestor_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncestorCheck {
    pub ancestor: Cube,
    pub hypotheses_hold: bool,
    pub bound_holds: bool,
}

impl DyadicGrid {
    /// r-goodness of `r_cube` against every ancestor at least `r` generations up, down to `horizon`.
    pub fn is_good(&self, r_cube: &Cube, params: &GoodnessParams, horizon: i32) -> bool {
        let stop = horizon.max(self.top);
        let first = r_cube.gen - params.r as i32;
        if first < stop {
            return true;
        }
        let Ok(mut p) = self.ancestor(r_cube, params.r) else {
            return true;
        };
        loop {
            let du = self.boundary_distance_units(r_cube, &p);
            let ord = compare_power_mean(du, self.unit_exp(), r_cube.gen, p.gen, params.gamma, 0);
            if ord != Ordering::Greater {
                return false;
            }
            if p.gen <= stop {
                return true;
            }
            p = match self.ancestor(&p, 1) {
                Ok(q) => q,
                Err(_) => return true,
            };
        }
    }

    /// Common ancestor plus the separation bound check.
    pub fn common_ancestor_check(
        &self,
        p: &Cube,
        r: &Cube,
        params: &GoodnessParams,
    ) -> Result<AncestorCheck> {
        let k = self.common_ancestor(p, r)?;
        let (small, large) = if r.gen >= p.gen { (r, p) } else { (p, r) };
        let du = self.distance_units(p, r);
        let n = self.unit_exp();
        let separated =
            compare_power_mean(du, n, small.gen, large.gen, params.gamma, 0) == Ordering::Greater;
        let hypotheses_hold = separated && self.is_good(small, params, self.top);
        let bound_holds =
            compare_power_mean(du, n, small.gen, k.gen, params.gamma, -(params.r as i32))
                != Ordering::Less;
        Ok(AncestorCheck {
            ancestor: k,
            hypotheses_hold,
            bound_holds,
        })
    }
}
