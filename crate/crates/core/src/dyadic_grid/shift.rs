use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncated shift sequence: one bit per axis for each generation in `[lo, hi]`.
///
/// `bits[i - lo][axis]` is the bit for generation `i`; generations outside the
/// stored range read as zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftSeq {
    pub dim: usize,
    pub lo: i32,
    pub bits: Vec<Vec<u8>>,
}

impl ShiftSeq {
    /// The zero sequence (standard grid); covers every generation.
    pub fn zero(dim: usize) -> Self {
        ShiftSeq {
            dim,
            lo: i32::MIN / 4,
            bits: Vec::new(),
        }
    }

    pub fn from_bits(dim: usize, lo: i32, bits: Vec<Vec<u8>>) -> Result<Self> {
        for row in &bits {
            if row.len() != dim || row.iter().any(|&b| b > 1) {
                return Err(Error::Domain(
                    "shift rows must hold one 0/1 bit per axis".into(),
                ));
            }
        }
        Ok(ShiftSeq { dim, lo, bits })
    }

    /// Uniform random bits for generations `lo..=hi`.
    pub fn random<R: Rng + ?Sized>(dim: usize, lo: i32, hi: i32, rng: &mut R) -> Self {
        let n = (hi - lo + 1).max(0) as usize;
        let bits = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(0..2u8)).collect())
            .collect();
        ShiftSeq { dim, lo, bits }
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.bits.len() as i32 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|r| r.iter().all(|&b| b == 0))
    }

    pub fn bit(&self, gen: i32, axis: usize) -> i64 {
        if gen < self.lo || gen > self.hi() {
            return 0;
        }
        self.bits[(gen - self.lo) as usize][axis] as i64
    }

    /// Offset `x_j = sum_{i > j} w_i 2^{-i}` in units of `2^{-unit_exp}`.
    pub fn offset_units(&self, gen: i32, unit_exp: i32) -> Vec<i64> {
        let mut out = vec![0i64; self.dim];
        let start = (gen + 1).max(self.lo);
        for i in start..=self.hi().min(unit_exp) {
            for (axis, o) in out.iter_mut().enumerate() {
                *o += self.bit(i, axis) << (unit_exp - i);
            }
        }
        out
    }
}
