use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Exact dyadic rational `num / 2^exp`, kept normalised (odd numerator or zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    num: i128,
    exp: i32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };

    pub fn new(num: i128, exp: i32) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalise();
        d
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(n as i128, 0)
    }

    /// `2^k`.
    pub fn pow2(k: i32) -> Self {
        if k >= 0 {
            Self::new(1i128 << k, 0)
        } else {
            Self::new(1, -k)
        }
    }

    fn normalise(&mut self) {
        if self.num == 0 {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros() as i32;
        self.num >>= tz;
        self.exp -= tz;
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn exponent(&self) -> i32 {
        self.exp
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 * (2f64).powi(-self.exp)
    }

    fn aligned(a: Self, b: Self) -> (i128, i128) {
        let e = a.exp.max(b.exp);
        (a.num << (e - a.exp), b.num << (e - b.exp))
    }

    pub fn add(self, other: Self) -> Self {
        let e = self.exp.max(other.exp);
        let (x, y) = Self::aligned(self, other);
        Self::new(x + y, e)
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(Dyadic {
            num: -other.num,
            exp: other.exp,
        })
    }

    pub fn mul(self, other: Self) -> Self {
        Self::new(self.num * other.num, self.exp + other.exp)
    }

    pub fn abs(self) -> Self {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (x, y) = Self::aligned(*self, *other);
        x.cmp(&y)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp <= 0 {
            write!(f, "{}", self.num << (-self.exp))
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}
