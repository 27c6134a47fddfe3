//! Closed rational intervals and the set-valued sign.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::Rational;

/// A closed interval `[lo, hi]` with `lo <= hi`. Singletons have `lo == hi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntervalScalar {
    lo: Rational,
    hi: Rational,
}

impl IntervalScalar {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "interval with lo > hi: [{lo}, {hi}]");
        IntervalScalar { lo, hi }
    }

    pub fn singleton(v: Rational) -> Self {
        IntervalScalar {
            lo: v.clone(),
            hi: v,
        }
    }

    /// `[-1, 1]`, the value of `sign(0)`.
    pub fn unit() -> Self {
        IntervalScalar {
            lo: Rational::from_integer(-1),
            hi: Rational::one(),
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&Rational::zero())
    }

    pub fn is_subset_of(&self, other: &IntervalScalar) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Minkowski sum.
    pub fn add(&self, other: &IntervalScalar) -> IntervalScalar {
        IntervalScalar {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    /// `{ s * c : s in self }`. A zero scale collapses to `{0}`.
    pub fn scale(&self, c: &Rational) -> IntervalScalar {
        let a = &self.lo * c;
        let b = &self.hi * c;
        if a <= b {
            IntervalScalar { lo: a, hi: b }
        } else {
            IntervalScalar { lo: b, hi: a }
        }
    }
}

impl fmt::Display for IntervalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_singleton() {
            write!(f, "{{{}}}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// Set-valued sign: `{1}` for positive, `{-1}` for negative, `[-1, 1]` at zero.
pub fn sign_interval(t: &Rational) -> IntervalScalar {
    if t.is_zero() {
        IntervalScalar::unit()
    } else {
        IntervalScalar::singleton(t.signum())
    }
}

/// Single-valued sign with `sgn(0) = 0`.
pub fn sgn(t: &Rational) -> Rational {
    t.signum()
}

/// Minkowski sum of a sequence of intervals; the empty sum is `{0}`.
pub fn interval_sum<I: IntoIterator<Item = IntervalScalar>>(terms: I) -> IntervalScalar {
    terms
        .into_iter()
        .fold(IntervalScalar::singleton(Rational::zero()), |acc, t| {
            acc.add(&t)
        })
}
