//! The one-dimensional function `alpha(t) = |x t - u|_1` and its subdifferential.
//!
//! `alpha` is convex and piecewise affine, so `∂alpha` is a nondecreasing step
//! function. Its jumps sit at the ratios `u_i / x_i` for `x_i != 0`; between jumps it
//! is single-valued, and at a jump it is the closed interval bridging the two
//! neighboring cell values.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interval::{interval_sum, sgn, sign_interval, IntervalScalar};
use crate::model::{Instance, Point};
use crate::rational::Rational;

/// `∂alpha` with explicit jump points.
///
/// `cell_values[k]` is the value on the open cell left of `jumps[k]`;
/// the last entry is the value right of the largest jump. With no jumps there is a
/// single cell covering the whole line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFunction {
    jumps: Vec<Rational>,
    cell_values: Vec<Rational>,
    at_jump: Vec<IntervalScalar>,
}

/// Closed, possibly unbounded interval; `None` bounds are infinite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootInterval {
    pub lo: Option<Rational>,
    pub hi: Option<Rational>,
}

impl RootInterval {
    pub fn contains(&self, t: &Rational) -> bool {
        self.lo.as_ref().is_none_or(|lo| lo <= t) && self.hi.as_ref().is_none_or(|hi| t <= hi)
    }

    pub fn is_unbounded(&self) -> bool {
        self.lo.is_none() || self.hi.is_none()
    }
}

/// Single-valued `sum_i sgn(x_i t - u_i) x_i`, correct at any `t` that is not a jump.
fn cell_value(x: &[Rational], u: &[Rational], t: &Rational) -> Rational {
    x.iter()
        .zip(u)
        .map(|(xi, ui)| sgn(&(xi * t - ui)) * xi)
        .sum()
}

impl StepFunction {
    pub fn jumps(&self) -> &[Rational] {
        &self.jumps
    }

    pub fn cell_values(&self) -> &[Rational] {
        &self.cell_values
    }

    pub fn at_jump(&self) -> &[IntervalScalar] {
        &self.at_jump
    }

    /// `∂alpha(t)`: a singleton inside a cell, the bridging interval at a jump.
    pub fn eval(&self, t: &Rational) -> IntervalScalar {
        match self.jumps.binary_search(t) {
            Ok(k) => self.at_jump[k].clone(),
            Err(k) => IntervalScalar::singleton(self.cell_values[k].clone()),
        }
    }

    /// `{t : 0 in ∂alpha(t)}`, or `None` when `∂alpha` never reaches zero.
    ///
    /// The pieces (cell 0, jump 0, cell 1, ..., cell K) are visited in order; the
    /// ones containing zero form a contiguous run by monotonicity, and the closure
    /// of their union is the root set.
    pub fn zero_root_interval(&self) -> Option<RootInterval> {
        let zero = Rational::zero();
        let k = self.jumps.len();
        // piece 2m is cell m, piece 2m+1 is jump m.
        let contains = |p: usize| -> bool {
            if p.is_multiple_of(2) {
                self.cell_values[p / 2].is_zero()
            } else {
                self.at_jump[p / 2].contains(&zero)
            }
        };
        let first = (0..=2 * k).find(|&p| contains(p))?;
        let last = (0..=2 * k).rev().find(|&p| contains(p))?;
        let lo = if first % 2 == 1 {
            Some(self.jumps[first / 2].clone())
        } else if first == 0 {
            None
        } else {
            Some(self.jumps[first / 2 - 1].clone())
        };
        let hi = if last % 2 == 1 {
            Some(self.jumps[last / 2].clone())
        } else if last == 2 * k {
            None
        } else {
            Some(self.jumps[last / 2].clone())
        };
        Some(RootInterval { lo, hi })
    }
}

/// Build `∂alpha` for `(x, u)`.
///
/// Duplicate ratios merge into one jump. Cell values come from direct evaluation at
/// an interior point of each cell (midpoints between jumps, one unit beyond the
/// extremes).
pub fn build_step(x: &Point, u: &Instance) -> Result<StepFunction> {
    u.check(x)?;
    let (x, u) = (&x.x, &u.u);
    let mut jumps: Vec<Rational> = x
        .iter()
        .zip(u)
        .filter(|(xi, _)| !xi.is_zero())
        .map(|(xi, ui)| ui / xi)
        .collect();
    jumps.sort();
    jumps.dedup();

    let one = Rational::one();
    let two = Rational::from_integer(2);
    let probes: Vec<Rational> = if jumps.is_empty() {
        vec![Rational::zero()]
    } else {
        let mut p = Vec::with_capacity(jumps.len() + 1);
        p.push(&jumps[0] - &one);
        for w in jumps.windows(2) {
            p.push((&w[0] + &w[1]) / &two);
        }
        p.push(jumps.last().unwrap() + &one);
        p
    };
    let cell_values: Vec<Rational> = probes.iter().map(|t| cell_value(x, u, t)).collect();
    let at_jump = cell_values
        .windows(2)
        .map(|w| IntervalScalar::new(w[0].clone(), w[1].clone()))
        .collect();
    Ok(StepFunction {
        jumps,
        cell_values,
        at_jump,
    })
}

/// `|x t - u|_1`.
pub fn alpha_value(x: &Point, u: &Instance, t: &Rational) -> Result<Rational> {
    u.check(x)?;
    Ok(x.x
        .iter()
        .zip(&u.u)
        .map(|(xi, ui)| (xi * t - ui).abs())
        .sum())
}

/// `∂alpha(t)` read off a built step function.
pub fn eval_subdiff(sf: &StepFunction, t: &Rational) -> IntervalScalar {
    sf.eval(t)
}

/// `∂alpha(t)` as the direct Minkowski sum `sum_i sign(x_i t - u_i) x_i`.
pub fn subdiff_direct(x: &Point, u: &Instance, t: &Rational) -> Result<IntervalScalar> {
    u.check(x)?;
    Ok(interval_sum(
        x.x.iter()
            .zip(&u.u)
            .map(|(xi, ui)| sign_interval(&(xi * t - ui)).scale(xi)),
    ))
}

pub fn zero_root_interval(sf: &StepFunction) -> Option<RootInterval> {
    sf.zero_root_interval()
}

/// `max A <= min B`, the order used for monotonicity of set-valued maps.
pub fn precedes(a: &IntervalScalar, b: &IntervalScalar) -> bool {
    a.hi().cmp(b.lo()) != Ordering::Greater
}
