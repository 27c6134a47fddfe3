//! First-order stationarity, decided two independent ways.
//!
//! `0 ∈ ∂f(x)` iff some symmetric `Λ ∈ sign(x x^T - u u^T)` has `Λ x = 0`. The
//! LP route searches for that witness directly with exact simplex. The closed-form
//! route tests membership in `{x : <sgn u, x> = 0, |x_i| <= |u_i|} ∪ {±u}`. The two
//! must agree on every input; [`certify`] treats a disagreement as a bug.

use serde::{Deserialize, Serialize};

use crate::alpha::build_step;
use crate::error::{Error, Result};
use crate::interval::sgn;
use crate::model::{box_contains_zero, objective, residual, subdiff_box, Instance, Point};
use crate::rational::Rational;
use crate::simplex::feasible_point;

/// Outcome of [`certify`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub stationary: bool,
    pub via_closed_form: bool,
    /// Symmetric `Λ` with `Λ x = 0`, entries in their sign intervals.
    pub witness: Option<Vec<Vec<Rational>>>,
    pub box_test_passed: bool,
    /// `f(x) = 0`, i.e. `x = ±u`.
    pub is_global: bool,
}

/// Closed-form stationarity test.
pub fn stationary_closed_form(x: &Point, u: &Instance) -> Result<bool> {
    u.check(x)?;
    if x.x == u.u || x.x.iter().zip(&u.u).all(|(a, b)| *a == -b) {
        return Ok(true);
    }
    let in_box = x.x.iter().zip(&u.u).all(|(a, b)| a.abs() <= b.abs());
    if !in_box {
        return Ok(false);
    }
    // Inside the box x_i = 0 wherever u_i = 0, so sgn and the set-valued sign agree.
    let inner: Rational = x.x.iter().zip(&u.u).map(|(a, b)| sgn(b) * a).sum();
    Ok(inner.is_zero())
}

/// Exact search for a symmetric witness `Λ ∈ sign(x x^T - u u^T)` with `Λ x = 0`.
///
/// Entries with a nonzero residual are fixed to its sign. Each zero-residual entry
/// `(i, j)`, `i <= j`, is one variable in `[-1, 1]`, shared by `(j, i)`.
#[allow(clippy::needless_range_loop)]
pub fn witness_lp(x: &Point, u: &Instance) -> Result<Option<Vec<Vec<Rational>>>> {
    let res = residual(x, u)?;
    let n = x.dim();
    let xs = &x.x;

    let mut free = Vec::new();
    let mut lambda = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let r = res.get(i, j);
            if r.is_zero() {
                free.push((i, j));
            } else {
                lambda[i][j] = sgn(r);
                lambda[j][i] = sgn(r);
            }
        }
    }

    // Substitute λ = y - 1 with y in [0, 2].
    let m = free.len();
    let mut a = vec![vec![Rational::zero(); m]; n];
    let mut b: Vec<Rational> = (0..n)
        .map(|i| -(0..n).map(|j| &lambda[i][j] * &xs[j]).sum::<Rational>())
        .collect();
    for (k, &(i, j)) in free.iter().enumerate() {
        a[i][k] += &xs[j];
        b[i] += &xs[j];
        if i != j {
            a[j][k] += &xs[i];
            b[j] += &xs[i];
        }
    }
    let upper = vec![Rational::from_integer(2); m];
    let Some(y) = feasible_point(&a, &b, &upper) else {
        return Ok(None);
    };
    let one = Rational::one();
    for (&(i, j), yk) in free.iter().zip(&y) {
        let v = yk - &one;
        lambda[i][j] = v.clone();
        lambda[j][i] = v;
    }
    Ok(Some(lambda))
}

/// Checks `Λ = Λ^T`, `Λ x = 0` and entrywise membership in `sign(x x^T - u u^T)`.
pub fn is_valid_witness(lambda: &[Vec<Rational>], x: &Point, u: &Instance) -> Result<bool> {
    let res = residual(x, u)?;
    let n = x.dim();
    if lambda.len() != n || lambda.iter().any(|r| r.len() != n) {
        return Ok(false);
    }
    let symmetric = (0..n).all(|i| (0..i).all(|j| lambda[i][j] == lambda[j][i]));
    let annihilates = lambda.iter().all(|row| {
        row.iter()
            .zip(&x.x)
            .map(|(l, v)| l * v)
            .sum::<Rational>()
            .is_zero()
    });
    Ok(symmetric && annihilates && res.sign().contains(lambda))
}

/// Run the closed-form test, the LP, and the box test, and cross-check them.
///
/// Returns [`Error::Invariant`] with a diagnostic dump if the closed form and the LP
/// disagree, if the box test rejects a point either route accepts, or if a witness
/// fails validation.
pub fn certify(x: &Point, u: &Instance) -> Result<Certificate> {
    let via_closed_form = stationary_closed_form(x, u)?;
    let witness = witness_lp(x, u)?;
    let box_test_passed = box_contains_zero(&subdiff_box(x, u)?);
    let is_global = objective(x, u)?.is_zero();

    let dump = || format!("x = {:?}, u = {:?}", fmt_vec(&x.x), fmt_vec(&u.u));
    if via_closed_form != witness.is_some() {
        return Err(Error::Invariant(format!(
            "closed form says {via_closed_form}, LP says {}: {}",
            witness.is_some(),
            dump()
        )));
    }
    if !box_test_passed && via_closed_form {
        return Err(Error::Invariant(format!(
            "box test failed at a stationary point: {}",
            dump()
        )));
    }
    if let Some(l) = &witness {
        if !is_valid_witness(l, x, u)? {
            return Err(Error::Invariant(format!("invalid witness: {}", dump())));
        }
    }
    if is_global && !via_closed_form {
        return Err(Error::Invariant(format!(
            "global minimizer not stationary: {}",
            dump()
        )));
    }
    Ok(Certificate {
        stationary: via_closed_form,
        via_closed_form,
        witness,
        box_test_passed,
        is_global,
    })
}

/// `0 ∈ ∂f(x) ⟹ f(x) = 0 or 0 ∈ ∂alpha(0)`, evaluated at `x`.
pub fn necessary_condition_check(x: &Point, u: &Instance) -> Result<bool> {
    if !certify(x, u)?.stationary {
        return Ok(true);
    }
    if objective(x, u)?.is_zero() {
        return Ok(true);
    }
    Ok(build_step(x, u)?.eval(&Rational::zero()).contains_zero())
}

fn fmt_vec(v: &[Rational]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reduce_support;
    use crate::rational::{ivec, qvec};

    fn setup(x: &[i64], u: &[i64]) -> (Point, Instance) {
        (Point::new(ivec(x)), Instance::new(ivec(u)).unwrap())
    }

    #[test]
    fn closed_form_examples() {
        let (x, u) = setup(&[1, -1], &[1, 1]);
        assert!(stationary_closed_form(&x, &u).unwrap());
        let x = Point::new(qvec(&[(1, 2), (0, 1)]));
        assert!(!stationary_closed_form(&x, &u).unwrap());
        let u = Instance::new(qvec(&[(3, 2), (-5, 1), (7, 3)])).unwrap();
        assert!(stationary_closed_form(&u.as_point(), &u).unwrap());
        assert!(stationary_closed_form(&u.as_point().negated(), &u).unwrap());
    }

    #[test]
    fn closed_form_dimension_mismatch() {
        let u = Instance::new(ivec(&[1, 1])).unwrap();
        assert!(stationary_closed_form(&Point::new(ivec(&[1])), &u).is_err());
        assert!(witness_lp(&Point::new(ivec(&[1])), &u).is_err());
    }

    #[test]
    fn witness_examples() {
        let (x, u) = setup(&[1, -1], &[1, 1]);
        let l = witness_lp(&x, &u).unwrap().unwrap();
        assert_eq!(l, vec![ivec(&[-1, -1]), ivec(&[-1, -1])]);

        let x = Point::new(qvec(&[(1, 2), (0, 1)]));
        assert!(witness_lp(&x, &u).unwrap().is_none());

        let u = Instance::new(ivec(&[2, -3, 1])).unwrap();
        let l = witness_lp(&u.as_point(), &u).unwrap().unwrap();
        assert!(is_valid_witness(&l, &u.as_point(), &u).unwrap());
    }

    #[test]
    fn certify_examples() {
        let (x, u) = setup(&[0, 0], &[1, 2]);
        let c = certify(&x, &u).unwrap();
        assert!(c.stationary && c.witness.is_some() && !c.is_global && c.box_test_passed);

        let (_, u) = setup(&[0, 0], &[1, 1]);
        let x = Point::new(qvec(&[(1, 2), (0, 1)]));
        let c = certify(&x, &u).unwrap();
        assert!(!c.stationary && c.witness.is_none() && !c.box_test_passed);

        let u = Instance::new(ivec(&[3, -1])).unwrap();
        let c = certify(&u.as_point().negated(), &u).unwrap();
        assert!(c.stationary && c.is_global);
    }

    #[test]
    fn necessary_condition_examples() {
        let (x, u) = setup(&[1, -1], &[1, 1]);
        assert!(necessary_condition_check(&x, &u).unwrap());
        assert!(necessary_condition_check(&u.as_point(), &u).unwrap());
        let x = Point::new(qvec(&[(1, 2), (0, 1)]));
        assert!(necessary_condition_check(&x, &u).unwrap());
    }

    #[test]
    fn zero_instance() {
        // u = 0: only x = 0 is stationary.
        let (x, u) = setup(&[0, 0], &[0, 0]);
        let c = certify(&x, &u).unwrap();
        assert!(c.stationary && c.is_global);
        let (x, u) = setup(&[1, 0], &[0, 0]);
        assert!(!certify(&x, &u).unwrap().stationary);
    }

    #[test]
    fn support_rule_and_reduction() {
        let u = Instance::new(ivec(&[2, 0, -1])).unwrap();
        let x = Point::new(qvec(&[(1, 2), (0, 1), (1, 2)]));
        let c = certify(&x, &u).unwrap();
        assert!(c.stationary);
        let red = reduce_support(&x, &u).unwrap();
        let (rx, ru) = red.split().unwrap();
        assert!(certify(&rx, &ru).unwrap().stationary);

        let x = Point::new(qvec(&[(1, 2), (1, 4), (1, 2)]));
        assert!(!certify(&x, &u).unwrap().stationary);
    }

    #[test]
    fn one_dimensional() {
        // f(x) = |x^2 - u^2| / 2: stationary at 0 and ±u.
        let u = Instance::new(ivec(&[3])).unwrap();
        for (v, expect) in [(0, true), (3, true), (-3, true), (1, false), (5, false)] {
            let c = certify(&Point::new(ivec(&[v])), &u).unwrap();
            assert_eq!(c.stationary, expect, "x = {v}");
        }
    }

    #[test]
    fn certificate_json_round_trip() {
        let (x, u) = setup(&[1, -1], &[1, 1]);
        let c = certify(&x, &u).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains(r#""witness":[["-1","-1"],["-1","-1"]]"#));
        let back: Certificate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
