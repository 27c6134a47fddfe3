//! The objective `f(x) = 1/2 sum_{i,j} |x_i x_j - u_i u_j|` and its first-order
//! calculus in exact arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{interval_sum, sgn, sign_interval, IntervalScalar};
use crate::rational::Rational;

/// The target vector `u`. Always at least one coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instance {
    pub u: Vec<Rational>,
}

impl Instance {
    pub fn new(u: Vec<Rational>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::EmptyInstance);
        }
        Ok(Instance { u })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn negated(&self) -> Instance {
        Instance {
            u: self.u.iter().map(|v| -v).collect(),
        }
    }

    /// `sum_i |u_i|`.
    pub fn l1_norm(&self) -> Rational {
        self.u.iter().map(Rational::abs).sum()
    }

    pub fn linf_norm(&self) -> Rational {
        self.u
            .iter()
            .map(Rational::abs)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// The point `x = u`.
    pub fn as_point(&self) -> Point {
        Point { x: self.u.clone() }
    }

    pub fn check(&self, x: &Point) -> Result<()> {
        if x.x.len() != self.u.len() {
            return Err(Error::DimensionMismatch {
                field: "x",
                expected: self.u.len(),
                found: x.x.len(),
            });
        }
        Ok(())
    }
}

/// A candidate point `x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<Rational>,
}

impl Point {
    pub fn new(x: Vec<Rational>) -> Self {
        Point { x }
    }

    pub fn zeros(n: usize) -> Self {
        Point {
            x: vec![Rational::zero(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn negated(&self) -> Point {
        Point {
            x: self.x.iter().map(|v| -v).collect(),
        }
    }

    pub fn l1_norm(&self) -> Rational {
        self.x.iter().map(Rational::abs).sum()
    }

    /// `x + t * w`.
    pub fn step(&self, t: &Rational, w: &[Rational]) -> Point {
        Point {
            x: self.x.iter().zip(w).map(|(a, b)| a + t * b).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.x.iter().map(Rational::to_f64).collect()
    }
}

/// The exact symmetric matrix `x x^T - u u^T`, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualMatrix {
    n: usize,
    entries: Vec<Rational>,
}

impl ResidualMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<Rational>> {
        self.entries.chunks(self.n).map(<[_]>::to_vec).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Entrywise set-valued sign, the constraint set for a witness matrix.
    pub fn sign(&self) -> IntervalMatrix {
        IntervalMatrix {
            n: self.n,
            entries: self.entries.iter().map(sign_interval).collect(),
        }
    }

    /// Entrywise `sgn`, the canonical single-valued selection from [`Self::sign`].
    pub fn sgn(&self) -> Vec<Vec<Rational>> {
        self.entries
            .chunks(self.n)
            .map(|row| row.iter().map(sgn).collect())
            .collect()
    }
}

/// An `n x n` matrix of intervals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalMatrix {
    n: usize,
    entries: Vec<IntervalScalar>,
}

impl IntervalMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &IntervalScalar {
        &self.entries[i * self.n + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Entrywise membership of a concrete matrix.
    pub fn contains(&self, m: &[Vec<Rational>]) -> bool {
        m.len() == self.n
            && m.iter().enumerate().all(|(i, row)| {
                row.len() == self.n
                    && row
                        .iter()
                        .enumerate()
                        .all(|(j, v)| self.get(i, j).contains(v))
            })
    }
}

/// `1/2 sum_{i,j} |x_i x_j - u_i u_j|`, exactly.
pub fn objective(x: &Point, u: &Instance) -> Result<Rational> {
    u.check(x)?;
    Ok(objective_unchecked(&x.x, &u.u))
}

pub(crate) fn objective_unchecked(x: &[Rational], u: &[Rational]) -> Rational {
    let n = x.len();
    let mut diag = Rational::zero();
    let mut off = Rational::zero();
    for i in 0..n {
        diag += (x[i].square() - u[i].square()).abs();
        for j in (i + 1)..n {
            off += (&x[i] * &x[j] - &u[i] * &u[j]).abs();
        }
    }
    diag / Rational::from_integer(2) + off
}

/// Double-precision objective, for the solver loops.
pub fn objective_f64(x: &[f64], u: &[f64]) -> f64 {
    let n = x.len();
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..n {
        diag += (x[i] * x[i] - u[i] * u[i]).abs();
        for j in (i + 1)..n {
            off += (x[i] * x[j] - u[i] * u[j]).abs();
        }
    }
    0.5 * diag + off
}

pub fn residual(x: &Point, u: &Instance) -> Result<ResidualMatrix> {
    u.check(x)?;
    let n = x.dim();
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push(&x.x[i] * &x.x[j] - &u.u[i] * &u.u[j]);
        }
    }
    Ok(ResidualMatrix { n, entries })
}

/// Interval `sum_j sign(x_i x_j - u_i u_j) * x_j` (0-based `i`).
pub fn partial_subdiff(x: &Point, u: &Instance, i: usize) -> Result<IntervalScalar> {
    u.check(x)?;
    let n = x.dim();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    Ok(partial_unchecked(&x.x, &u.u, i))
}

fn partial_unchecked(x: &[Rational], u: &[Rational], i: usize) -> IntervalScalar {
    interval_sum(
        x.iter()
            .zip(u)
            .map(|(xj, uj)| sign_interval(&(&x[i] * xj - &u[i] * uj)).scale(xj)),
    )
}

/// The box `prod_i ∂_{x_i} f(x)` containing `∂f(x)`.
///
/// `0` outside some component proves `x` is not stationary; the converse does not hold.
pub fn subdiff_box(x: &Point, u: &Instance) -> Result<Vec<IntervalScalar>> {
    u.check(x)?;
    Ok((0..x.dim())
        .map(|i| partial_unchecked(&x.x, &u.u, i))
        .collect())
}

pub fn box_contains_zero(b: &[IntervalScalar]) -> bool {
    b.iter().all(IntervalScalar::contains_zero)
}

/// Restriction of `(x, u)` to the support of `u`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    pub x: Vec<Rational>,
    pub u: Vec<Rational>,
    /// `index_map[k]` is the original (0-based) coordinate of reduced coordinate `k`.
    pub index_map: Vec<usize>,
}

impl Reduction {
    /// `None` when `u = 0` and nothing survives.
    pub fn split(&self) -> Option<(Point, Instance)> {
        let inst = Instance::new(self.u.clone()).ok()?;
        Some((Point::new(self.x.clone()), inst))
    }
}

pub fn reduce_support(x: &Point, u: &Instance) -> Result<Reduction> {
    u.check(x)?;
    let index_map: Vec<usize> = (0..u.dim()).filter(|&i| !u.u[i].is_zero()).collect();
    Ok(Reduction {
        x: index_map.iter().map(|&i| x.x[i].clone()).collect(),
        u: index_map.iter().map(|&i| u.u[i].clone()).collect(),
        index_map,
    })
}

/// JSON form `{"u": ["1", "-1/2"], "x": ["0", "3/4"]}`; `x` is optional.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub u: Vec<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<Rational>>,
}

impl InstanceFile {
    pub fn instance(&self) -> Result<Instance> {
        Instance::new(self.u.clone())
    }

    /// The point, checked against `u`; `None` when the file carries no `x`.
    pub fn point(&self) -> Result<Option<Point>> {
        let Some(x) = &self.x else { return Ok(None) };
        let p = Point::new(x.clone());
        self.instance()?.check(&p)?;
        Ok(Some(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ivec, q, qvec};

    fn pt(v: &[i64]) -> Point {
        Point::new(ivec(v))
    }

    fn inst(v: &[i64]) -> Instance {
        Instance::new(ivec(v)).unwrap()
    }

    #[test]
    fn objective_examples() {
        assert_eq!(objective(&pt(&[1, -1]), &inst(&[1, 1])).unwrap(), q(2, 1));
        assert_eq!(objective(&pt(&[0, 0]), &inst(&[1, 2])).unwrap(), q(9, 2));
        let u = Instance::new(qvec(&[(3, 7), (-2, 1), (0, 1)])).unwrap();
        assert_eq!(objective(&u.as_point(), &u).unwrap(), q(0, 1));
    }

    #[test]
    fn objective_dimension_mismatch() {
        let err = objective(&pt(&[1]), &inst(&[1, 2])).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 1,
                ..
            }
        ));
    }

    #[test]
    fn empty_instance_rejected() {
        assert_eq!(Instance::new(vec![]).unwrap_err(), Error::EmptyInstance);
    }

    #[test]
    fn residual_examples() {
        let r = residual(&pt(&[1, -1]), &inst(&[1, 1])).unwrap();
        assert_eq!(r.rows(), vec![ivec(&[0, -2]), ivec(&[-2, 0])]);
        let r = residual(&Point::new(qvec(&[(1, 2), (0, 1)])), &inst(&[1, 1])).unwrap();
        assert_eq!(
            r.rows(),
            vec![qvec(&[(-3, 4), (-1, 1)]), qvec(&[(-1, 1), (-1, 1)])]
        );
        let u = inst(&[4, -1]);
        let r = residual(&u.as_point(), &u).unwrap();
        assert!(r.rows().iter().flatten().all(Rational::is_zero));
    }

    #[test]
    fn partial_subdiff_examples() {
        let p = partial_subdiff(&pt(&[1, -1]), &inst(&[1, 1]), 0).unwrap();
        assert_eq!(p, IntervalScalar::new(q(0, 1), q(2, 1)));
        let p = partial_subdiff(&pt(&[1, 1]), &inst(&[0, 0]), 0).unwrap();
        assert_eq!(p, IntervalScalar::singleton(q(2, 1)));
        let p = partial_subdiff(&pt(&[1, 2]), &inst(&[1, 2]), 1).unwrap();
        assert_eq!(p, IntervalScalar::new(q(-3, 1), q(3, 1)));
    }

    #[test]
    fn partial_subdiff_index_out_of_range() {
        let err = partial_subdiff(&pt(&[1, 1]), &inst(&[1, 1]), 2).unwrap_err();
        assert_eq!(err, Error::IndexOutOfRange { index: 2, n: 2 });
    }

    #[test]
    fn subdiff_box_examples() {
        let b = subdiff_box(&Point::new(qvec(&[(1, 2), (0, 1)])), &inst(&[1, 1])).unwrap();
        assert_eq!(
            b,
            vec![
                IntervalScalar::singleton(q(-1, 2)),
                IntervalScalar::singleton(q(-1, 2))
            ]
        );
        assert!(!box_contains_zero(&b));

        let b = subdiff_box(&pt(&[1, -1]), &inst(&[1, 1])).unwrap();
        assert_eq!(
            b,
            vec![
                IntervalScalar::new(q(0, 1), q(2, 1)),
                IntervalScalar::new(q(-2, 1), q(0, 1))
            ]
        );
        assert!(box_contains_zero(&b));

        let b = subdiff_box(&pt(&[1, 1]), &inst(&[0, 0])).unwrap();
        assert_eq!(b, vec![IntervalScalar::singleton(q(2, 1)); 2]);
    }

    #[test]
    fn zero_coordinates_contribute_nothing() {
        // Set-valued terms with x_j = 0 collapse to {0}.
        let p = partial_subdiff(&pt(&[0, 0, 3]), &inst(&[0, 0, 2]), 2).unwrap();
        assert_eq!(p, IntervalScalar::singleton(q(3, 1)));
        let p = partial_subdiff(&pt(&[0, 0, 3]), &inst(&[0, 0, 3]), 0).unwrap();
        assert_eq!(p, IntervalScalar::new(q(-3, 1), q(3, 1)));
    }

    #[test]
    fn reduce_support_examples() {
        let r = reduce_support(
            &Point::new(qvec(&[(1, 2), (0, 1), (1, 1)])),
            &inst(&[1, 0, 2]),
        )
        .unwrap();
        assert_eq!(r.x, qvec(&[(1, 2), (1, 1)]));
        assert_eq!(r.u, ivec(&[1, 2]));
        assert_eq!(r.index_map, vec![0, 2]);

        let r = reduce_support(&pt(&[5, 6]), &inst(&[1, -1])).unwrap();
        assert_eq!(r.index_map, vec![0, 1]);
        assert_eq!(r.x, ivec(&[5, 6]));

        let r = reduce_support(&pt(&[5, 6]), &inst(&[0, 0])).unwrap();
        assert!(r.x.is_empty() && r.u.is_empty());
        assert!(r.split().is_none());
    }

    #[test]
    fn one_dimensional() {
        assert_eq!(objective(&pt(&[3]), &inst(&[2])).unwrap(), q(5, 2));
        let p = partial_subdiff(&pt(&[3]), &inst(&[2]), 0).unwrap();
        assert_eq!(p, IntervalScalar::singleton(q(3, 1)));
    }

    #[test]
    fn instance_file_parsing() {
        let f: InstanceFile =
            serde_json::from_str(r#"{"u": ["1", "-1/2"], "x": ["0", "3/4"]}"#).unwrap();
        assert_eq!(f.instance().unwrap().u, qvec(&[(1, 1), (-1, 2)]));
        assert_eq!(f.point().unwrap().unwrap().x, qvec(&[(0, 1), (3, 4)]));

        let f: InstanceFile = serde_json::from_str(r#"{"u": ["2"]}"#).unwrap();
        assert!(f.point().unwrap().is_none());

        let f: InstanceFile = serde_json::from_str(r#"{"u": ["2"], "x": ["1", "1"]}"#).unwrap();
        assert!(matches!(f.point(), Err(Error::DimensionMismatch { .. })));

        assert!(serde_json::from_str::<InstanceFile>(r#"{"u": ["1/0"]}"#).is_err());
    }
}
