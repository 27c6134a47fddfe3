//! Brute-force cross-checks for tiny instances.
//!
//! Each oracle shares as little code as possible with the module it checks: the QP
//! oracle is a floating-point descent method rather than exact simplex, and the grid
//! scan evaluates `f` in scaled integer arithmetic rather than through [`objective`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::stationary_closed_form;
use crate::error::{Error, Result};
use crate::escape::{decrease_curve, Theta};
use crate::interval::sgn;
use crate::model::{objective, residual, Instance, Point};
use crate::rational::Rational;

/// Residual norms at or below this count as a feasible witness.
pub const QP_FEASIBLE_BAND: f64 = 1e-9;
/// Residual norms at or above this count as infeasible.
pub const QP_INFEASIBLE_BAND: f64 = 1e-3;
/// How many times an ambiguous instance is re-run, with ten times the sweeps each time.
pub const QP_ESCALATIONS: u32 = 2;

/// Largest dimension accepted by [`grid_local_minima`].
pub const GRID_MAX_DIM: usize = 3;

/// `min |Λx|` over symmetric `Λ ∈ sign(x x^T - u u^T)`, by projected coordinate descent.
///
/// Entries with nonzero residual are fixed at its sign; every zero-residual entry
/// `(i, j)`, `i <= j`, is a variable in `[-1, 1]` shared with `(j, i)`. Each sweep
/// minimizes the convex objective exactly along every variable in turn, then
/// recomputes `Λx` from scratch so rounding does not accumulate. Returns the final
/// residual norm.
#[allow(clippy::needless_range_loop)]
pub fn qp_feasibility_oracle(x: &Point, u: &Instance, iters: usize) -> Result<f64> {
    let res = residual(x, u)?;
    let n = x.dim();
    let xf = x.to_f64();
    let mut lambda = vec![vec![0.0f64; n]; n];
    let mut free = Vec::new();
    for i in 0..n {
        for j in i..n {
            let r = res.get(i, j);
            if r.is_zero() {
                free.push((i, j));
            } else {
                let s = sgn(r).to_f64();
                lambda[i][j] = s;
                lambda[j][i] = s;
            }
        }
    }
    let apply = |l: &[Vec<f64>]| -> Vec<f64> {
        l.iter()
            .map(|row| row.iter().zip(&xf).map(|(a, b)| a * b).sum())
            .collect()
    };
    let mut r = apply(&lambda);
    for _ in 0..iters {
        for &(i, j) in &free {
            // Moving λ_ij by δ adds δ x_j to r_i and δ x_i to r_j.
            let (a, b) = if i == j {
                (xf[i] * xf[i], r[i] * xf[i])
            } else {
                (xf[i] * xf[i] + xf[j] * xf[j], r[i] * xf[j] + r[j] * xf[i])
            };
            if a == 0.0 {
                continue;
            }
            let old = lambda[i][j];
            let new = (old - b / a).clamp(-1.0, 1.0);
            let d = new - old;
            if d == 0.0 {
                continue;
            }
            lambda[i][j] = new;
            lambda[j][i] = new;
            r[i] += d * xf[j];
            if i != j {
                r[j] += d * xf[i];
            }
        }
        r = apply(&lambda);
    }
    Ok(r.iter().map(|v| v * v).sum::<f64>().sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QpDecision {
    Feasible,
    Infeasible,
    /// Between the bands even after escalation.
    Ambiguous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpVerdict {
    pub residual_norm: f64,
    pub decision: QpDecision,
    /// Sweeps used by the last attempt.
    pub iters: usize,
}

/// [`qp_feasibility_oracle`] with the fixed decision bands. Instances between the
/// bands are re-run with ten times as many sweeps, up to [`QP_ESCALATIONS`] times.
pub fn qp_verdict(x: &Point, u: &Instance, iters: usize) -> Result<QpVerdict> {
    let mut iters = iters.max(1);
    let mut attempt = 0;
    loop {
        let residual_norm = qp_feasibility_oracle(x, u, iters)?;
        let decision = if residual_norm <= QP_FEASIBLE_BAND {
            QpDecision::Feasible
        } else if residual_norm >= QP_INFEASIBLE_BAND {
            QpDecision::Infeasible
        } else {
            QpDecision::Ambiguous
        };
        if decision != QpDecision::Ambiguous || attempt == QP_ESCALATIONS {
            return Ok(QpVerdict {
                residual_norm,
                decision,
                iters,
            });
        }
        attempt += 1;
        iters *= 10;
    }
}

/// Grid-local minima of `f` on a box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridScan {
    pub box_radius: Rational,
    pub grid_step: Rational,
    pub minima: Vec<Vec<Rational>>,
    /// Number of grid points per axis.
    pub points_per_axis: usize,
}

impl GridScan {
    /// `min(|p - u|_∞, |p + u|_∞)` for each reported minimum.
    pub fn distances(&self, u: &Instance) -> Vec<Rational> {
        self.minima
            .iter()
            .map(|p| {
                let dist = |s: &Rational| {
                    p.iter()
                        .zip(&u.u)
                        .map(|(a, b)| (a - &(s * b)).abs())
                        .max()
                        .unwrap_or_else(Rational::zero)
                };
                dist(&Rational::one()).min(dist(&-Rational::one()))
            })
            .collect()
    }

    /// Minima farther than `k` grid steps (∞-norm) from both `u` and `-u`.
    pub fn far_minima(&self, u: &Instance, k: i64) -> Vec<Vec<Rational>> {
        let limit = &self.grid_step * Rational::from_integer(k);
        self.minima
            .iter()
            .zip(self.distances(u))
            .filter(|(_, d)| *d > limit)
            .map(|(p, _)| p.clone())
            .collect()
    }
}

fn lcm(a: &num_bigint::BigInt, b: &num_bigint::BigInt) -> num_bigint::BigInt {
    use num_integer::Integer;
    a.lcm(b)
}

fn to_i128(v: &num_bigint::BigInt) -> Result<i128> {
    use num_traits::ToPrimitive;
    v.to_i128()
        .ok_or_else(|| Error::InvalidArgument("grid coordinates too large".into()))
}

/// Exhaustive scan of the grid `{-radius + k·step}^n ∩ [-radius, radius]^n`.
///
/// A grid point is reported if its value is `<=` the value at every grid neighbour
/// (king moves: each coordinate changes by at most one step). Values are compared
/// exactly: with `L` the common denominator of `u`, `radius` and `step`, every
/// `2 L² f` on the grid is an integer.
pub fn grid_local_minima(u: &Instance, radius: &Rational, step: &Rational) -> Result<GridScan> {
    let n = u.dim();
    if n > GRID_MAX_DIM {
        return Err(Error::DimensionTooLarge {
            n,
            max: GRID_MAX_DIM,
        });
    }
    if !step.is_positive() || radius.is_negative() {
        return Err(Error::InvalidArgument(
            "grid needs step > 0 and radius >= 0".into(),
        ));
    }
    let mut l = step.denom().clone();
    l = lcm(&l, radius.denom());
    for ui in &u.u {
        l = lcm(&l, ui.denom());
    }
    let scale = |v: &Rational| to_i128(&(v.numer() * (&l / v.denom())));
    let s = scale(step)?;
    let r = scale(radius)?;
    let b: Vec<i128> = u.u.iter().map(scale).collect::<Result<_>>()?;
    let k = usize::try_from((2 * r) / s)
        .map_err(|_| Error::InvalidArgument("grid too large".into()))?;
    let per_axis = k + 1;
    let total = per_axis
        .checked_pow(n as u32)
        .filter(|&t| t <= 50_000_000)
        .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;

    let coords = |mut idx: usize| -> Vec<usize> {
        let mut c = vec![0; n];
        for slot in c.iter_mut() {
            *slot = idx % per_axis;
            idx /= per_axis;
        }
        c
    };
    let value = |c: &[usize]| -> i128 {
        let a: Vec<i128> = c.iter().map(|&ci| -r + ci as i128 * s).collect();
        let mut acc = 0i128;
        for i in 0..n {
            for j in 0..n {
                acc += (a[i] * a[j] - b[i] * b[j]).abs();
            }
        }
        acc
    };
    // Guard the i128 arithmetic: the largest term is bounded by 2 max(r, |b|)^2 n^2.
    let big = b.iter().map(|v| v.abs()).chain([r]).max().unwrap_or(0);
    if big
        .checked_mul(big)
        .and_then(|v| v.checked_mul(2 * (n * n) as i128))
        .is_none()
    {
        return Err(Error::InvalidArgument("grid coordinates too large".into()));
    }

    let values: Vec<i128> = (0..total)
        .into_par_iter()
        .map(|idx| value(&coords(idx)))
        .collect();

    let offsets: Vec<Vec<i64>> = (0..3usize.pow(n as u32))
        .map(|mut m| {
            let mut o = vec![0i64; n];
            for slot in o.iter_mut() {
                *slot = (m % 3) as i64 - 1;
                m /= 3;
            }
            o
        })
        .filter(|o| o.iter().any(|&v| v != 0))
        .collect();
    let index = |c: &[i64]| -> usize {
        c.iter()
            .rev()
            .fold(0usize, |acc, &ci| acc * per_axis + ci as usize)
    };

    let minima_idx: Vec<usize> = (0..total)
        .into_par_iter()
        .filter(|&idx| {
            let c: Vec<i64> = coords(idx).into_iter().map(|v| v as i64).collect();
            let v = values[idx];
            offsets.iter().all(|o| {
                let nb: Vec<i64> = c.iter().zip(o).map(|(a, d)| a + d).collect();
                if nb.iter().any(|&ci| ci < 0 || ci >= per_axis as i64) {
                    return true;
                }
                v <= values[index(&nb)]
            })
        })
        .collect();

    let minima = minima_idx
        .into_iter()
        .map(|idx| {
            coords(idx)
                .into_iter()
                .map(|ci| -radius + step * Rational::from_integer(ci as i64))
                .collect()
        })
        .collect();
    Ok(GridScan {
        box_radius: radius.clone(),
        grid_step: step.clone(),
        minima,
        points_per_axis: per_axis,
    })
}

/// `min f(x + t(θu - x)) - f(x)` over `θ = ±1` and `t` in the grid.
///
/// Requires a stationary `x` with `f(x) > 0`.
pub fn directed_probe(x: &Point, u: &Instance, t_grid: &[Rational]) -> Result<Rational> {
    if !stationary_closed_form(x, u)? {
        return Err(Error::NotStationary);
    }
    let f0 = objective(x, u)?;
    if !f0.is_positive() {
        return Err(Error::NotSpurious);
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty t grid".into()));
    }
    let mut best: Option<Rational> = None;
    for theta in Theta::BOTH {
        for c in decrease_curve(x, u, theta, t_grid)? {
            let d = &c.f_value - &f0;
            best = Some(match best {
                Some(b) => b.min(d),
                None => d,
            });
        }
    }
    Ok(best.expect("nonempty grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ivec, q, qvec};

    fn inst(v: &[i64]) -> Instance {
        Instance::new(ivec(v)).unwrap()
    }

    #[test]
    fn qp_examples() {
        let u = inst(&[1, 1]);
        let r = qp_feasibility_oracle(&Point::new(ivec(&[1, -1])), &u, 100).unwrap();
        assert!(r <= QP_FEASIBLE_BAND);
        let r = qp_feasibility_oracle(&Point::new(qvec(&[(1, 2), (0, 1)])), &u, 100).unwrap();
        assert_eq!(r, 0.5f64.sqrt());
        let u = inst(&[3, -2, 5]);
        assert_eq!(qp_feasibility_oracle(&u.as_point(), &u, 10).unwrap(), 0.0);
    }

    #[test]
    fn qp_verdicts() {
        let u = inst(&[1, 2]);
        let v = qp_verdict(&Point::zeros(2), &u, 10).unwrap();
        assert_eq!(v.decision, QpDecision::Feasible);
        let v = qp_verdict(&Point::new(ivec(&[2, 0])), &u, 10).unwrap();
        assert_eq!(v.decision, QpDecision::Infeasible);
    }

    #[test]
    fn qp_dimension_mismatch() {
        assert!(qp_feasibility_oracle(&Point::zeros(3), &inst(&[1, 1]), 10).is_err());
    }

    #[test]
    fn grid_minima_near_solutions() {
        let u = inst(&[1, 1]);
        let g = grid_local_minima(&u, &q(2, 1), &q(1, 8)).unwrap();
        assert_eq!(g.points_per_axis, 33);
        assert!(g.far_minima(&u, 2).is_empty());
        assert!(g.minima.contains(&ivec(&[1, 1])));
        assert!(g.minima.contains(&ivec(&[-1, -1])));

        let u = inst(&[1, 0]);
        let g = grid_local_minima(&u, &q(2, 1), &q(1, 8)).unwrap();
        assert!(g.far_minima(&u, 2).is_empty());
        assert!(g.minima.contains(&ivec(&[1, 0])));
    }

    #[test]
    fn grid_zero_target() {
        let u = inst(&[0, 0]);
        let g = grid_local_minima(&u, &q(2, 1), &q(1, 8)).unwrap();
        assert_eq!(g.minima, vec![ivec(&[0, 0])]);
    }

    #[test]
    fn grid_rejects_large_dimension() {
        let u = inst(&[1, 1, 1, 1]);
        assert!(matches!(
            grid_local_minima(&u, &q(1, 1), &q(1, 2)),
            Err(Error::DimensionTooLarge { n: 4, max: 3 })
        ));
        assert!(grid_local_minima(&inst(&[1]), &q(1, 1), &q(0, 1)).is_err());
    }

    #[test]
    fn grid_one_dimensional_exact() {
        // f(x) = |x² - 4| / 2 on [-4, 4] with unit step: minima exactly at ±2.
        let u = inst(&[2]);
        let g = grid_local_minima(&u, &q(4, 1), &q(1, 1)).unwrap();
        assert_eq!(g.minima, vec![ivec(&[-2]), ivec(&[2])]);
    }

    #[test]
    fn probe_examples() {
        let u = inst(&[1, 1]);
        let p = directed_probe(&Point::new(ivec(&[1, -1])), &u, &qvec(&[(1, 4), (1, 2)])).unwrap();
        assert_eq!(p, q(-1, 2));
        let p = directed_probe(&Point::zeros(2), &inst(&[1, 2]), &[q(1, 1)]).unwrap();
        assert_eq!(p, q(-9, 2));
        assert!(matches!(
            directed_probe(&u.as_point(), &u, &[q(1, 2)]),
            Err(Error::NotSpurious)
        ));
        assert!(matches!(
            directed_probe(&Point::new(qvec(&[(1, 2), (0, 1)])), &u, &[q(1, 2)]),
            Err(Error::NotStationary)
        ));
    }
}
