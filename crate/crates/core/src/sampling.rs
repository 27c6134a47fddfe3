//! Random instance and point generators for tests, sweeps and the acceptance suite.
//!
//! Stationary points other than `±u` form a measure-zero set, so they are built
//! constructively rather than found by rejection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{Instance, Point};
use crate::rational::Rational;

/// Independent, reproducible stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform numerator in `[-max_num, max_num]` over denominator in `[1, max_den]`.
pub fn random_rational<R: Rng + ?Sized>(rng: &mut R, max_num: i64, max_den: i64) -> Rational {
    let num = rng.gen_range(-max_num..=max_num);
    let den = rng.gen_range(1..=max_den);
    Rational::new(num, den)
}

/// Random `u` with small numerators and denominators. Each coordinate is zero with
/// probability `zero_prob`; otherwise it is nonzero.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, zero_prob: f64) -> Instance {
    let u = (0..n)
        .map(|_| {
            if rng.gen_bool(zero_prob) {
                Rational::zero()
            } else {
                loop {
                    let r = random_rational(rng, 6, 4);
                    if !r.is_zero() {
                        break r;
                    }
                }
            }
        })
        .collect();
    Instance { u }
}

/// A random point of `{x : <sgn u, x> = 0, |x_i| <= |u_i|}`.
///
/// Draws `x` in the box (with some coordinates pinned to `±u_i` or `0` to exercise
/// ties), then cancels the weighted sum by moving coordinates in random order, each
/// as far as its own box allows.
pub fn stationary_box_point<R: Rng + ?Sized>(rng: &mut R, u: &Instance) -> Point {
    let mut x: Vec<Rational> =
        u.u.iter()
            .map(|ui| match rng.gen_range(0..8) {
                0 => ui.clone(),
                1 => -ui,
                2 => Rational::zero(),
                _ => random_rational(rng, 8, 8) / Rational::from_integer(8) * ui,
            })
            .collect();
    let signs: Vec<Rational> = u.u.iter().map(Rational::signum).collect();
    let mut s: Rational = x.iter().zip(&signs).map(|(a, b)| a * b).sum();
    let mut order: Vec<usize> = (0..x.len()).filter(|&i| !u.u[i].is_zero()).collect();
    order.shuffle(rng);
    for i in order {
        if s.is_zero() {
            break;
        }
        let bound = u.u[i].abs();
        let target = &x[i] - &signs[i] * &s;
        let clamped = target.max(-&bound).min(bound);
        s -= &(&signs[i] * (&x[i] - &clamped));
        x[i] = clamped;
    }
    debug_assert!(s.is_zero());
    Point::new(x)
}

/// Kinds of point drawn by [`mixed_point`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    Generic,
    StationaryBox,
    PlusU,
    MinusU,
    /// Each coordinate independently `u_i`, `-u_i`, `0`, or random.
    Patchwork,
}

/// A point of a randomly chosen [`PointKind`].
pub fn mixed_point<R: Rng + ?Sized>(rng: &mut R, u: &Instance) -> (PointKind, Point) {
    let kind = match rng.gen_range(0..10) {
        0..=2 => PointKind::Generic,
        3..=5 => PointKind::StationaryBox,
        6 => PointKind::PlusU,
        7 => PointKind::MinusU,
        _ => PointKind::Patchwork,
    };
    let p = match kind {
        PointKind::Generic => {
            Point::new((0..u.dim()).map(|_| random_rational(rng, 6, 4)).collect())
        }
        PointKind::StationaryBox => stationary_box_point(rng, u),
        PointKind::PlusU => u.as_point(),
        PointKind::MinusU => u.as_point().negated(),
        PointKind::Patchwork => Point::new(
            u.u.iter()
                .map(|ui| match rng.gen_range(0..4) {
                    0 => ui.clone(),
                    1 => -ui,
                    2 => Rational::zero(),
                    _ => random_rational(rng, 6, 4),
                })
                .collect(),
        ),
    };
    (kind, p)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::stationary_closed_form;

    #[test]
    fn box_points_are_stationary() {
        let mut rng = stream_rng(1, 0);
        for n in 1..=6 {
            for _ in 0..200 {
                let u = random_instance(&mut rng, n, 0.2);
                let x = stationary_box_point(&mut rng, &u);
                assert!(stationary_closed_form(&x, &u).unwrap());
            }
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let mut r1 = stream_rng(5, 2);
        let mut r2 = stream_rng(5, 2);
        let a: Vec<u32> = (0..4).map(|_| r1.gen()).collect();
        let b: Vec<u32> = (0..4).map(|_| r2.gen()).collect();
        assert_eq!(a, b);
        let c: u32 = stream_rng(5, 3).gen();
        assert_ne!(a[0], c);
    }
}
