//! Deterministic fixtures shared by the benchmarks.

use l1r1_core::sampling::{random_instance, stationary_box_point, stream_rng};
use l1r1_core::{objective, Instance, Point};

/// A stationary point with `f(x) > 0` in dimension `n`.
pub fn spurious_pair(n: usize, seed: u64) -> (Point, Instance) {
    let mut rng = stream_rng(seed, n as u64);
    loop {
        let u = random_instance(&mut rng, n, 0.0);
        let x = stationary_box_point(&mut rng, &u);
        if objective(&x, &u).unwrap().is_positive() {
            return (x, u);
        }
    }
}

/// A generic point next to its instance; almost surely not stationary.
pub fn generic_pair(n: usize, seed: u64) -> (Point, Instance) {
    let mut rng = stream_rng(seed, 1000 + n as u64);
    let u = random_instance(&mut rng, n, 0.0);
    let x = random_instance(&mut rng, n, 0.0);
    (x.as_point(), u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use l1r1_core::stationary_closed_form;

    #[test]
    fn fixtures_have_requested_shape() {
        for n in 1..=6 {
            let (x, u) = generic_pair(n, 3);
            assert_eq!((x.dim(), u.dim()), (n, n));
        }
        for n in 2..=6 {
            let (x, u) = spurious_pair(n, 3);
            assert!(stationary_closed_form(&x, &u).unwrap());
        }
    }
}
