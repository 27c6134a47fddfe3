use proptest::prelude::*;

use l1r1_core::alpha::{build_step, precedes, subdiff_direct};
use l1r1_core::certify::{certify, is_valid_witness};
use l1r1_core::escape::{decrease_curve, escape_report, ratio_check, EstimatorConfig, Theta};
use l1r1_core::model::{objective, objective_f64, residual, subdiff_box, Instance, Point};
use l1r1_core::rational::Rational;
use l1r1_core::sampling::{stationary_box_point, stream_rng};
use l1r1_core::solve::{polyak_run, subgrad_select, SolveConfig};

fn rational() -> impl Strategy<Value = Rational> {
    (-12i64..=12, 1i64..=6).prop_map(|(n, d)| Rational::new(n, d))
}

fn pair(max_n: usize) -> impl Strategy<Value = (Point, Instance)> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(rational(), n),
            prop::collection::vec(rational(), n),
        )
            .prop_map(|(x, u)| (Point::new(x), Instance::new(u).unwrap()))
    })
}

/// `(x, u)` with `x` stationary and `f(x)` possibly zero.
fn stationary_pair() -> impl Strategy<Value = (Point, Instance)> {
    (prop::collection::vec(rational(), 1..=5), any::<u64>()).prop_map(|(u, seed)| {
        let u = Instance::new(u).unwrap();
        let x = stationary_box_point(&mut stream_rng(seed, 0), &u);
        (x, u)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn objective_nonnegative_and_sign_symmetric((x, u) in pair(5)) {
        let f = objective(&x, &u).unwrap();
        prop_assert!(!f.is_negative());
        prop_assert_eq!(&f, &objective(&x.negated(), &u).unwrap());
        prop_assert_eq!(&f, &objective(&x, &u.negated()).unwrap());
        prop_assert!(objective(&u.as_point(), &u).unwrap().is_zero());
    }

    #[test]
    fn float_objective_tracks_exact((x, u) in pair(5)) {
        let exact = objective(&x, &u).unwrap().to_f64();
        let uf: Vec<f64> = u.u.iter().map(Rational::to_f64).collect();
        let approx = objective_f64(&x.to_f64(), &uf);
        prop_assert!((exact - approx).abs() <= 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn residual_symmetric_and_sign_contains_sgn((x, u) in pair(5)) {
        let r = residual(&x, &u).unwrap();
        prop_assert!(r.is_symmetric());
        prop_assert!(r.sign().contains(&r.sgn()));
    }

    #[test]
    fn selected_subgradient_lies_in_box((x, u) in pair(5)) {
        let g = subgrad_select(&x.to_f64(), &u.u.iter().map(Rational::to_f64).collect::<Vec<_>>()).unwrap();
        let b = subdiff_box(&x, &u).unwrap();
        for (gi, bi) in g.iter().zip(&b) {
            // Rational inputs with small denominators: exact up to the dyadic rounding
            // of `x`, so compare against an exactly rationalized value.
            let gr = Rational::from_f64_exact(*gi).unwrap();
            let tol = Rational::new(1, 1_000_000_000);
            prop_assert!(bi.lo() - &tol <= gr && gr <= bi.hi() + &tol);
        }
    }

    #[test]
    fn certify_never_disagrees((x, u) in pair(4)) {
        let c = certify(&x, &u).unwrap();
        prop_assert_eq!(c.stationary, c.witness.is_some());
        if let Some(w) = &c.witness {
            prop_assert!(is_valid_witness(w, &x, &u).unwrap());
        }
    }

    #[test]
    fn constructed_points_are_stationary((x, u) in stationary_pair()) {
        prop_assert!(certify(&x, &u).unwrap().stationary);
    }

    #[test]
    fn decrease_law_and_ratio_bound((x, u) in stationary_pair(), k in 1i64..=16) {
        let t = Rational::new(k, 16);
        for th in Theta::BOTH {
            let c = decrease_curve(&x, &u, th, std::slice::from_ref(&t)).unwrap();
            prop_assert_eq!(&c[0].f_value, &c[0].predicted);
            prop_assert!(ratio_check(&x, &u, th, &t).unwrap());
        }
    }

    #[test]
    fn step_function_matches_direct_sum((x, u) in pair(5), ts in prop::collection::vec(rational(), 1..20)) {
        let sf = build_step(&x, &u).unwrap();
        let mut ts = ts;
        ts.extend(sf.jumps().iter().cloned());
        ts.sort();
        ts.dedup();
        let vals: Vec<_> = ts.iter().map(|t| sf.eval(t)).collect();
        for (t, v) in ts.iter().zip(&vals) {
            prop_assert_eq!(v, &subdiff_direct(&x, &u, t).unwrap());
        }
        prop_assert!(vals.windows(2).all(|w| precedes(&w[0], &w[1])));
        prop_assert!(sf.zero_root_interval().is_some());
    }

    #[test]
    fn rational_string_round_trip(r in rational()) {
        let s = r.to_string();
        prop_assert_eq!(s.parse::<Rational>().unwrap(), r.clone());
        let j = serde_json::to_string(&r).unwrap();
        prop_assert_eq!(serde_json::from_str::<Rational>(&j).unwrap(), r);
    }

    #[test]
    fn continued_fraction_within_bound(v in -1000.0f64..1000.0, d in 1u64..100_000) {
        let r = Rational::approximate_f64(v, d).unwrap();
        prop_assert!(r.denom() <= &d.into());
        // Best approximations with denominator <= d are within 1/d of v.
        prop_assert!((r.to_f64() - v).abs() <= 1.0 / d as f64 + 1e-12);
    }

    #[test]
    fn escape_report_json_round_trip((x, u) in stationary_pair()) {
        let grid = [Rational::new(1, 4), Rational::new(1, 2), Rational::new(3, 4)];
        let est = EstimatorConfig { perturb_count: 3, seed: 9, ..Default::default() };
        let rep = escape_report(&x, &u, Theta::Minus, &grid, &est).unwrap();
        let s = serde_json::to_string(&rep).unwrap();
        prop_assert_eq!(serde_json::from_str::<l1r1_core::EscapeReport>(&s).unwrap(), rep);
    }

    #[test]
    fn polyak_is_deterministic(seed in any::<u64>()) {
        let cfg = SolveConfig { n: 4, seed, max_iters: 200, ..Default::default() };
        let (u, x0) = l1r1_core::solve::draw_run(&cfg, 0);
        let a = polyak_run(&u, &x0, &cfg).unwrap();
        let b = polyak_run(&u, &x0, &cfg).unwrap();
        prop_assert_eq!(a.f_values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        b.f_values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert!(a.f_values.iter().all(|&v| v >= 0.0));
        prop_assert_eq!(a.converged, *a.f_values.last().unwrap() <= cfg.f_tol);
    }
}
