//! Subgradient methods on `f`, and a batch harness over random restarts.
//!
//! The global minimum value is known (`f(±u) = 0`), so the Polyak step needs no
//! estimate of `f*`. Runs that stop at a nonglobal point with a zero subgradient are
//! flagged and handed to the exact modules: the terminal point is rounded to a
//! rational, certified, and probed along `θu - x`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{certify, Certificate};
use crate::error::{Error, Result};
use crate::model::{objective, objective_f64, Instance, Point};
use crate::oracle::directed_probe;
use crate::rational::Rational;
use crate::sampling::{gaussian_vector, stream_rng};

/// Largest denominator used when rounding terminal points for certification.
pub const RATIONALIZE_MAX_DENOM: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Polyak,
    /// Normalized steps of length `step_c / sqrt(k)`.
    Diminishing,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polyak" => Ok(Method::Polyak),
            "diminishing" => Ok(Method::Diminishing),
            _ => Err(Error::Parse(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum USource {
    /// Fresh standard Gaussian `u` per run.
    Gaussian,
    /// The same `u` for every run.
    Fixed(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub method: Method,
    pub max_iters: usize,
    pub f_tol: f64,
    pub step_c: f64,
    pub seed: u64,
    pub n: usize,
    pub u_source: USource,
    /// Initial points are uniform in `[-init_radius, init_radius]^n`.
    pub init_radius: f64,
    pub runs: usize,
    /// Keep every `thin`-th iterate in the trajectory; 0 keeps none.
    pub thin: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            method: Method::Polyak,
            max_iters: 10_000,
            f_tol: 1e-8,
            step_c: 0.1,
            seed: 0,
            n: 10,
            u_source: USource::Gaussian,
            init_radius: 2.0,
            runs: 1000,
            thin: 0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        if self.f_tol.is_nan() || self.f_tol < 0.0 {
            return Err(Error::InvalidArgument("f_tol must be nonnegative".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if let USource::Fixed(u) = &self.u_source {
            if u.len() != self.n {
                return Err(Error::DimensionMismatch {
                    field: "u",
                    expected: self.n,
                    found: u.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    /// Zero subgradient with `f > f_tol`.
    StationaryNonglobal,
    MaxIters,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub iterates: Vec<Vec<f64>>,
    /// `f` at the start and after every step.
    pub f_values: Vec<f64>,
    pub converged: bool,
    /// `min(|x - u|, |x + u|)` at the last iterate.
    pub final_distance: f64,
    pub final_x: Vec<f64>,
    pub iters: usize,
    pub termination: Termination,
}

impl Trajectory {
    pub fn flagged(&self) -> bool {
        self.termination == Termination::StationaryNonglobal
    }
}

/// `Λ̂ x` with `Λ̂_ij = sgn(x_i x_j - u_i u_j)`, an element of `∂f(x)`.
pub fn subgrad_select(x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    if x.len() != u.len() {
        return Err(Error::DimensionMismatch {
            field: "x",
            expected: u.len(),
            found: x.len(),
        });
    }
    Ok(subgrad_unchecked(x, u))
}

fn sgn_f64(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn subgrad_unchecked(x: &[f64], u: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            x.iter()
                .zip(u)
                .map(|(xj, uj)| sgn_f64(x[i] * xj - u[i] * uj) * xj)
                .sum()
        })
        .collect()
}

pub fn distance_to_solutions(x: &[f64], u: &[f64]) -> f64 {
    let dm: f64 = x.iter().zip(u).map(|(a, b)| (a - b).powi(2)).sum();
    let dp: f64 = x.iter().zip(u).map(|(a, b)| (a + b).powi(2)).sum();
    dm.min(dp).sqrt()
}

/// Subgradient descent from `x0` with the method in `cfg`.
pub fn polyak_run(u: &[f64], x0: &[f64], cfg: &SolveConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if u.len() != x0.len() {
        return Err(Error::DimensionMismatch {
            field: "x0",
            expected: u.len(),
            found: x0.len(),
        });
    }
    let mut x = x0.to_vec();
    let mut f = objective_f64(&x, u);
    let mut f_values = vec![f];
    let mut iterates = Vec::new();
    if cfg.thin > 0 {
        iterates.push(x.clone());
    }
    let mut iters = 0;
    let termination = loop {
        if f <= cfg.f_tol {
            break Termination::Converged;
        }
        if iters == cfg.max_iters {
            break Termination::MaxIters;
        }
        let g = subgrad_unchecked(&x, u);
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 == 0.0 {
            break Termination::StationaryNonglobal;
        }
        let step = match cfg.method {
            Method::Polyak => f / g2,
            Method::Diminishing => cfg.step_c / ((iters + 1) as f64).sqrt() / g2.sqrt(),
        };
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= step * gi;
        }
        iters += 1;
        f = objective_f64(&x, u);
        f_values.push(f);
        if cfg.thin > 0 && iters % cfg.thin == 0 {
            iterates.push(x.clone());
        }
    };
    Ok(Trajectory {
        iterates,
        f_values,
        converged: termination == Termination::Converged,
        final_distance: distance_to_solutions(&x, u),
        final_x: x,
        iters,
        termination,
    })
}

/// One run of a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    pub iters: usize,
    pub final_f: f64,
    pub final_distance: f64,
    pub flagged: bool,
    pub termination: Termination,
}

/// Exact post-mortem of a run that did not converge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonConvergedRun {
    pub run_id: usize,
    pub termination: Termination,
    pub x: Vec<Rational>,
    pub u: Vec<Rational>,
    pub certificate: Certificate,
    /// Exact `min f(x + t w) - f(x)` over `θ = ±1` and the probe grid, when the
    /// rounded point certifies as a spurious stationary point.
    pub exact_probe: Option<Rational>,
    /// Same minimum in double precision at the unrounded point.
    pub float_probe: f64,
}

impl NonConvergedRun {
    /// Either a timeout, or a point where moving toward `±u` strictly decreases `f`.
    pub fn explained(&self) -> bool {
        let descent = match &self.exact_probe {
            Some(p) => p.is_negative(),
            None => self.float_probe < 0.0,
        };
        self.termination == Termination::MaxIters || descent
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterQuantiles {
    pub min: usize,
    pub p50: usize,
    pub p90: usize,
    pub p99: usize,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub iter_quantiles: IterQuantiles,
    pub records: Vec<RunRecord>,
    pub non_converged: Vec<NonConvergedRun>,
}

fn probe_grid() -> Vec<Rational> {
    (1..=4).map(|k| Rational::new(k, 4)).collect()
}

/// `min_{θ, t} f(x + t(θu - x)) - f(x)` in double precision.
fn float_probe(x: &[f64], u: &[f64]) -> f64 {
    let f0 = objective_f64(x, u);
    let mut best = f64::INFINITY;
    for th in [1.0, -1.0] {
        for k in 1..=4 {
            let t = k as f64 / 4.0;
            let y: Vec<f64> = x
                .iter()
                .zip(u)
                .map(|(xi, ui)| xi + t * (th * ui - xi))
                .collect();
            best = best.min(objective_f64(&y, u) - f0);
        }
    }
    best
}

fn rationalize(v: &[f64]) -> Result<Vec<Rational>> {
    v.iter()
        .map(|&a| {
            Rational::approximate_f64(a, RATIONALIZE_MAX_DENOM)
                .ok_or_else(|| Error::InvalidArgument(format!("non-finite coordinate {a}")))
        })
        .collect()
}

/// Round, certify and probe a terminal point.
pub fn analyze_terminal(
    run_id: usize,
    x: &[f64],
    u: &[f64],
    termination: Termination,
) -> Result<NonConvergedRun> {
    let xr = rationalize(x)?;
    let ur = rationalize(u)?;
    let inst = Instance::new(ur.clone())?;
    let pt = Point::new(xr.clone());
    let certificate = certify(&pt, &inst)?;
    let exact_probe = if certificate.stationary && objective(&pt, &inst)?.is_positive() {
        Some(directed_probe(&pt, &inst, &probe_grid())?)
    } else {
        None
    };
    Ok(NonConvergedRun {
        run_id,
        termination,
        x: xr,
        u: ur,
        certificate,
        exact_probe,
        float_probe: float_probe(x, u),
    })
}

/// Draw `(u, x0)` for run `run_id`.
pub fn draw_run(cfg: &SolveConfig, run_id: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream_rng(cfg.seed, run_id as u64);
    let u = match &cfg.u_source {
        USource::Gaussian => gaussian_vector(&mut rng, cfg.n),
        USource::Fixed(u) => u.clone(),
    };
    use rand::Rng;
    let r = cfg.init_radius;
    let x0 = (0..cfg.n).map(|_| rng.gen_range(-r..=r)).collect();
    (u, x0)
}

fn quantile(sorted: &[usize], p: f64) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// `cfg.runs` independent restarts. Results are in run order regardless of scheduling.
pub fn batch_experiment(cfg: &SolveConfig) -> Result<BatchSummary> {
    cfg.validate()?;
    let outcomes: Vec<Result<(RunRecord, Option<NonConvergedRun>)>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run_id| {
            let (u, x0) = draw_run(cfg, run_id);
            let run_cfg = SolveConfig {
                thin: 0,
                ..cfg.clone()
            };
            let traj = polyak_run(&u, &x0, &run_cfg)?;
            let record = RunRecord {
                run_id,
                iters: traj.iters,
                final_f: *traj.f_values.last().unwrap(),
                final_distance: traj.final_distance,
                flagged: traj.flagged(),
                termination: traj.termination,
            };
            let post = if traj.converged {
                None
            } else {
                Some(analyze_terminal(
                    run_id,
                    &traj.final_x,
                    &u,
                    traj.termination,
                )?)
            };
            Ok((record, post))
        })
        .collect();

    let mut records = Vec::with_capacity(cfg.runs);
    let mut non_converged = Vec::new();
    for o in outcomes {
        let (r, post) = o?;
        records.push(r);
        non_converged.extend(post);
    }
    let successes = records
        .iter()
        .filter(|r| r.termination == Termination::Converged)
        .count();
    let mut iters: Vec<usize> = records.iter().map(|r| r.iters).collect();
    iters.sort_unstable();
    Ok(BatchSummary {
        runs: cfg.runs,
        successes,
        success_rate: if cfg.runs == 0 {
            0.0
        } else {
            successes as f64 / cfg.runs as f64
        },
        iter_quantiles: IterQuantiles {
            min: quantile(&iters, 0.0),
            p50: quantile(&iters, 0.5),
            p90: quantile(&iters, 0.9),
            p99: quantile(&iters, 0.99),
            max: quantile(&iters, 1.0),
        },
        records,
        non_converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolveConfig {
        SolveConfig {
            max_iters: 1000,
            ..Default::default()
        }
    }

    #[test]
    fn subgrad_examples() {
        assert_eq!(
            subgrad_select(&[2.0, 0.0], &[1.0, 1.0]).unwrap(),
            vec![2.0, -2.0]
        );
        assert_eq!(
            subgrad_select(&[1.0, 3.0], &[1.0, 3.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            subgrad_select(&[1.0, -1.0], &[1.0, 1.0]).unwrap(),
            vec![1.0, -1.0]
        );
        assert!(subgrad_select(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn one_polyak_step() {
        let c = SolveConfig {
            max_iters: 1,
            ..cfg()
        };
        let t = polyak_run(&[1.0, 1.0], &[2.0, 0.0], &c).unwrap();
        assert_eq!(t.f_values, vec![3.0, 9.0 / 16.0]);
        let c = SolveConfig { thin: 1, ..c };
        let t = polyak_run(&[1.0, 1.0], &[2.0, 0.0], &c).unwrap();
        assert_eq!(t.iterates[1], vec![1.25, 0.75]);
        assert_eq!(t.termination, Termination::MaxIters);
    }

    #[test]
    fn starts_at_solution() {
        let t = polyak_run(&[1.0, -2.0], &[1.0, -2.0], &cfg()).unwrap();
        assert!(t.converged);
        assert_eq!(t.iters, 0);
    }

    #[test]
    fn flags_spurious_stationary_start() {
        let t = polyak_run(&[1.0, 2.0], &[0.0, 0.0], &cfg()).unwrap();
        assert_eq!(t.termination, Termination::StationaryNonglobal);
        assert!(t.flagged() && !t.converged);
        let post = analyze_terminal(0, &t.final_x, &[1.0, 2.0], t.termination).unwrap();
        assert!(post.certificate.stationary);
        assert_eq!(post.exact_probe, Some(Rational::new(-9, 2)));
        assert!(post.explained());
    }

    #[test]
    fn converged_iff_last_value_below_tol() {
        for seed in 0..20 {
            let c = SolveConfig {
                seed,
                n: 4,
                max_iters: 300,
                ..cfg()
            };
            let (u, x0) = draw_run(&c, 0);
            let t = polyak_run(&u, &x0, &c).unwrap();
            assert_eq!(t.converged, *t.f_values.last().unwrap() <= c.f_tol);
            assert!(t.f_values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn zero_target_converges_to_origin() {
        let c = SolveConfig {
            n: 3,
            runs: 20,
            u_source: USource::Fixed(vec![0.0; 3]),
            ..cfg()
        };
        let s = batch_experiment(&c).unwrap();
        assert_eq!(s.successes, 20);
    }

    #[test]
    fn diminishing_makes_progress() {
        let c = SolveConfig {
            method: Method::Diminishing,
            step_c: 0.5,
            max_iters: 2000,
            ..cfg()
        };
        let t = polyak_run(&[1.0, -1.0, 0.5], &[0.3, 0.7, -1.2], &c).unwrap();
        assert!(t.f_values.last().unwrap() < &t.f_values[0]);
    }

    #[test]
    fn deterministic() {
        let c = SolveConfig {
            n: 5,
            runs: 8,
            seed: 42,
            ..cfg()
        };
        assert_eq!(batch_experiment(&c).unwrap(), batch_experiment(&c).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(SolveConfig {
            max_iters: 0,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(SolveConfig {
            f_tol: -1.0,
            ..cfg()
        }
        .validate()
        .is_err());
        assert!(SolveConfig {
            f_tol: f64::NAN,
            ..cfg()
        }
        .validate()
        .is_err());
        let bad_u = SolveConfig {
            n: 3,
            u_source: USource::Fixed(vec![1.0]),
            ..cfg()
        };
        assert!(bad_u.validate().is_err());
    }

    #[test]
    fn quantile_nearest_rank() {
        let v = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
        assert_eq!(quantile(&v, 0.5), 5);
        assert_eq!(quantile(&v, 0.9), 9);
        assert_eq!(quantile(&v, 1.0), 10);
        assert_eq!(quantile(&v, 0.0), 1);
    }
}
