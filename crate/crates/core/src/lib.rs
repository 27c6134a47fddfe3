//! Exact landscape analysis for `f(x) = ½ Σ_ij |x_i x_j - u_i u_j|`.
//!
//! Stationarity is decided exactly over the rationals (closed form and LP witness,
//! cross-checked), the escape direction `θu - x` and its decrease law are verified
//! with exact arithmetic, and brute-force oracles re-check everything on tiny
//! instances. A double-precision subgradient harness measures how often Polyak
//! steps reach a global minimizer.

pub mod alpha;
pub mod certify;
pub mod error;
pub mod escape;
pub mod interval;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod sampling;
pub mod simplex;
pub mod solve;

pub use alpha::{build_step, eval_subdiff, zero_root_interval, RootInterval, StepFunction};
pub use certify::{certify, stationary_closed_form, witness_lp, Certificate};
pub use error::{Error, Result};
pub use escape::{
    decrease_curve, escape_direction, escape_report, gamma_identity, second_subderivative_estimate,
    CurvePoint, EscapeReport, EstimatorConfig, GammaConfig, Theta,
};
pub use interval::{sign_interval, IntervalScalar};
pub use model::{
    objective, objective_f64, residual, subdiff_box, Instance, InstanceFile, IntervalMatrix, Point,
    ResidualMatrix,
};
pub use oracle::{directed_probe, grid_local_minima, qp_feasibility_oracle, qp_verdict, GridScan};
pub use rational::Rational;
pub use solve::{
    batch_experiment, polyak_run, subgrad_select, BatchSummary, Method, SolveConfig, Trajectory,
    USource,
};
