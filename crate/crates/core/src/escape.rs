//! Second-order behavior at stationary points.
//!
//! At every first-order stationary `x`, moving along `w = θu - x` (`θ = ±1`) gives
//! the exact law `f(x + t w) = (1 - t²) f(x)` for `t ∈ [0, 1]`. So the second
//! subderivative along `w` is at most `-2 f(x)`, and any stationary point with
//! `f(x) > 0` is not second-order stationary. This module evaluates that law exactly,
//! checks the ratio bound that makes it hold, estimates the second subderivative
//! numerically, and evaluates the auxiliary bilinear form `γ` used to rule out the
//! two-ratio configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::stationary_closed_form;
use crate::error::{Error, Result};
use crate::model::{objective, objective_f64, objective_unchecked, residual, Instance, Point};
use crate::rational::Rational;

/// Sign choice in `w = θu - x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Theta {
    Plus,
    Minus,
}

impl Theta {
    pub const BOTH: [Theta; 2] = [Theta::Plus, Theta::Minus];

    pub fn as_rational(self) -> Rational {
        match self {
            Theta::Plus => Rational::one(),
            Theta::Minus => Rational::from_integer(-1),
        }
    }
}

impl From<Theta> for i8 {
    fn from(t: Theta) -> i8 {
        match t {
            Theta::Plus => 1,
            Theta::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Theta {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Theta::Plus),
            -1 => Ok(Theta::Minus),
            _ => Err(format!("theta must be 1 or -1, got {v}")),
        }
    }
}

/// One sample of the decrease curve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: Rational,
    pub f_value: Rational,
    /// `(1 - t²) f(x)`.
    pub predicted: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub theta: Theta,
    pub w: Vec<Rational>,
    pub curve: Vec<CurvePoint>,
    pub d2_estimate: f64,
    /// `f(x) > 0`, the decrease law held at every sample, and `d2_estimate < 0`.
    pub certified_spurious: bool,
}

/// Parameters of [`second_subderivative_estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub tau_count: u32,
    pub perturb_count: u32,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            tau_count: 12,
            perturb_count: 0,
            seed: 0,
        }
    }
}

fn require_stationary(x: &Point, u: &Instance) -> Result<()> {
    if stationary_closed_form(x, u)? {
        Ok(())
    } else {
        Err(Error::NotStationary)
    }
}

/// `w = θu - x`. Only defined at stationary points.
pub fn escape_direction(x: &Point, u: &Instance, theta: Theta) -> Result<Vec<Rational>> {
    require_stationary(x, u)?;
    let th = theta.as_rational();
    Ok(u.u.iter().zip(&x.x).map(|(ui, xi)| &th * ui - xi).collect())
}

fn check_t(t: &Rational) -> Result<()> {
    if t.is_positive() && *t <= 1 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("t = {t} outside (0, 1]")))
    }
}

/// Exact `f(x + t w)` next to `(1 - t²) f(x)` for each `t` in the grid.
pub fn decrease_curve(
    x: &Point,
    u: &Instance,
    theta: Theta,
    t_grid: &[Rational],
) -> Result<Vec<CurvePoint>> {
    let w = escape_direction(x, u, theta)?;
    let f0 = objective(x, u)?;
    t_grid
        .iter()
        .map(|t| {
            check_t(t)?;
            let f_value = objective_unchecked(&x.step(t, &w).x, &u.u);
            let predicted = (Rational::one() - t.square()) * &f0;
            Ok(CurvePoint {
                t: t.clone(),
                f_value,
                predicted,
            })
        })
        .collect()
}

/// `(x_i + t w_i)(x_j + t w_j) / (u_i u_j) <= 1` for every pair with `u_i u_j != 0`.
pub fn ratio_check(x: &Point, u: &Instance, theta: Theta, t: &Rational) -> Result<bool> {
    check_t(t)?;
    let w = escape_direction(x, u, theta)?;
    let y = x.step(t, &w);
    let n = u.dim();
    for i in 0..n {
        for j in i..n {
            let d = &u.u[i] * &u.u[j];
            if d.is_zero() {
                continue;
            }
            if &y.x[i] * &y.x[j] / d > Rational::one() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Upper estimate of the second subderivative `d²f(x | 0)(w)`.
///
/// Minimum of `[f(x + τw') - f(x)] / (τ²/2)` over `τ = 2^-k`, `k = 1..=tau_count`,
/// and `w' ∈ {w} ∪ {w + δ_j}`, `j = 1..=perturb_count`, with each `δ_j` uniform in
/// the cube of radius `τ`. The unperturbed quotient is exact (all of `x`, `w`, `τ`
/// are rational) and rounded once at the end; perturbed quotients are double
/// precision. Each `δ` comes from its own `(k, j)` stream, so growing either count
/// only adds candidates and can never raise the estimate.
///
/// A negative value certifies `d²f(x | 0)(w) < 0`; a nonnegative one is inconclusive.
pub fn second_subderivative_estimate(
    x: &Point,
    u: &Instance,
    w: &[Rational],
    cfg: &EstimatorConfig,
) -> Result<f64> {
    u.check(x)?;
    if w.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            field: "w",
            expected: x.dim(),
            found: w.len(),
        });
    }
    if cfg.tau_count == 0 {
        return Err(Error::InvalidArgument(
            "tau_count must be at least 1".into(),
        ));
    }
    let f0 = objective_unchecked(&x.x, &u.u);
    let xf = x.to_f64();
    let uf: Vec<f64> = u.u.iter().map(Rational::to_f64).collect();
    let wf: Vec<f64> = w.iter().map(Rational::to_f64).collect();
    let f0f = f0.to_f64();
    let two = Rational::from_integer(2);

    let mut best = f64::INFINITY;
    let mut tau = Rational::one();
    for k in 1..=cfg.tau_count {
        tau = tau / &two;
        let fy = objective_unchecked(&x.step(&tau, w).x, &u.u);
        let quotient = (fy - &f0) * &two / tau.square();
        best = best.min(quotient.to_f64());

        let tf = tau.to_f64();
        for j in 1..=cfg.perturb_count {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((u64::from(k) << 32) | u64::from(j));
            let y: Vec<f64> = xf
                .iter()
                .zip(&wf)
                .map(|(xi, wi)| xi + tf * (wi + rng.gen_range(-tf..=tf)))
                .collect();
            let q = (objective_f64(&y, &uf) - f0f) / (0.5 * tf * tf);
            best = best.min(q);
        }
    }
    Ok(best)
}

/// Curve, direction, and second-order estimate along `w = θu - x`.
pub fn escape_report(
    x: &Point,
    u: &Instance,
    theta: Theta,
    t_grid: &[Rational],
    est: &EstimatorConfig,
) -> Result<EscapeReport> {
    let w = escape_direction(x, u, theta)?;
    let curve = decrease_curve(x, u, theta, t_grid)?;
    let d2_estimate = second_subderivative_estimate(x, u, &w, est)?;
    let law_holds = curve.iter().all(|c| c.f_value == c.predicted);
    let spurious = objective(x, u)?.is_positive();
    Ok(EscapeReport {
        theta,
        w,
        curve,
        d2_estimate,
        certified_spurious: spurious && law_holds && d2_estimate < 0.0,
    })
}

/// A point with every ratio `x_i / u_i` equal to `μ` (on `block_mu`) or `1/μ` (on
/// `block_inv`). Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaConfig {
    pub mu: Rational,
    pub block_mu: Vec<usize>,
    pub block_inv: Vec<usize>,
    pub u: Instance,
}

impl GammaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGammaConfig(m.to_string()));
        if self.mu <= 1 {
            return bad("mu must exceed 1");
        }
        if self.block_mu.is_empty() || self.block_inv.is_empty() {
            return bad("both blocks must be nonempty");
        }
        let n = self.u.dim();
        let mut seen = vec![false; n];
        for &i in self.block_mu.iter().chain(&self.block_inv) {
            if i >= n {
                return bad("block index out of range");
            }
            if seen[i] {
                return bad("blocks overlap");
            }
            seen[i] = true;
        }
        if !seen.iter().all(|&s| s) {
            return bad("blocks do not cover all coordinates");
        }
        if self.u.u.iter().any(Rational::is_zero) {
            return bad("u must have no zero coordinates");
        }
        Ok(())
    }

    /// `x_i = μ u_i` on `block_mu`, `u_i / μ` on `block_inv`.
    pub fn implied_point(&self) -> Result<Point> {
        self.validate()?;
        let mut x = self.u.u.clone();
        for &i in &self.block_mu {
            x[i] = &self.u.u[i] * &self.mu;
        }
        for &i in &self.block_inv {
            x[i] = &self.u.u[i] / &self.mu;
        }
        Ok(Point::new(x))
    }

    /// Pairs `(i, j)`, `i <= j`, where the residual vanishes. The diagonal never does.
    pub fn zero_residual_pairs(&self) -> Result<Vec<(usize, usize)>> {
        let x = self.implied_point()?;
        let r = residual(&x, &self.u)?;
        let n = self.u.dim();
        Ok((0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .filter(|&(i, j)| r.get(i, j).is_zero())
            .collect())
    }
}

/// `h_i = -μ u_i` on `block_mu`, `u_i / μ` on `block_inv`.
pub fn build_h(cfg: &GammaConfig) -> Result<Vec<Rational>> {
    cfg.validate()?;
    let mut h = cfg.u.u.clone();
    for &i in &cfg.block_mu {
        h[i] = -(&cfg.u.u[i] * &cfg.mu);
    }
    for &i in &cfg.block_inv {
        h[i] = &cfg.u.u[i] / &cfg.mu;
    }
    Ok(h)
}

/// `h^T Q x + x^T Q h`.
pub fn gamma(q: &[Vec<Rational>], x: &Point, h: &[Rational]) -> Result<Rational> {
    let n = x.dim();
    if h.len() != n {
        return Err(Error::DimensionMismatch {
            field: "h",
            expected: n,
            found: h.len(),
        });
    }
    if q.len() != n || q.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            field: "Q",
            expected: n,
            found: q.len(),
        });
    }
    let mut acc = Rational::zero();
    for (i, row) in q.iter().enumerate() {
        for (j, qij) in row.iter().enumerate() {
            if qij.is_zero() {
                continue;
            }
            acc += qij * (&h[i] * &x.x[j] + &x.x[i] * &h[j]);
        }
    }
    Ok(acc)
}

/// `-2μ² (sum_{block_mu} |u_i|)² - (2/μ²) (sum_{block_inv} |u_i|)²`.
pub fn gamma_closed_form(cfg: &GammaConfig) -> Result<Rational> {
    cfg.validate()?;
    let s_mu: Rational = cfg.block_mu.iter().map(|&i| cfg.u.u[i].abs()).sum();
    let s_inv: Rational = cfg.block_inv.iter().map(|&i| cfg.u.u[i].abs()).sum();
    let mu2 = cfg.mu.square();
    let two = Rational::from_integer(2);
    Ok(-(&two * &mu2 * s_mu.square()) - &two / &mu2 * s_inv.square())
}

/// `γ` at `sgn(x x^T - u u^T)` with the zero-residual entries overwritten by
/// `select(i, j)` (symmetrically).
pub fn gamma_with_selection<F>(cfg: &GammaConfig, mut select: F) -> Result<Rational>
where
    F: FnMut(usize, usize) -> Rational,
{
    let x = cfg.implied_point()?;
    let h = build_h(cfg)?;
    let mut q = residual(&x, &cfg.u)?.sgn();
    for (i, j) in cfg.zero_residual_pairs()? {
        let v = select(i, j);
        q[i][j] = v.clone();
        q[j][i] = v;
    }
    gamma(&q, &x, &h)
}

/// `(direct, closed_form)` with `direct = γ(sgn(x x^T - u u^T))`.
///
/// Fails with [`Error::Invariant`] unless the two agree and are negative.
pub fn gamma_identity(cfg: &GammaConfig) -> Result<(Rational, Rational)> {
    let x = cfg.implied_point()?;
    let h = build_h(cfg)?;
    let q = residual(&x, &cfg.u)?.sgn();
    let direct = gamma(&q, &x, &h)?;
    let closed = gamma_closed_form(cfg)?;
    if direct != closed || !direct.is_negative() {
        return Err(Error::Invariant(format!(
            "gamma identity: direct {direct}, closed form {closed}"
        )));
    }
    Ok((direct, closed))
}
