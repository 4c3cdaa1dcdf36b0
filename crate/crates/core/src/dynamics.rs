//! Langevin dynamics of Schmidt eigenvalues and the entropy moment
//! equations.
//!
//! A real state matrix `C` diffusing uniformly on the unit sphere drives its
//! Schmidt eigenvalues with drift
//!
//! ```text
//! A_n = beta [ sum_{m != n} lambda_n / (lambda_n - lambda_m) + nu - eta lambda_n ]
//! ```
//!
//! per unit `Lambda`, `eta = N_A N_B / 2`, and noise covariance
//! `2 (diag(lambda) - lambda lambda^T) dLambda`. With
//! `nu = (N_B - N_A + 1) / 2` the drift sums to zero on the simplex and the
//! stationary law is the fixed-trace Wishart (Haar state) law. The opposite
//! sign, `nu = (N_A - N_B - 1) / 2`, is available as
//! [`DriftConvention::Literal`]; it does not conserve the trace, so each step
//! is renormalized.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entangle::{self, EnsembleStats, LogBase};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix};
use crate::{math, rng};

/// Gap below which a pair of eigenvalues is treated as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Maximum number of step halvings before a step is declared failed.
pub const MAX_HALVINGS: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `lambda_1 = 1 - N_A^-q`, others `N_A^-(q+1)`, renormalized.
    WeakSeparability {
        q: f64,
    },
    Uniform,
    /// Explicit start on the simplex; sorted descending on use.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftConvention {
    /// `nu = (N_B - N_A + 1) / 2`; conserves the trace.
    #[default]
    Corrected,
    /// `nu = (N_A - N_B - 1) / 2`.
    Literal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFactor {
    /// `sqrt(lambda) * xi - lambda (sqrt(lambda) . xi)`; covariance exactly `D`.
    #[default]
    Projection,
    /// Symmetric square root of `D` by eigendecomposition.
    SymmetricSqrt,
}

/// Treatment of eigenvalues pushed below zero by a step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Mirror at zero.
    #[default]
    Reflect,
    /// Set to zero.
    Clip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinConfig {
    pub n_a: usize,
    pub n_b: usize,
    #[serde(default = "one")]
    pub dyson_beta: u8,
    /// Step in `Lambda`; defaults to `1e-5 * 2 / N`.
    #[serde(default)]
    pub d_lambda: Option<f64>,
    /// When set, the step grows as `max(d_lambda, step_fraction * Lambda)`.
    #[serde(default)]
    pub step_fraction: Option<f64>,
    /// Upper bound on the grown step.
    #[serde(default)]
    pub d_lambda_max: Option<f64>,
    pub lambda_grid: Vec<f64>,
    pub ensemble_size: usize,
    pub init: Init,
    pub seed: u64,
    #[serde(default)]
    pub drift: DriftConvention,
    #[serde(default)]
    pub noise: NoiseFactor,
    #[serde(default)]
    pub boundary: Boundary,
}

fn one() -> u8 {
    1
}

impl LangevinConfig {
    pub fn new(n_a: usize, n_b: usize, init: Init, lambda_grid: Vec<f64>, ensemble_size: usize, seed: u64) -> Self {
        Self {
            n_a,
            n_b,
            dyson_beta: 1,
            d_lambda: None,
            step_fraction: None,
            d_lambda_max: None,
            lambda_grid,
            ensemble_size,
            init,
            seed,
            drift: DriftConvention::default(),
            noise: NoiseFactor::default(),
            boundary: Boundary::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.n_a * self.n_b
    }

    pub fn eta(&self) -> f64 {
        self.n() as f64 / 2.0
    }

    pub fn nu(&self) -> f64 {
        let d = self.n_b as f64 - self.n_a as f64 + 1.0;
        match self.drift {
            DriftConvention::Corrected => d / 2.0,
            DriftConvention::Literal => -d / 2.0,
        }
    }

    pub fn base_step(&self) -> f64 {
        self.d_lambda.unwrap_or(1e-5 * 2.0 / self.n() as f64)
    }

    /// Step to take at `Lambda`.
    pub fn step_at(&self, lambda: f64) -> f64 {
        let base = self.base_step();
        let grown = match self.step_fraction {
            Some(f) => base.max(f * lambda),
            None => base,
        };
        match self.d_lambda_max {
            Some(m) => grown.min(m).max(base),
            None => grown,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a == 0 || self.n_b == 0 {
            return Err(invalid("N_A, N_B", "must be positive"));
        }
        if self.dyson_beta != 1 && self.dyson_beta != 2 {
            return Err(invalid("dyson_beta", "must be 1 or 2"));
        }
        if !(self.base_step() > 0.0) {
            return Err(invalid("d_lambda", "must be positive"));
        }
        if let Some(f) = self.step_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(invalid("step_fraction", "must lie in (0, 1)"));
            }
        }
        if let Init::WeakSeparability { q } = self.init {
            if !(q > 1.0) {
                return Err(invalid("q", "must exceed 1"));
            }
        }
        if self.ensemble_size == 0 {
            return Err(invalid("ensemble_size", "must be positive"));
        }
        if self.lambda_grid.is_empty() {
            return Err(invalid("lambda_grid", "must not be empty"));
        }
        let ok = self.lambda_grid.iter().all(|&x| x >= 0.0 && x.is_finite())
            && self.lambda_grid.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(invalid("lambda_grid", "must be finite, non-negative and increasing"));
        }
        Ok(())
    }
}

/// `n` log-spaced points from `lo` to `hi`, preceded by zero.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut g = vec![0.0];
    let (a, b) = (math::ln(lo), math::ln(hi));
    for k in 0..n {
        let t = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
        g.push(math::exp(a + t * (b - a)));
    }
    g
}

/// Initial Schmidt spectrum, descending.
pub fn init_lambda(config: &LangevinConfig) -> Result<Vec<f64>> {
    let n_a = config.n_a;
    if n_a == 0 {
        return Err(invalid("N_A", "must be positive"));
    }
    match &config.init {
        Init::Uniform => Ok(vec![1.0 / n_a as f64; n_a]),
        Init::Custom(l0) => {
            if l0.len() != n_a {
                return Err(Error::DimensionMismatch {
                    expected: n_a,
                    found: l0.len(),
                });
            }
            if l0.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(invalid("init", "entries must be finite and non-negative"));
            }
            let mut l = l0.clone();
            entangle::normalize_spectrum(&mut l)?;
            Ok(l)
        }
        &Init::WeakSeparability { q } => {
            if !(q > 1.0) {
                return Err(invalid("q", "must exceed 1"));
            }
            let na = n_a as f64;
            let mut l = vec![math::powf(na, -(q + 1.0)); n_a];
            l[0] = 1.0 - math::powf(na, -q);
            let s: f64 = l.iter().sum();
            for x in l.iter_mut() {
                *x /= s;
            }
            Ok(l)
        }
    }
}

/// Drift per unit `Lambda` for the given `nu` and `eta`. Degenerate pairs
/// (gap at most [`DEGENERACY_EPS`]) contribute `1/2` to each member, which
/// keeps the pairwise sum `lambda_n/(lambda_n - lambda_m) +
/// lambda_m/(lambda_m - lambda_n) = 1`.
pub fn drift_with(lambda: &[f64], nu: f64, eta: f64, beta: f64) -> Vec<f64> {
    let k = lambda.len();
    let mut a = vec![0.0; k];
    for n in 0..k {
        let mut s = 0.0;
        for m in 0..k {
            if m == n {
                continue;
            }
            let gap = lambda[n] - lambda[m];
            s += if math::abs(gap) <= DEGENERACY_EPS {
                0.5
            } else {
                lambda[n] / gap
            };
        }
        a[n] = beta * (s + nu - eta * lambda[n]);
    }
    a
}

/// Drift for the configured convention.
pub fn drift(lambda: &[f64], config: &LangevinConfig) -> Vec<f64> {
    drift_with(lambda, config.nu(), config.eta(), config.dyson_beta as f64)
}

/// `diag(lambda) - lambda lambda^T`.
pub fn diffusion_matrix(lambda: &[f64]) -> Matrix {
    let k = lambda.len();
    let mut d = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            d[(i, j)] = -lambda[i] * lambda[j];
        }
        d[(i, i)] += lambda[i];
    }
    d
}

/// A draw with covariance `D(lambda)` from `k` standard normals.
pub fn correlated_noise(lambda: &[f64], xi: &[f64], factor: NoiseFactor) -> Result<Vec<f64>> {
    match factor {
        NoiseFactor::Projection => {
            let roots: Vec<f64> = lambda.iter().map(|&x| math::sqrt(x.max(0.0))).collect();
            let s: f64 = roots.iter().zip(xi).map(|(r, x)| r * x).sum();
            Ok(roots
                .iter()
                .zip(xi)
                .zip(lambda)
                .map(|((r, x), l)| r * x - l * s)
                .collect())
        }
        NoiseFactor::SymmetricSqrt => {
            let eig = linalg::eigh(&diffusion_matrix(lambda))?;
            let k = lambda.len();
            // D^{1/2} xi = V diag(sqrt(max(e, 0))) V^T xi
            let mut proj = vec![0.0; k];
            for (j, p) in proj.iter_mut().enumerate() {
                let v = eig.vectors.column(j);
                *p = math::sqrt(eig.values[j].max(0.0)) * math::dot(&v, xi);
            }
            Ok(eig.vectors.mul_vec(&proj))
        }
    }
}

/// Outcome of a trial step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Accepted(Vec<f64>),
    /// An eigenvalue fell below `-10 sqrt(2 lambda dLambda)`.
    Rejected,
}

/// One Euler-Maruyama step with given standard normals `xi`.
pub fn step_with(lambda: &[f64], d_lambda: f64, xi: &[f64], config: &LangevinConfig) -> Result<StepOutcome> {
    if d_lambda == 0.0 {
        return Ok(StepOutcome::Accepted(lambda.to_vec()));
    }
    let a = drift(lambda, config);
    let noise = correlated_noise(lambda, xi, config.noise)?;
    let amp = math::sqrt(2.0 * d_lambda);
    let mut out = Vec::with_capacity(lambda.len());
    for n in 0..lambda.len() {
        let x = lambda[n] + a[n] * d_lambda + amp * noise[n];
        if x < -10.0 * math::sqrt(2.0 * lambda[n].max(0.0) * d_lambda) {
            return Ok(StepOutcome::Rejected);
        }
        out.push(match config.boundary {
            Boundary::Reflect => math::abs(x),
            Boundary::Clip => x.max(0.0),
        });
    }
    let s: f64 = out.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return Ok(StepOutcome::Rejected);
    }
    for x in out.iter_mut() {
        *x /= s;
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(StepOutcome::Accepted(out))
}

/// One step drawing its own noise.
pub fn step(lambda: &[f64], d_lambda: f64, r: &mut ChaCha8Rng, config: &LangevinConfig) -> Result<StepOutcome> {
    let mut xi = vec![0.0; lambda.len()];
    rng::fill_normal(r, &mut xi);
    step_with(lambda, d_lambda, &xi, config)
}

/// Checkpoints `(Lambda, lambda)` of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: usize,
    pub checkpoints: Vec<(f64, Vec<f64>)>,
}

/// Integrates trajectory `id`, landing exactly on every grid point.
pub fn run_trajectory(config: &LangevinConfig, id: usize) -> Result<Trajectory> {
    config.validate()?;
    let mut r = rng::stream(config.seed, id as u64);
    let mut lambda = init_lambda(config)?;
    let mut t = 0.0;
    let mut checkpoints = Vec::with_capacity(config.lambda_grid.len());
    let mut xi = vec![0.0; config.n_a];
    for &target in &config.lambda_grid {
        while t < target {
            let mut h = config.step_at(t).min(target - t);
            let mut halvings = 0;
            loop {
                rng::fill_normal(&mut r, &mut xi);
                match step_with(&lambda, h, &xi, config)? {
                    StepOutcome::Accepted(next) => {
                        lambda = next;
                        break;
                    }
                    StepOutcome::Rejected => {
                        halvings += 1;
                        if halvings > MAX_HALVINGS {
                            return Err(Error::StepFailure {
                                trajectory: id,
                                lambda: t,
                            });
                        }
                        h *= 0.5;
                    }
                }
            }
            t = if target - t - h <= 1e-15 * target {
                target
            } else {
                t + h
            };
        }
        checkpoints.push((target, lambda.clone()));
    }
    Ok(Trajectory { id, checkpoints })
}

/// All trajectories, serially.
pub fn evolve(config: &LangevinConfig) -> Result<(Vec<Trajectory>, Vec<MomentPoint>)> {
    let trajectories = (0..config.ensemble_size)
        .map(|id| run_trajectory(config, id))
        .collect::<Result<Vec<_>>>()?;
    let curves = moment_curves(config, &trajectories)?;
    Ok((trajectories, curves))
}

/// Per-trajectory `(R1, R0, Q)` columns at one checkpoint, in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureColumns {
    pub r1: Vec<f64>,
    pub r0: Vec<f64>,
    pub q: Vec<f64>,
}

pub fn measure_columns(trajectories: &[Trajectory], checkpoint: usize) -> MeasureColumns {
    let mut cols = MeasureColumns {
        r1: Vec::with_capacity(trajectories.len()),
        r0: Vec::with_capacity(trajectories.len()),
        q: Vec::with_capacity(trajectories.len()),
    };
    for t in trajectories {
        let m = entangle::measures(&t.checkpoints[checkpoint].1, LogBase::E, &[]);
        cols.r1.push(m.r1);
        cols.r0.push(m.r0);
        cols.q.push(m.q);
    }
    cols
}

/// Ensemble moments at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub lambda: f64,
    pub n_lambda: f64,
    pub stats: EnsembleStats,
    pub stderr_mean_r1: f64,
    pub stderr_var_r1: f64,
    pub stderr_mean_r0: f64,
    pub stderr_q: f64,
    pub stderr_cov: f64,
}

fn stderr_of(xs: &[f64]) -> f64 {
    math::sqrt(math::variance(xs) / xs.len() as f64)
}

pub fn moment_curves(config: &LangevinConfig, trajectories: &[Trajectory]) -> Result<Vec<MomentPoint>> {
    if trajectories.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            found: trajectories.len(),
        });
    }
    let n = config.n() as f64;
    let mut out = Vec::with_capacity(config.lambda_grid.len());
    for (k, &lam) in config.lambda_grid.iter().enumerate() {
        let c = measure_columns(trajectories, k);
        let stats = entangle::moments(&c.r1, &c.r0, &c.q)?;
        let sq: Vec<f64> = c.r1.iter().map(|x| (x - stats.mean_r1) * (x - stats.mean_r1)).collect();
        let cross: Vec<f64> =
            c.r1.iter()
                .zip(&c.r0)
                .map(|(a, b)| (a - stats.mean_r1) * (b - stats.mean_r0))
                .collect();
        out.push(MomentPoint {
            lambda: lam,
            n_lambda: n * lam,
            stats,
            stderr_mean_r1: stderr_of(&c.r1),
            stderr_var_r1: stderr_of(&sq),
            stderr_mean_r0: stderr_of(&c.r0),
            stderr_q: stderr_of(&c.q),
            stderr_cov: stderr_of(&cross),
        });
    }
    Ok(out)
}

/// `alpha + (N_B/2) <R0> - (N_A N_B / 2) <R1>`, `alpha = 1 - N_A (N_A + 1) / 2`.
pub fn r1_ode_rhs(mean_r1: f64, mean_r0: f64, n_a: usize, n_b: usize) -> f64 {
    let (na, nb) = (n_a as f64, n_b as f64);
    let alpha = 1.0 - na * (na + 1.0) / 2.0;
    alpha + nb / 2.0 * mean_r0 - na * nb / 2.0 * mean_r1
}

/// `alpha0 (1 - exp(-N Lambda / 2))`.
pub fn r1_closed_form(lambda: f64, n: usize, alpha0: f64) -> f64 {
    alpha0 * (1.0 - math::exp(-(n as f64) * lambda / 2.0))
}

/// `2 (Q - <R1^2>) + N_B cov(R0, R1) - N <dR1^2>`.
pub fn var_ode_rhs(var_r1: f64, q: f64, mean_r1_sq: f64, cov_r0_r1: f64, n_a: usize, n_b: usize) -> f64 {
    2.0 * (q - mean_r1_sq) + n_b as f64 * cov_r0_r1 - (n_a * n_b) as f64 * var_r1
}

/// `2 (Q - <R1^2>) (1 - exp(-N Lambda)) / N`.
pub fn var_large_lambda(lambda: f64, n: usize, q_minus_r1_sq: f64) -> f64 {
    let n = n as f64;
    2.0 * q_minus_r1_sq * (1.0 - math::exp(-n * lambda)) / n
}

/// Finite-difference residual of a moment equation on one grid interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeResidual {
    /// Interval midpoint.
    pub lambda: f64,
    pub finite_difference: f64,
    /// Right-hand side averaged over the interval ends.
    pub rhs: f64,
    pub residual: f64,
    pub stderr: f64,
}

impl OdeResidual {
    pub fn within(&self, sigmas: f64) -> bool {
        math::abs(self.residual) <= sigmas * self.stderr
    }
}

/// Residuals of the mean and variance equations on every grid interval.
///
/// Standard errors come from per-trajectory linearizations (influence
/// functions) of the residual, so correlations between the two ends of an
/// interval and between moments are accounted for.
pub fn ode_residuals(
    config: &LangevinConfig,
    trajectories: &[Trajectory],
) -> Result<(Vec<OdeResidual>, Vec<OdeResidual>)> {
    let m = trajectories.len();
    if m < 2 {
        return Err(Error::TooFew { needed: 2, found: m });
    }
    let (na, nb) = (config.n_a, config.n_b);
    let cols: Vec<MeasureColumns> = (0..config.lambda_grid.len())
        .map(|k| measure_columns(trajectories, k))
        .collect();
    let stats: Vec<EnsembleStats> = cols
        .iter()
        .map(|c| entangle::moments(&c.r1, &c.r0, &c.q))
        .collect::<Result<_>>()?;
    let nn = (na * nb) as f64;
    let mut mean_res = Vec::new();
    let mut var_res = Vec::new();
    for k in 0..config.lambda_grid.len().saturating_sub(1) {
        let (l0, l1) = (config.lambda_grid[k], config.lambda_grid[k + 1]);
        let h = l1 - l0;
        let (c0, c1) = (&cols[k], &cols[k + 1]);
        let (s0, s1) = (&stats[k], &stats[k + 1]);
        let mid = 0.5 * (l0 + l1);

        // Mean equation: every term is linear in per-trajectory values.
        let z: Vec<f64> = (0..m)
            .map(|t| {
                let fd = (c1.r1[t] - c0.r1[t]) / h;
                let rhs = 0.5 * (r1_ode_rhs(c0.r1[t], c0.r0[t], na, nb) + r1_ode_rhs(c1.r1[t], c1.r0[t], na, nb));
                fd - rhs
            })
            .collect();
        let fd = (s1.mean_r1 - s0.mean_r1) / h;
        let rhs = 0.5 * (r1_ode_rhs(s0.mean_r1, s0.mean_r0, na, nb) + r1_ode_rhs(s1.mean_r1, s1.mean_r0, na, nb));
        mean_res.push(OdeResidual {
            lambda: mid,
            finite_difference: fd,
            rhs,
            residual: fd - rhs,
            stderr: stderr_of(&z),
        });

        // Variance equation through influence functions.
        let infl = |c: &MeasureColumns, s: &EnsembleStats, t: usize| -> (f64, f64, f64, f64) {
            let d1 = c.r1[t] - s.mean_r1;
            let d0 = c.r0[t] - s.mean_r0;
            let var = d1 * d1 - s.var_r1;
            let q = c.q[t] - s.mean_q;
            let r1sq = c.r1[t] * c.r1[t] - s.mean_r1_sq;
            let cov = d1 * d0 - s.cov_r0_r1;
            (var, q, r1sq, cov)
        };
        let g = |var: f64, q: f64, r1sq: f64, cov: f64| var_ode_rhs(var, q, r1sq, cov, na, nb);
        let zv: Vec<f64> = (0..m)
            .map(|t| {
                let (v0, q0, r0, cv0) = infl(c0, s0, t);
                let (v1, q1, r1, cv1) = infl(c1, s1, t);
                let fd = (v1 - v0) / h;
                let rhs = 0.5 * (2.0 * (q0 - r0) + nb as f64 * cv0 - nn * v0)
                    + 0.5 * (2.0 * (q1 - r1) + nb as f64 * cv1 - nn * v1);
                fd - rhs
            })
            .collect();
        let fd = (s1.var_r1 - s0.var_r1) / h;
        let rhs = 0.5
            * (g(s0.var_r1, s0.mean_q, s0.mean_r1_sq, s0.cov_r0_r1)
                + g(s1.var_r1, s1.mean_q, s1.mean_r1_sq, s1.cov_r0_r1));
        var_res.push(OdeResidual {
            lambda: mid,
            finite_difference: fd,
            rhs,
            residual: fd - rhs,
            stderr: stderr_of(&zv),
        });
    }
    Ok((mean_res, var_res))
}

/// Least-squares fit of `<R1>(Lambda)` to [`r1_closed_form`] with the rate
/// fixed at `N / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormFit {
    pub alpha0: f64,
    pub r_squared: f64,
    /// `N Lambda` where the data cross `(1 - 1/e) alpha0`, if they do.
    pub knee_n_lambda: Option<f64>,
}

pub fn fit_closed_form(n_lambda: &[f64], mean_r1: &[f64]) -> Result<ClosedFormFit> {
    if n_lambda.len() != mean_r1.len() {
        return Err(Error::DimensionMismatch {
            expected: n_lambda.len(),
            found: mean_r1.len(),
        });
    }
    if n_lambda.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            found: n_lambda.len(),
        });
    }
    let f: Vec<f64> = n_lambda.iter().map(|&x| 1.0 - math::exp(-x / 2.0)).collect();
    let ff: f64 = f.iter().map(|x| x * x).sum();
    if !(ff > 0.0) {
        return Err(Error::DegenerateFit("all points at N Lambda = 0"));
    }
    let alpha0 = f.iter().zip(mean_r1).map(|(a, b)| a * b).sum::<f64>() / ff;
    let ybar = math::mean(mean_r1);
    let ss_tot: f64 = mean_r1.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let ss_res: f64 = f
        .iter()
        .zip(mean_r1)
        .map(|(a, y)| (y - alpha0 * a) * (y - alpha0 * a))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    let level = (1.0 - math::exp(-1.0)) * alpha0;
    let knee_n_lambda = crossing(n_lambda, mean_r1, level);
    Ok(ClosedFormFit {
        alpha0,
        r_squared,
        knee_n_lambda,
    })
}

/// First upward crossing of `level`, linearly interpolated.
pub fn crossing(x: &[f64], y: &[f64], level: f64) -> Option<f64> {
    for k in 1..x.len() {
        if y[k - 1] < level && y[k] >= level {
            let t = (level - y[k - 1]) / (y[k] - y[k - 1]);
            return Some(x[k - 1] + t * (x[k] - x[k - 1]));
        }
    }
    None
}
