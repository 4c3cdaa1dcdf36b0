//! Bipartite entanglement of real pure states.

use alloc::vec::Vec;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix};
use crate::models::BasisMap;
use crate::spectral::NORM_TOL;
use crate::{math, rng};

/// Floor applied to Schmidt eigenvalues inside `ln` for `R0` and `Q`.
pub const LAMBDA_FLOOR: f64 = 1e-30;

/// Largest accepted `|tr(C C^T) - 1|`.
pub const TRACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[serde(rename = "2")]
    Two,
    #[default]
    #[serde(rename = "e")]
    E,
}

impl LogBase {
    /// Converts an entropy in nats to this base.
    pub fn from_nats(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x / core::f64::consts::LN_2,
            LogBase::E => x,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "2" => Some(LogBase::Two),
            "e" => Some(LogBase::E),
            _ => None,
        }
    }
}

/// Subsystem dimensions for an even split of `l` spins; A holds the first
/// `l / 2` sites.
pub fn bipartition(l: usize) -> (usize, usize) {
    (1 << (l / 2), 1 << (l - l / 2))
}

/// Amplitudes `C_{kl}` of a pure state on `A x B`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    c: Matrix,
}

impl StateMatrix {
    /// Wraps a matrix, checking unit Frobenius norm.
    pub fn new(c: Matrix) -> Result<Self> {
        let norm = c.frobenius_norm();
        if math::abs(norm - 1.0) > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { c })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.c
    }

    pub fn n_a(&self) -> usize {
        self.c.rows()
    }

    pub fn n_b(&self) -> usize {
        self.c.cols()
    }
}

/// Reshapes a state into `C`. Sector states are embedded with zeros into the
/// full `2^L` space; the `log2 N_A` most significant bits index rows.
pub fn state_matrix(vector: &[f64], basis: &BasisMap, n_a: usize, n_b: usize) -> Result<StateMatrix> {
    let l = basis.sites();
    if !n_a.is_power_of_two() || !n_b.is_power_of_two() || n_a * n_b != 1usize << l {
        return Err(invalid("N_A, N_B", "must be powers of two with N_A N_B = 2^L"));
    }
    if vector.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: vector.len(),
        });
    }
    if !basis.is_consistent() {
        return Err(invalid("basis", "labels are not sorted or leave the sector"));
    }
    let shift = n_b.trailing_zeros();
    let mut c = Matrix::zeros(n_a, n_b);
    for (i, &amp) in vector.iter().enumerate() {
        let cfg = basis.config(i) as usize;
        c[(cfg >> shift, cfg & (n_b - 1))] = amp;
    }
    StateMatrix::new(c)
}

/// Schmidt eigenvalues, descending, nonnegative, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    pub lambdas: Vec<f64>,
}

/// Eigenvalues of `C C^T`.
pub fn schmidt_spectrum(c: &StateMatrix) -> Result<SchmidtSpectrum> {
    let rho = c.matrix().gram();
    let mut lambdas = linalg::eigvalsh(&rho)?;
    normalize_spectrum(&mut lambdas)?;
    Ok(SchmidtSpectrum { lambdas })
}

/// Clips at zero, sorts descending and rescales to unit sum, rejecting
/// traces further than [`TRACE_TOL`] from one.
pub fn normalize_spectrum(lambdas: &mut [f64]) -> Result<()> {
    let trace: f64 = lambdas.iter().sum();
    if !(math::abs(trace - 1.0) <= TRACE_TOL) {
        return Err(Error::TraceDeviation { trace });
    }
    for x in lambdas.iter_mut() {
        *x = x.max(0.0);
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let s: f64 = lambdas.iter().sum();
    for x in lambdas.iter_mut() {
        *x /= s;
    }
    Ok(())
}

/// Entanglement measures of one state. Entropies are stored in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementRecord {
    pub r1: f64,
    pub r0: f64,
    pub q: f64,
    /// `(alpha, R_alpha)` pairs.
    pub renyi: Vec<(f64, f64)>,
    pub energy: Option<f64>,
    pub log_base: LogBase,
}

impl EntanglementRecord {
    /// `R1` in the record's reporting base.
    pub fn r1_reported(&self) -> f64 {
        self.log_base.from_nats(self.r1)
    }

    pub fn renyi_reported(&self, alpha: f64) -> Option<f64> {
        self.renyi
            .iter()
            .find(|(a, _)| *a == alpha)
            .map(|&(_, r)| self.log_base.from_nats(r))
    }
}

pub fn von_neumann(lambdas: &[f64]) -> f64 {
    -lambdas
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * math::ln(x))
        .sum::<f64>()
}

/// `(1 / (1 - alpha)) ln sum lambda^alpha`, with the von Neumann limit at 1.
pub fn renyi(lambdas: &[f64], alpha: f64) -> f64 {
    if alpha == 1.0 {
        return von_neumann(lambdas);
    }
    let s: f64 = lambdas
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| math::powf(x, alpha))
        .sum();
    math::ln(s) / (1.0 - alpha)
}

pub fn measures(lambdas: &[f64], log_base: LogBase, alphas: &[f64]) -> EntanglementRecord {
    let mut r0 = 0.0;
    let mut q = 0.0;
    for &x in lambdas {
        let lx = math::ln(x.max(LAMBDA_FLOOR));
        r0 -= lx;
        if x > 0.0 {
            let l = math::ln(x);
            q += x * l * l;
        }
    }
    EntanglementRecord {
        r1: von_neumann(lambdas),
        r0,
        q,
        renyi: alphas.iter().map(|&a| (a, renyi(lambdas, a))).collect(),
        energy: None,
        log_base,
    }
}

/// Haar-random real pure state on `A x B`.
pub fn haar_sample<R: RngCore + ?Sized>(n_a: usize, n_b: usize, r: &mut R) -> StateMatrix {
    let mut data = alloc::vec![0.0; n_a * n_b];
    rng::fill_normal(r, &mut data);
    let norm = math::norm2(&data);
    for x in data.iter_mut() {
        *x /= norm;
    }
    StateMatrix {
        c: Matrix::from_vec(n_a, n_b, data).expect("shape matches"),
    }
}

/// Sample moments of entanglement measures (unbiased, in nats).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub count: usize,
    pub mean_r1: f64,
    pub var_r1: f64,
    pub mean_r1_sq: f64,
    pub mean_r0: f64,
    pub var_r0: f64,
    pub mean_q: f64,
    pub cov_r0_r1: f64,
}

impl EnsembleStats {
    pub fn stderr_r1(&self) -> f64 {
        math::sqrt(self.var_r1 / self.count as f64)
    }
}

pub fn ensemble_stats(records: &[EntanglementRecord]) -> Result<EnsembleStats> {
    let r1: Vec<f64> = records.iter().map(|r| r.r1).collect();
    let r0: Vec<f64> = records.iter().map(|r| r.r0).collect();
    let q: Vec<f64> = records.iter().map(|r| r.q).collect();
    moments(&r1, &r0, &q)
}

/// Moments from parallel columns of `R1`, `R0` and `Q`.
pub fn moments(r1: &[f64], r0: &[f64], q: &[f64]) -> Result<EnsembleStats> {
    let n = r1.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n < 2 {
        return Err(Error::TooFew { needed: 2, found: n });
    }
    if r0.len() != n || q.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: r0.len().min(q.len()),
        });
    }
    let m1 = math::mean(r1);
    let m0 = math::mean(r0);
    let cov = r1.iter().zip(r0).map(|(a, b)| (a - m1) * (b - m0)).sum::<f64>() / (n - 1) as f64;
    Ok(EnsembleStats {
        count: n,
        mean_r1: m1,
        var_r1: math::variance(r1),
        mean_r1_sq: r1.iter().map(|x| x * x).sum::<f64>() / n as f64,
        mean_r0: m0,
        var_r0: math::variance(r0),
        mean_q: math::mean(q),
        cov_r0_r1: cov,
    })
}
