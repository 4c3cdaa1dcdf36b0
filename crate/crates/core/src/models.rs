//! Ensemble specifications and Hamiltonian sampling.
//!
//! Three ensembles are supported:
//!
//! * the quantum random energy model (QREM) on the full `2^L` space, with
//!   Gaussian diagonal energies and random hopping between configurations at
//!   unit Hamming distance;
//! * the random-field Heisenberg chain (RFHM) restricted to zero
//!   magnetization;
//! * a generic real-symmetric Gaussian ensemble given by tables of means and
//!   variances.
//!
//! Configurations are `L`-bit integers. Site `k` is bit `L - 1 - k`, so site
//! 0 is the most significant bit, and a set bit is an up spin.
//!
//! Every sample draws the same sequence of normal variates for a given
//! `(master_seed, realization_index)` regardless of the model parameters, so
//! sweeps over `b` or `h` use common random numbers.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::{math, rng};

/// Largest `L` whose configurations fit the index type comfortably.
pub const MAX_SITES: usize = 30;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params")]
pub enum Model {
    #[serde(rename = "QREM")]
    Qrem {
        b: f64,
    },
    #[serde(rename = "RFHM")]
    Rfhm {
        #[serde(rename = "J")]
        j: f64,
        #[serde(rename = "D")]
        d: f64,
        h: f64,
        #[serde(default)]
        boundary: Boundary,
    },
    GenericGaussian {
        means: Matrix,
        variances: Matrix,
    },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Qrem { .. } => "QREM",
            Model::Rfhm { .. } => "RFHM",
            Model::GenericGaussian { .. } => "GenericGaussian",
        }
    }
}

/// A validated ensemble. Construct with [`build_spec`] or deserialize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct EnsembleSpec {
    pub model: Model,
    pub l: usize,
    pub gamma: f64,
    pub master_seed: u64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    #[serde(flatten)]
    model: Model,
    #[serde(rename = "L")]
    l: usize,
    gamma: f64,
    master_seed: u64,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default = "default_beta")]
    dyson_beta: u8,
}

fn default_beta() -> u8 {
    1
}

impl TryFrom<RawSpec> for EnsembleSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        if raw.dyson_beta != 1 {
            return Err(invalid("dyson_beta", "only real symmetric ensembles (1) are sampled"));
        }
        let spec = build_spec(raw.model, raw.l, raw.gamma, raw.master_seed)?;
        if let Some(n) = raw.n {
            if n != spec.n {
                return Err(Error::DimensionMismatch {
                    expected: spec.n,
                    found: n,
                });
            }
        }
        Ok(spec)
    }
}

impl From<EnsembleSpec> for RawSpec {
    fn from(s: EnsembleSpec) -> Self {
        RawSpec {
            model: s.model,
            l: s.l,
            gamma: s.gamma,
            master_seed: s.master_seed,
            n: Some(s.n),
            dyson_beta: 1,
        }
    }
}

impl EnsembleSpec {
    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn dyson_beta(&self) -> u8 {
        1
    }

    /// Same ensemble with different model parameters (dimension unchanged).
    pub fn with_model(&self, model: Model) -> Result<Self> {
        build_spec(model, self.l, self.gamma, self.master_seed)
    }
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

fn check_nonneg(name: &'static str, x: f64) -> Result<()> {
    if !(x >= 0.0) || x.is_nan() {
        return Err(invalid(name, "must be a non-negative number"));
    }
    Ok(())
}

pub fn build_spec(model: Model, l: usize, gamma: f64, master_seed: u64) -> Result<EnsembleSpec> {
    if l < 2 {
        return Err(invalid("L", "need at least 2 sites"));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid("gamma", "must be positive and finite"));
    }
    let n = match &model {
        Model::Qrem { b } => {
            if l > MAX_SITES {
                return Err(invalid("L", "too many sites"));
            }
            check_nonneg("b", *b)?;
            1usize << l
        }
        Model::Rfhm { j, d, h, .. } => {
            if l > MAX_SITES {
                return Err(invalid("L", "too many sites"));
            }
            if !l.is_multiple_of(2) {
                return Err(invalid("L", "RFHM needs an even number of sites"));
            }
            if !j.is_finite() || !d.is_finite() {
                return Err(invalid("J", "J and D must be finite"));
            }
            check_nonneg("h", *h)?;
            binomial(l, l / 2)
        }
        Model::GenericGaussian { means, variances } => {
            check_tables(means, variances)?;
            means.rows()
        }
    };
    Ok(EnsembleSpec {
        model,
        l,
        gamma,
        master_seed,
        n,
    })
}

fn check_tables(means: &Matrix, variances: &Matrix) -> Result<()> {
    for t in [means, variances] {
        if !t.is_square() {
            return Err(Error::DimensionMismatch {
                expected: t.rows(),
                found: t.cols(),
            });
        }
    }
    if means.rows() != variances.rows() {
        return Err(Error::DimensionMismatch {
            expected: means.rows(),
            found: variances.rows(),
        });
    }
    if means.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    let n = means.rows();
    for i in 0..n {
        for j in 0..n {
            for t in [means, variances] {
                if t[(i, j)].to_bits() != t[(j, i)].to_bits() {
                    return Err(Error::AsymmetricTable { row: i, col: j });
                }
            }
            let v = variances[(i, j)];
            if !(v >= 0.0) {
                return Err(Error::NegativeVariance {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// Product-basis labels of a sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisMap {
    l: usize,
    labels: Vec<u64>,
    /// Number of up spins minus number of down spins, if restricted.
    sector: Option<i32>,
}

impl BasisMap {
    /// All `2^L` configurations in ascending order.
    pub fn full(l: usize) -> Self {
        Self {
            l,
            labels: (0..1u64 << l).collect(),
            sector: None,
        }
    }

    /// Configurations with `L/2` up spins, ascending.
    pub fn zero_magnetization(l: usize) -> Self {
        let labels = (0..1u64 << l).filter(|c| c.count_ones() as usize * 2 == l).collect();
        Self {
            l,
            labels,
            sector: Some(0),
        }
    }

    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sector(&self) -> Option<i32> {
        self.sector
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn config(&self, index: usize) -> u64 {
        self.labels[index]
    }

    /// Row index of a configuration.
    pub fn index_of(&self, config: u64) -> Option<usize> {
        if self.sector.is_none() {
            return (config < self.labels.len() as u64).then_some(config as usize);
        }
        self.labels.binary_search(&config).ok()
    }

    /// Label as a bit string, site 0 first (`'1'` = up).
    pub fn label(&self, index: usize) -> String {
        let c = self.labels[index];
        (0..self.l)
            .map(|k| if spin_up(c, self.l, k) { '1' } else { '0' })
            .collect()
    }

    pub fn is_consistent(&self) -> bool {
        let sorted = self.labels.windows(2).all(|w| w[0] < w[1]);
        let in_sector = match self.sector {
            Some(m) => self
                .labels
                .iter()
                .all(|c| 2 * c.count_ones() as i32 - self.l as i32 == m),
            None => true,
        };
        sorted && in_sector
    }
}

#[inline]
fn spin_up(config: u64, l: usize, site: usize) -> bool {
    (config >> (l - 1 - site)) & 1 == 1
}

#[inline]
fn spin_z(config: u64, l: usize, site: usize) -> f64 {
    if spin_up(config, l, site) {
        0.5
    } else {
        -0.5
    }
}

/// One realization of an ensemble.
#[derive(Debug, Clone)]
pub struct HamiltonianSample {
    pub matrix: Matrix,
    pub basis: BasisMap,
    pub realization_index: u64,
    pub seed_used: u64,
}

/// Variance of the QREM hopping element between configurations `mu` and
/// `nu`, which must differ in exactly one bit.
pub fn qrem_offdiag_variance(mu: usize, nu: usize, b: f64) -> Result<f64> {
    if (mu ^ nu).count_ones() != 1 {
        return Err(Error::NotHammingNeighbors { mu, nu });
    }
    Ok(qrem_variance_at_distance(mu.abs_diff(nu) as f64, b))
}

fn qrem_variance_at_distance(dist: f64, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let r = dist / b;
    1.0 / (1.0 + r * r)
}

/// Mean and variance tables of the QREM as a generic Gaussian ensemble.
pub fn qrem_tables(l: usize, b: f64) -> (Matrix, Matrix) {
    let n = 1usize << l;
    let means = Matrix::zeros(n, n);
    let mut vars = Matrix::zeros(n, n);
    for mu in 0..n {
        vars[(mu, mu)] = l as f64 / 2.0;
        for r in 0..l {
            let nu = mu ^ (1 << r);
            vars[(mu, nu)] = qrem_variance_at_distance((1u64 << r) as f64, b);
        }
    }
    (means, vars)
}

/// Reusable sampler; precomputes the basis and the hopping structure.
#[derive(Debug, Clone)]
pub struct Sampler {
    spec: EnsembleSpec,
    basis: BasisMap,
    /// RFHM: for each unordered bond exchange, `(row, col)` with `row < col`.
    hops: Vec<(usize, usize)>,
}

impl Sampler {
    pub fn new(spec: &EnsembleSpec) -> Self {
        let (basis, hops) = match &spec.model {
            Model::Qrem { .. } => (BasisMap::full(spec.l), Vec::new()),
            Model::Rfhm { boundary, .. } => {
                let basis = BasisMap::zero_magnetization(spec.l);
                let hops = rfhm_hops(&basis, *boundary);
                (basis, hops)
            }
            Model::GenericGaussian { .. } => (
                BasisMap {
                    l: spec.l,
                    labels: (0..spec.n as u64).collect(),
                    sector: None,
                },
                Vec::new(),
            ),
        };
        Self {
            spec: spec.clone(),
            basis,
            hops,
        }
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn basis(&self) -> &BasisMap {
        &self.basis
    }

    pub fn sample(&self, realization_index: u64) -> HamiltonianSample {
        let seed = rng::stream_seed(self.spec.master_seed, realization_index);
        let mut r = rng::stream(self.spec.master_seed, realization_index);
        let matrix = match &self.spec.model {
            Model::Qrem { b } => qrem_matrix(self.spec.l, *b, &mut r),
            Model::Rfhm { j, d, h, boundary } => self.rfhm_matrix(*j, *d, *h, *boundary, &mut r),
            Model::GenericGaussian { means, variances } => generic_matrix(means, variances, &mut r),
        };
        HamiltonianSample {
            matrix,
            basis: self.basis.clone(),
            realization_index,
            seed_used: seed,
        }
    }

    fn rfhm_matrix(&self, j: f64, d: f64, h: f64, boundary: Boundary, r: &mut rand_chacha::ChaCha8Rng) -> Matrix {
        let l = self.spec.l;
        let fields: Vec<f64> = (0..l).map(|_| h * rng::normal(r)).collect();
        let n = self.basis.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &c) in self.basis.labels().iter().enumerate() {
            let mut e = 0.0;
            for (k1, k2) in bonds(l, boundary) {
                e += d * spin_z(c, l, k1) * spin_z(c, l, k2);
            }
            for (k, hk) in fields.iter().enumerate() {
                e -= hk * spin_z(c, l, k);
            }
            m[(i, i)] = e;
        }
        for &(a, b) in &self.hops {
            m[(a, b)] += 0.5 * j;
            m[(b, a)] += 0.5 * j;
        }
        m
    }
}

fn bonds(l: usize, boundary: Boundary) -> impl Iterator<Item = (usize, usize)> {
    let count = match boundary {
        Boundary::Periodic => l,
        Boundary::Open => l - 1,
    };
    (0..count).map(move |k| (k, (k + 1) % l))
}

fn rfhm_hops(basis: &BasisMap, boundary: Boundary) -> Vec<(usize, usize)> {
    let l = basis.sites();
    let mut hops = Vec::new();
    for (i, &c) in basis.labels().iter().enumerate() {
        for (k1, k2) in bonds(l, boundary) {
            if spin_up(c, l, k1) == spin_up(c, l, k2) {
                continue;
            }
            let flipped = c ^ (1 << (l - 1 - k1)) ^ (1 << (l - 1 - k2));
            let j = basis.index_of(flipped).expect("exchange stays in sector");
            if i < j {
                hops.push((i, j));
            }
        }
    }
    hops
}

fn qrem_matrix(l: usize, b: f64, r: &mut rand_chacha::ChaCha8Rng) -> Matrix {
    let n = 1usize << l;
    let mut m = Matrix::zeros(n, n);
    let diag_sd = math::sqrt(l as f64 / 2.0);
    for mu in 0..n {
        m[(mu, mu)] = diag_sd * rng::normal(r);
    }
    let sds: Vec<f64> = (0..l)
        .map(|k| math::sqrt(qrem_variance_at_distance((1u64 << k) as f64, b)))
        .collect();
    for mu in 0..n {
        for (k, &sd) in sds.iter().enumerate() {
            let nu = mu ^ (1 << k);
            if nu > mu {
                let x = sd * rng::normal(r);
                m[(mu, nu)] = x;
                m[(nu, mu)] = x;
            }
        }
    }
    m
}

fn generic_matrix(means: &Matrix, variances: &Matrix, r: &mut rand_chacha::ChaCha8Rng) -> Matrix {
    let n = means.rows();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = rng::normal(r);
            let x = means[(i, j)] + math::sqrt(variances[(i, j)]) * z;
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

fn expect_model(spec: &EnsembleSpec, name: &'static str) -> Result<()> {
    if spec.model.name() != name {
        return Err(Error::ModelMismatch {
            expected: name,
            found: spec.model.name(),
        });
    }
    Ok(())
}

pub fn sample_qrem(spec: &EnsembleSpec, realization_index: u64) -> Result<HamiltonianSample> {
    expect_model(spec, "QREM")?;
    Ok(Sampler::new(spec).sample(realization_index))
}

pub fn sample_rfhm(spec: &EnsembleSpec, realization_index: u64) -> Result<HamiltonianSample> {
    expect_model(spec, "RFHM")?;
    Ok(Sampler::new(spec).sample(realization_index))
}

pub fn sample_generic(spec: &EnsembleSpec, realization_index: u64) -> Result<HamiltonianSample> {
    expect_model(spec, "GenericGaussian")?;
    Ok(Sampler::new(spec).sample(realization_index))
}
