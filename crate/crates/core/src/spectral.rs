//! Diagonalization, eigenstate windows and the spectral inputs of the
//! complexity parameter.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Matrix, SymmetricEigen, Tridiagonal};
use crate::math;
use crate::models::HamiltonianSample;

/// Largest dimension handled by the dense solver.
pub const DENSE_LIMIT: usize = 4096;

/// Tolerance on `| ||psi|| - 1 |`.
pub const NORM_TOL: f64 = 1e-8;

fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(invalid("N", "exceeds the dense diagonalization limit"));
    }
    Ok(())
}

fn tag(err: Error, realization: u64) -> Error {
    match err {
        Error::NoConvergence { .. } => Error::NoConvergence {
            realization: Some(realization),
        },
        e => e,
    }
}

/// All eigenpairs of a sample, ascending.
pub fn diagonalize(sample: &HamiltonianSample) -> Result<SymmetricEigen> {
    check_dense(sample.matrix.rows())?;
    Tridiagonal::new(&sample.matrix)
        .and_then(|t| t.decompose())
        .map_err(|e| tag(e, sample.realization_index))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSize {
    Count(usize),
    /// Fraction of the spectrum; at least two states.
    Fraction(f64),
}

impl WindowSize {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let count = match self {
            WindowSize::Count(c) => c,
            WindowSize::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(invalid("fraction", "must lie in (0, 1]"));
                }
                (math::round(f * n as f64) as usize).max(2)
            }
        };
        if count < 2 || count > n {
            return Err(Error::InvalidWindow {
                requested: count,
                available: n,
            });
        }
        Ok(count)
    }
}

/// Indices of the `count` eigenvalues nearest to `target`, ties going to the
/// lower index. The result is ordered by distance, nearest first.
pub fn nearest_indices(values: &[f64], target: f64, count: usize) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if count < 2 || count > values.len() {
        return Err(Error::InvalidWindow {
            requested: count,
            available: values.len(),
        });
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let da = math::abs(values[a] - target);
        let db = math::abs(values[b] - target);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    idx.truncate(count);
    Ok(idx)
}

/// Eigenpairs of one realization near a target energy.
#[derive(Debug, Clone)]
pub struct EigenWindow {
    pub target_e: f64,
    pub realization_index: u64,
    /// Positions in the full ascending spectrum, ascending.
    pub indices: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    /// `N x N_f`, unit columns.
    pub eigenvectors: Matrix,
    /// Column of the state nearest to the target.
    pub reference: usize,
    pub delta_e: f64,
    /// Per-state `sum |psi|^4`.
    pub ipr_std_states: Vec<f64>,
    /// Window average of `sum |psi|^4`.
    pub ipr_std: f64,
    /// Window average of `sum |psi|^4 / N`.
    pub ipr_paper: f64,
}

impl EigenWindow {
    pub fn n_f(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.rows()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j)
    }

    fn build(
        target_e: f64,
        realization_index: u64,
        order: Vec<usize>,
        values: &[f64],
        vectors: impl Fn(&[usize]) -> Result<Matrix>,
    ) -> Result<Self> {
        let nearest = order[0];
        let mut indices = order;
        indices.sort_unstable();
        let reference = indices.iter().position(|&i| i == nearest).unwrap_or(0);
        let eigenvalues: Vec<f64> = indices.iter().map(|&i| values[i]).collect();
        let n_f = eigenvalues.len();
        let delta_e = (eigenvalues[n_f - 1] - eigenvalues[0]) / (n_f - 1) as f64;
        if !(delta_e > 0.0) {
            return Err(invalid("window", "eigenvalues in the window are degenerate"));
        }
        let eigenvectors = vectors(&indices)?;
        let n = eigenvectors.rows();
        let mut ipr_std_states = Vec::with_capacity(n_f);
        for j in 0..n_f {
            ipr_std_states.push(ipr(&eigenvectors.column(j))?.1);
        }
        let ipr_std = math::mean(&ipr_std_states);
        Ok(Self {
            target_e,
            realization_index,
            indices,
            eigenvalues,
            eigenvectors,
            reference,
            delta_e,
            ipr_std_states,
            ipr_std,
            ipr_paper: ipr_std / n as f64,
        })
    }
}

/// Window from a full decomposition.
pub fn select_window(
    eigs: &SymmetricEigen,
    target_e: f64,
    size: WindowSize,
    realization_index: u64,
) -> Result<EigenWindow> {
    let n = eigs.values.len();
    if n == 0 {
        return Err(Error::EmptySpectrum);
    }
    let count = size.resolve(n)?;
    let order = nearest_indices(&eigs.values, target_e, count)?;
    EigenWindow::build(target_e, realization_index, order, &eigs.values, |idx| {
        let mut m = Matrix::zeros(eigs.vectors.rows(), idx.len());
        for (c, &i) in idx.iter().enumerate() {
            for r in 0..m.rows() {
                m[(r, c)] = eigs.vectors[(r, i)];
            }
        }
        Ok(m)
    })
}

/// Window computed directly: all eigenvalues, then eigenvectors only for the
/// selected states.
pub fn diagonalize_window(sample: &HamiltonianSample, target_e: f64, size: WindowSize) -> Result<EigenWindow> {
    let n = sample.matrix.rows();
    check_dense(n)?;
    if n == 0 {
        return Err(Error::EmptySpectrum);
    }
    let r = sample.realization_index;
    let count = size.resolve(n)?;
    let tri = Tridiagonal::new(&sample.matrix).map_err(|e| tag(e, r))?;
    let values = tri.eigenvalues().map_err(|e| tag(e, r))?;
    let order = nearest_indices(&values, target_e, count)?;
    EigenWindow::build(target_e, r, order, &values, |idx| {
        let picked: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        tri.eigenvectors_for(&picked).map_err(|e| tag(e, r))
    })
}

/// Windows around several target energies from one tridiagonalization.
/// Eigenvectors are computed once for the union of the selected states.
pub fn diagonalize_windows(sample: &HamiltonianSample, targets: &[f64], size: WindowSize) -> Result<Vec<EigenWindow>> {
    let n = sample.matrix.rows();
    check_dense(n)?;
    if n == 0 {
        return Err(Error::EmptySpectrum);
    }
    let r = sample.realization_index;
    let count = size.resolve(n)?;
    let tri = Tridiagonal::new(&sample.matrix).map_err(|e| tag(e, r))?;
    let values = tri.eigenvalues().map_err(|e| tag(e, r))?;
    let orders = targets
        .iter()
        .map(|&e| nearest_indices(&values, e, count))
        .collect::<Result<Vec<_>>>()?;
    let mut union: Vec<usize> = orders.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    let picked: Vec<f64> = union.iter().map(|&i| values[i]).collect();
    let all = tri.eigenvectors_for(&picked).map_err(|e| tag(e, r))?;
    targets
        .iter()
        .zip(orders)
        .map(|(&e, order)| {
            EigenWindow::build(e, r, order, &values, |idx| {
                let mut m = Matrix::zeros(n, idx.len());
                for (c, i) in idx.iter().enumerate() {
                    let src = union.binary_search(i).unwrap_or(0);
                    for row in 0..n {
                        m[(row, c)] = all[(row, src)];
                    }
                }
                Ok(m)
            })
        })
        .collect()
}

/// `(sum |psi|^4 / N, sum |psi|^4)` of a unit vector.
pub fn ipr(vector: &[f64]) -> Result<(f64, f64)> {
    if vector.is_empty() {
        return Err(Error::EmptyInput);
    }
    let norm = math::norm2(vector);
    if math::abs(norm - 1.0) > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    let s: f64 = vector.iter().map(|x| x * x * x * x).sum();
    Ok((s / vector.len() as f64, s))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaEstimator {
    /// `(sum_mu |U^r_mu(e_0)| |U^s_mu(e_n)|)^2` over realization pairs.
    #[default]
    AbsOverlap,
    /// `(sum_mu U^r_mu(e_0) U^s_mu(e_n))^2` over realization pairs.
    RawOverlap,
    /// `N <I_2> Delta_e` with unit proportionality constant.
    Ipr,
}

impl OmegaEstimator {
    pub fn name(self) -> &'static str {
        match self {
            OmegaEstimator::AbsOverlap => "abs_overlap",
            OmegaEstimator::RawOverlap => "raw_overlap",
            OmegaEstimator::Ipr => "ipr",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaNormalization {
    /// Average over the `N_f - 1` partner states.
    #[default]
    Mean,
    /// Sum over the `N_f - 1` partner states.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaE {
    pub estimator: OmegaEstimator,
    /// Clamped, averaged over partner states.
    pub mean: f64,
    /// Clamped, summed over partner states.
    pub sum: f64,
    /// Unclamped mean.
    pub raw_mean: f64,
}

impl OmegaE {
    pub fn value(&self, norm: OmegaNormalization) -> f64 {
        match norm {
            OmegaNormalization::Mean => self.mean,
            OmegaNormalization::Sum => self.sum,
        }
    }
}

/// Correlation volume from windows of at least two realizations sharing the
/// same dimension and window size.
pub fn omega_e(windows: &[EigenWindow], estimator: OmegaEstimator) -> Result<OmegaE> {
    if windows.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            found: windows.len(),
        });
    }
    let n = windows[0].dim();
    let n_f = windows[0].n_f();
    for w in windows {
        if w.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: w.dim(),
            });
        }
        if w.n_f() != n_f {
            return Err(Error::DimensionMismatch {
                expected: n_f,
                found: w.n_f(),
            });
        }
    }
    let partners = (n_f - 1) as f64;
    let raw_mean = match estimator {
        OmegaEstimator::AbsOverlap => pair_overlap(windows, true),
        OmegaEstimator::RawOverlap => pair_overlap(windows, false),
        OmegaEstimator::Ipr => {
            let i2 = math::mean(&windows.iter().map(|w| w.ipr_paper).collect::<Vec<_>>());
            let de = math::mean(&windows.iter().map(|w| w.delta_e).collect::<Vec<_>>());
            n as f64 * i2 * de
        }
    };
    let clamp = |x: f64| x.clamp(1.0 / n as f64, 1.0);
    let raw_sum = match estimator {
        OmegaEstimator::Ipr => raw_mean,
        _ => raw_mean * partners,
    };
    Ok(OmegaE {
        estimator,
        mean: clamp(raw_mean),
        sum: clamp(raw_sum),
        raw_mean,
    })
}

fn pair_overlap(windows: &[EigenWindow], absolute: bool) -> f64 {
    let n_f = windows[0].n_f();
    let prep = |x: f64| if absolute { math::abs(x) } else { x };
    let refs: Vec<Vec<f64>> = windows
        .iter()
        .map(|w| w.vector(w.reference).into_iter().map(prep).collect())
        .collect();
    // Partner vectors of each realization, stored row-wise for contiguous dots.
    let partners: Vec<Vec<Vec<f64>>> = windows
        .iter()
        .map(|w| {
            (0..n_f)
                .filter(|&j| j != w.reference)
                .map(|j| w.vector(j).into_iter().map(prep).collect())
                .collect()
        })
        .collect();
    let mut total = 0.0;
    let mut count = 0usize;
    for (r, u0) in refs.iter().enumerate() {
        for (s, ps) in partners.iter().enumerate() {
            if r == s {
                continue;
            }
            for un in ps {
                let o = math::dot(u0, un);
                total += o * o;
                count += 1;
            }
        }
    }
    total / count as f64
}
