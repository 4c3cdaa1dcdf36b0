//! Curve binning, collapse scoring, finite-size scaling fits and
//! distribution comparisons.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Log,
    Linear,
}

/// `bins + 1` edges spanning `[lo, hi]`.
pub fn edges(lo: f64, hi: f64, bins: usize, scale: Scale) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(invalid("bins", "must be positive"));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid("range", "needs finite lo < hi"));
    }
    if scale == Scale::Log && !(lo > 0.0) {
        return Err(invalid("range", "log bins need a positive lower end"));
    }
    let mut e: Vec<f64> = (0..=bins)
        .map(|k| {
            let t = k as f64 / bins as f64;
            match scale {
                Scale::Linear => lo + t * (hi - lo),
                Scale::Log => math::exp(math::ln(lo) + t * (math::ln(hi) - math::ln(lo))),
            }
        })
        .collect();
    e[0] = lo;
    e[bins] = hi;
    Ok(e)
}

/// Bin index of `x`, the last bin being closed on the right.
fn locate(edges: &[f64], x: f64) -> Option<usize> {
    let bins = edges.len() - 1;
    if !(x >= edges[0] && x <= edges[bins]) {
        return None;
    }
    let k = edges.partition_point(|&e| e <= x);
    Some(k.saturating_sub(1).min(bins - 1))
}

/// Sum of values sorted first, so the result does not depend on input order.
fn ordered_sum(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.iter().sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    #[default]
    Mean,
    Variance,
}

/// Binned curve. `x` is the mean abscissa of the points in each bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub stderr: Vec<f64>,
    pub count: Vec<usize>,
}

impl Curve {
    pub fn from_points(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        Self {
            label: label.into(),
            x,
            y,
            stderr: vec![0.0; n],
            count: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Divides `y` and its errors by the maximum of `y`.
    pub fn normalized(&self) -> Self {
        let m = self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut c = self.clone();
        if m > 0.0 && m.is_finite() {
            for v in c.y.iter_mut().chain(c.stderr.iter_mut()) {
                *v /= m;
            }
        }
        c
    }

    /// Linear interpolation in `x` (which must be ascending); `None` outside
    /// the support.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let n = self.len();
        if n == 0 || x < self.x[0] || x > self.x[n - 1] {
            return None;
        }
        if n == 1 {
            return Some(self.y[0]);
        }
        let k = self.x.partition_point(|&e| e <= x).clamp(1, n - 1);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let (y0, y1) = (self.y[k - 1], self.y[k]);
        if x1 == x0 {
            return Some(y0);
        }
        Some(y0 + (x - x0) / (x1 - x0) * (y1 - y0))
    }
}

/// Bins `(x, y)` samples and reports the per-bin mean or variance of `y`
/// with its standard error. Empty bins are dropped.
pub fn bin_curve(label: impl Into<String>, xs: &[f64], ys: &[f64], edges: &[f64], stat: Statistic) -> Result<Curve> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if edges.len() < 2 {
        return Err(invalid("edges", "need at least two"));
    }
    let bins = edges.len() - 1;
    let mut bx: Vec<Vec<f64>> = vec![Vec::new(); bins];
    let mut by: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for (&x, &y) in xs.iter().zip(ys) {
        if let Some(k) = locate(edges, x) {
            bx[k].push(x);
            by[k].push(y);
        }
    }
    let mut curve = Curve {
        label: label.into(),
        x: Vec::new(),
        y: Vec::new(),
        stderr: Vec::new(),
        count: Vec::new(),
    };
    for k in 0..bins {
        let n = by[k].len();
        if n == 0 {
            continue;
        }
        let nf = n as f64;
        let mx = ordered_sum(&mut bx[k]) / nf;
        let my = ordered_sum(&mut by[k]) / nf;
        let mut dev2: Vec<f64> = by[k].iter().map(|y| (y - my) * (y - my)).collect();
        let ss = ordered_sum(&mut dev2);
        let var = if n > 1 { ss / (nf - 1.0) } else { 0.0 };
        let (value, err) = match stat {
            Statistic::Mean => (my, math::sqrt(var / nf)),
            Statistic::Variance => {
                // Standard error of the sample variance from the fourth
                // central moment.
                let mut d4: Vec<f64> = by[k].iter().map(|y| math::powi(y - my, 4)).collect();
                let m4 = ordered_sum(&mut d4) / nf;
                let se = if n > 1 {
                    math::sqrt(((m4 - var * var * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0))
                } else {
                    0.0
                };
                (var, se)
            }
        };
        curve.x.push(mx);
        curve.y.push(value);
        curve.stderr.push(err);
        curve.count.push(n);
    }
    Ok(curve)
}

/// Common support `[lo, hi]` of all curves.
fn overlap(curves: &[Curve]) -> Result<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for c in curves {
        if c.is_empty() {
            return Err(Error::NoOverlap);
        }
        let (a, b) =
            c.x.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(hi > lo) {
        return Err(Error::NoOverlap);
    }
    Ok((lo, hi))
}

/// Collapse score of a family of curves. Every curve is interpolated at the
/// `bins + 1` edges of a binning of the common support; the master curve is
/// the pointwise mean, and the score is `sqrt(sum_c msd_c) / range(master)`
/// where `msd_c` is the mean squared deviation of curve `c` from the master.
/// Zero means perfect collapse.
pub fn collapse_quality(curves: &[Curve], bins: usize, scale: Scale) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            found: curves.len(),
        });
    }
    let (lo, hi) = overlap(curves)?;
    if scale == Scale::Log && !(lo > 0.0) {
        return Err(invalid("scale", "log binning needs a positive support"));
    }
    let points = edges(lo, hi, bins, scale)?;
    let values: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| {
            points
                .iter()
                .map(|&x| c.interpolate(x).ok_or(Error::NoOverlap))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let k = curves.len() as f64;
    let master: Vec<f64> = (0..points.len())
        .map(|i| {
            let mut col: Vec<f64> = values.iter().map(|v| v[i]).collect();
            ordered_sum(&mut col) / k
        })
        .collect();
    let range =
        master.iter().copied().fold(f64::NEG_INFINITY, f64::max) - master.iter().copied().fold(f64::INFINITY, f64::min);
    let mut per_curve: Vec<f64> = values
        .iter()
        .map(|v| {
            let mut sq: Vec<f64> = v.iter().zip(&master).map(|(y, m)| (y - m) * (y - m)).collect();
            ordered_sum(&mut sq) / sq.len() as f64
        })
        .collect();
    let dev = math::sqrt(ordered_sum(&mut per_curve));
    if range > 0.0 {
        Ok(dev / range)
    } else if dev == 0.0 {
        Ok(0.0)
    } else {
        Ok(f64::INFINITY)
    }
}

/// Curves `y(h)` for one system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSeries {
    pub size: usize,
    pub h: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FssOptions {
    /// Compare `log10 y` instead of `y`.
    pub log_y: bool,
    pub bins: usize,
    pub h_c_range: Option<(f64, f64)>,
    pub nu_range: (f64, f64),
    pub h_c_points: usize,
    pub nu_points: usize,
    pub refine_rounds: usize,
}

impl Default for FssOptions {
    fn default() -> Self {
        Self {
            log_y: false,
            bins: 12,
            h_c_range: None,
            nu_range: (0.2, 5.0),
            h_c_points: 41,
            nu_points: 25,
            refine_rounds: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FssFit {
    pub h_c: f64,
    pub nu: f64,
    pub quality: f64,
    /// The objective does not single out a critical point.
    pub degenerate: bool,
}

fn rescaled(series: &[SizeSeries], h_c: f64, nu: f64, log_y: bool) -> Vec<Curve> {
    series
        .iter()
        .map(|s| {
            let f = math::powf(s.size as f64, 1.0 / nu);
            let mut pts: Vec<(f64, f64)> =
                s.h.iter()
                    .zip(&s.y)
                    .map(|(&h, &y)| ((h - h_c) * f, if log_y { math::log10(y) } else { y }))
                    .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (x, y) = pts.into_iter().unzip();
            Curve::from_points("", x, y)
        })
        .collect()
}

fn objective(series: &[SizeSeries], h_c: f64, nu: f64, opts: &FssOptions) -> f64 {
    match collapse_quality(&rescaled(series, h_c, nu, opts.log_y), opts.bins, Scale::Linear) {
        Ok(q) if q.is_finite() => q,
        _ => f64::INFINITY,
    }
}

fn golden<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (math::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Finds `(h_c, nu)` that best collapse `y` plotted against
/// `(h - h_c) L^(1/nu)`: a coarse grid search followed by alternating
/// golden-section refinement.
pub fn fss_fit(series: &[SizeSeries], opts: &FssOptions) -> Result<FssFit> {
    if series.len() < 3 {
        return Err(Error::TooFew {
            needed: 3,
            found: series.len(),
        });
    }
    for s in series {
        if s.h.len() != s.y.len() {
            return Err(Error::DimensionMismatch {
                expected: s.h.len(),
                found: s.y.len(),
            });
        }
        if s.h.len() < 8 {
            return Err(Error::TooFew {
                needed: 8,
                found: s.h.len(),
            });
        }
        if opts.log_y && s.y.iter().any(|&y| !(y > 0.0)) {
            return Err(invalid("y", "log scaling needs positive values"));
        }
    }
    let all_h = series.iter().flat_map(|s| s.h.iter().copied());
    let (hmin, hmax) = all_h.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), h| (a.min(h), b.max(h)));
    let (h_lo, h_hi) = opts.h_c_range.unwrap_or((hmin, hmax));
    let (nu_lo, nu_hi) = opts.nu_range;
    if !(h_hi > h_lo) || !(nu_hi > nu_lo && nu_lo > 0.0) {
        return Err(invalid("range", "empty search range"));
    }
    let ys = series.iter().flat_map(|s| s.y.iter().copied());
    let (ymin, ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let flat_data = !(ymax > ymin);

    let hc_at = |k: usize| h_lo + (h_hi - h_lo) * k as f64 / (opts.h_c_points - 1).max(1) as f64;
    let nu_at = |k: usize| {
        let t = k as f64 / (opts.nu_points - 1).max(1) as f64;
        math::exp(math::ln(nu_lo) + t * (math::ln(nu_hi) - math::ln(nu_lo)))
    };
    let mut best = (f64::INFINITY, 0usize, 0usize);
    let mut table = vec![f64::INFINITY; opts.h_c_points * opts.nu_points];
    for i in 0..opts.h_c_points {
        for j in 0..opts.nu_points {
            let q = objective(series, hc_at(i), nu_at(j), opts);
            table[i * opts.nu_points + j] = q;
            if q < best.0 {
                best = (q, i, j);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::NoOverlap);
    }
    let (mut q, bi, bj) = best;
    let mut h_c = hc_at(bi);
    let mut nu = nu_at(bj);
    let dh = (h_hi - h_lo) / (opts.h_c_points - 1).max(1) as f64;
    let dl = (math::ln(nu_hi) - math::ln(nu_lo)) / (opts.nu_points - 1).max(1) as f64;
    for _ in 0..opts.refine_rounds {
        let (a, b) = ((h_c - dh).max(h_lo), (h_c + dh).min(h_hi));
        let (h, fh) = golden(|x| objective(series, x, nu, opts), a, b, 30);
        if fh <= q {
            h_c = h;
            q = fh;
        }
        let (a, b) = (math::ln(nu) - dl, math::ln(nu) + dl);
        let (a, b) = (a.max(math::ln(nu_lo)), b.min(math::ln(nu_hi)));
        let (l, fl) = golden(|x| objective(series, h_c, math::exp(x), opts), a, b, 30);
        if fl <= q {
            nu = math::exp(l);
            q = fl;
        }
    }
    // A critical point is singled out only if moving h_c along the grid at
    // the best exponent changes the score.
    let column: Vec<f64> = (0..opts.h_c_points)
        .map(|i| table[i * opts.nu_points + bj])
        .filter(|q| q.is_finite())
        .collect();
    let spread =
        column.iter().copied().fold(f64::NEG_INFINITY, f64::max) - column.iter().copied().fold(f64::INFINITY, f64::min);
    let degenerate = flat_data || spread <= 1e-9 || bj + 1 == opts.nu_points;
    Ok(FssFit {
        h_c,
        nu,
        quality: q,
        degenerate,
    })
}

/// Largest distance between the empirical distribution functions.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max(math::abs(i as f64 / na - j as f64 / nb));
    }
    Ok(d)
}

/// Normalized histograms of several samples on shared bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramTable {
    pub edges: Vec<f64>,
    pub labels: Vec<String>,
    /// Densities per label; each integrates to one.
    pub density: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
    /// `(i, j, D)` for every pair of labels.
    pub ks: Vec<(usize, usize, f64)>,
}

pub fn histogram(groups: &[(String, Vec<f64>)], bins: usize) -> Result<HistogramTable> {
    if groups.len() < 2 {
        return Err(Error::TooFew {
            needed: 2,
            found: groups.len(),
        });
    }
    if groups.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::EmptyInput);
    }
    let all = groups.iter().flat_map(|(_, v)| v.iter().copied());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let e = edges(lo, hi, bins, Scale::Linear)?;
    let width = (hi - lo) / bins as f64;
    let mut density = Vec::with_capacity(groups.len());
    for (_, v) in groups {
        let mut h = vec![0.0; bins];
        for &x in v {
            if let Some(k) = locate(&e, x) {
                h[k] += 1.0;
            }
        }
        let n = v.len() as f64;
        for x in h.iter_mut() {
            *x /= n * width;
        }
        density.push(h);
    }
    let mut ks = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            ks.push((i, j, ks_statistic(&groups[i].1, &groups[j].1)?));
        }
    }
    Ok(HistogramTable {
        edges: e,
        labels: groups.iter().map(|(l, _)| l.clone()).collect(),
        density,
        counts: groups.iter().map(|(_, v)| v.len()).collect(),
        ks,
    })
}
