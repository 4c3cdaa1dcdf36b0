//! Record folds: binned curves, collapse scoring, scaling fits and
//! fixed-`N Lambda` histograms.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qent_core::analysis::{self, Curve, FssFit, FssOptions, HistogramTable, Scale, SizeSeries, Statistic};
use qent_core::math;

use crate::config::{AggregateOptions, Axis, Measure};
use crate::error::{Error, Result};
use crate::records::ExperimentRecord;

pub const CURVES_VERSION: u32 = 1;
const CURVES_MAGIC: &str = "# qent-curves v";

fn value(r: &ExperimentRecord, m: Measure) -> f64 {
    match m {
        Measure::MeanR1 | Measure::VarR1 => r.r1,
        Measure::MeanR0 => r.r0,
        Measure::MeanQ => r.q,
        Measure::MeanRenyi2 => r.renyi2,
    }
}

fn abscissa(r: &ExperimentRecord, axis: Axis) -> f64 {
    match axis {
        Axis::NLambda => r.n_lambda,
        Axis::Param => r.param(),
    }
}

/// Bins records into one curve per label on shared log-spaced edges.
/// Records at non-positive abscissa and empty bins are dropped.
pub fn aggregate(records: &[ExperimentRecord], opts: &AggregateOptions) -> Result<Vec<Curve>> {
    if opts.bins == 0 {
        return Err(Error::config("`bins` must be positive"));
    }
    let mut groups: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let x = abscissa(r, opts.x);
        if !(x > 0.0) || !x.is_finite() {
            continue;
        }
        let g = groups.entry(r.label()).or_default();
        g.0.push(x);
        g.1.push(value(r, opts.measure));
    }
    if groups.is_empty() {
        return Err(qent_core::Error::EmptyInput.into());
    }
    let (lo, hi) = groups
        .values()
        .flat_map(|(x, _)| x.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (lo, hi, bins) = if hi > lo {
        (lo, hi, opts.bins)
    } else {
        (lo * (1.0 - 1e-9), hi * (1.0 + 1e-9), 1)
    };
    let edges = analysis::edges(lo, hi, bins, Scale::Log)?;
    let stat = match opts.measure {
        Measure::VarR1 => Statistic::Variance,
        _ => Statistic::Mean,
    };
    let mut curves = Vec::with_capacity(groups.len());
    for (label, (xs, ys)) in groups {
        let c = analysis::bin_curve(label, &xs, &ys, &edges, stat)?;
        if c.is_empty() {
            continue;
        }
        curves.push(if opts.normalize { c.normalized() } else { c });
    }
    Ok(curves)
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    label: String,
    x: f64,
    y: f64,
    stderr: f64,
    count: usize,
}

pub fn write_curves(path: &Path, curves: &[Curve]) -> Result<()> {
    let mut file = create(path)?;
    writeln!(file, "{CURVES_MAGIC}{CURVES_VERSION}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for c in curves {
        for k in 0..c.len() {
            w.serialize(CurveRow {
                label: c.label.clone(),
                x: c.x[k],
                y: c.y[k],
                stderr: c.stderr[k],
                count: c.count[k],
            })
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curves(path: &Path) -> Result<Vec<Curve>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text.lines().next().unwrap_or("");
    match first
        .strip_prefix(CURVES_MAGIC)
        .and_then(|v| v.trim().parse::<u32>().ok())
    {
        Some(CURVES_VERSION) => {}
        _ => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("expected `{CURVES_MAGIC}{CURVES_VERSION}` header"),
            })
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut curves: Vec<Curve> = Vec::new();
    for row in r.deserialize::<CurveRow>() {
        let row = row.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let c = match curves.iter_mut().position(|c| c.label == row.label) {
            Some(i) => &mut curves[i],
            None => {
                curves.push(Curve::from_points(row.label.clone(), Vec::new(), Vec::new()));
                curves.last_mut().expect("just pushed")
            }
        };
        c.x.push(row.x);
        c.y.push(row.y);
        c.stderr.push(row.stderr);
        c.count.push(row.count);
    }
    Ok(curves)
}

/// Quantity fitted by finite-size scaling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FssTarget {
    #[default]
    NLambda,
    /// `<R1>` divided by its maximum over each size.
    NormalizedR1,
}

/// One series per size: the target quantity against the swept parameter,
/// averaged over the records of each cell.
pub fn size_series(records: &[ExperimentRecord], target: FssTarget) -> Result<Vec<SizeSeries>> {
    let mut by_size: BTreeMap<usize, BTreeMap<u64, (f64, Vec<f64>)>> = BTreeMap::new();
    for r in records {
        let y = match target {
            FssTarget::NLambda => r.n_lambda,
            FssTarget::NormalizedR1 => r.r1,
        };
        by_size
            .entry(r.l)
            .or_default()
            .entry(r.param().to_bits())
            .or_insert_with(|| (r.param(), Vec::new()))
            .1
            .push(y);
    }
    if by_size.is_empty() {
        return Err(qent_core::Error::EmptyInput.into());
    }
    let mut out = Vec::new();
    for (size, cells) in by_size {
        let mut pts: Vec<(f64, f64)> = cells
            .into_values()
            .map(|(h, ys)| (h, math::mean(&sorted(ys))))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        if target == FssTarget::NormalizedR1 {
            let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max > 0.0 {
                y.iter_mut().for_each(|v| *v /= max);
            }
        }
        out.push(SizeSeries {
            size,
            h: pts.iter().map(|p| p.0).collect(),
            y,
        });
    }
    Ok(out)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

pub fn fss(records: &[ExperimentRecord], target: FssTarget, opts: &FssOptions) -> Result<FssFit> {
    let series = size_series(records, target)?;
    Ok(analysis::fss_fit(&series, opts)?)
}

/// Crossing of two series sampled on the same parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub size_a: usize,
    pub size_b: usize,
    /// Parameter values where the difference changes sign.
    pub at: Option<f64>,
    pub count: usize,
}

/// Sign changes of `y_a - y_b` for every pair of sizes, linearly
/// interpolated; `at` is the first.
pub fn crossings(series: &[SizeSeries]) -> Vec<Crossing> {
    let mut out = Vec::new();
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            let (a, b) = (&series[i], &series[j]);
            let mut diff = Vec::new();
            for (k, &h) in a.h.iter().enumerate() {
                if let Some(m) = b.h.iter().position(|&x| x == h) {
                    diff.push((h, a.y[k] - b.y[m]));
                }
            }
            let mut at = None;
            let mut count = 0;
            for w in diff.windows(2) {
                let ((h0, d0), (h1, d1)) = (w[0], w[1]);
                if d0 == 0.0 || d0.signum() != d1.signum() && d1 != 0.0 {
                    count += 1;
                    if at.is_none() {
                        at = Some(if d0 == 0.0 { h0 } else { h0 + (h1 - h0) * d0 / (d0 - d1) });
                    }
                }
            }
            out.push(Crossing {
                size_a: a.size,
                size_b: b.size,
                at,
                count,
            });
        }
    }
    out
}

/// Normalized `R1` histograms of every parameter combination with records
/// inside the `N Lambda` window.
pub fn hist(records: &[ExperimentRecord], window: (f64, f64), bins: usize) -> Result<HistogramTable> {
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(Error::config("`n_lambda_window` must be ordered"));
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.n_lambda >= lo && r.n_lambda <= hi) {
        let key = format!("{} {}={}", r.label(), param_name(r), r.param());
        groups.entry(key).or_default().push(r.r1);
    }
    if groups.is_empty() {
        return Err(Error::config(format!("no records with N Lambda in [{lo}, {hi}]")));
    }
    let groups: Vec<(String, Vec<f64>)> = groups.into_iter().map(|(k, v)| (k, sorted(v))).collect();
    Ok(analysis::histogram(&groups, bins)?)
}

fn param_name(r: &ExperimentRecord) -> &'static str {
    match r.model {
        qent_core::models::Model::Rfhm { .. } => "h",
        _ => "b",
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = create(path)?;
    serde_json::to_writer_pretty(&mut file, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        line: 0,
        source,
    })?;
    writeln!(file).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::tests::sample_record;
    use qent_core::models::Model;

    fn rec(l: usize, b: f64, e: f64, n_lambda: f64, r1: f64) -> ExperimentRecord {
        let mut r = sample_record(Model::Qrem { b });
        r.l = l;
        r.e_target = e;
        r.n_lambda = n_lambda;
        r.r1 = r1;
        r
    }

    #[test]
    fn single_bin_gives_one_point() {
        let rs = vec![rec(8, 1.0, 0.0, 5.0, 1.0), rec(8, 1.0, 0.0, 5.0, 2.0)];
        let c = aggregate(&rs, &AggregateOptions::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 1);
        assert!((c[0].y[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn identical_labels_give_identical_curves() {
        let mut rs = Vec::new();
        for (k, e) in [0.0, 3.0].iter().enumerate() {
            for i in 0..20 {
                let x = 0.1 * (1.3f64).powi(i);
                rs.push(rec(8, 1.0, *e, x, (i % 5) as f64 + k as f64 * 0.0));
            }
        }
        let c = aggregate(&rs, &AggregateOptions::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].x, c[1].x);
        assert_eq!(c[0].y, c[1].y);
    }

    #[test]
    fn aggregation_ignores_record_order() {
        let mut rs: Vec<ExperimentRecord> = (0..60)
            .map(|i| {
                rec(
                    8,
                    1.0,
                    (i % 2) as f64,
                    0.5 + (i % 13) as f64,
                    0.1 * ((i * 7) % 11) as f64,
                )
            })
            .collect();
        let a = aggregate(&rs, &AggregateOptions::default()).unwrap();
        rs.reverse();
        rs.swap(3, 40);
        let b = aggregate(&rs, &AggregateOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn curves_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let rs: Vec<ExperimentRecord> = (0..30)
            .map(|i| rec(8, 1.0, (i % 3) as f64, 1.0 + i as f64, 0.2 * i as f64))
            .collect();
        let curves = aggregate(&rs, &AggregateOptions::default()).unwrap();
        write_curves(&path, &curves).unwrap();
        assert_eq!(read_curves(&path).unwrap(), curves);
        fs::write(&path, "label,x\n").unwrap();
        assert!(read_curves(&path).is_err());
    }

    #[test]
    fn crossing_of_two_lines() {
        let h: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let a = SizeSeries {
            size: 8,
            h: h.clone(),
            y: h.iter().map(|x| x - 4.5).collect(),
        };
        let b = SizeSeries {
            size: 10,
            h: h.clone(),
            y: vec![0.0; 10],
        };
        let c = crossings(&[a, b]);
        assert_eq!(c[0].count, 1);
        assert!((c[0].at.unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn hist_groups_by_combination() {
        let mut rs: Vec<ExperimentRecord> = (0..50).map(|i| rec(8, 1.0, 0.0, 10.0, 1.0 + 0.01 * i as f64)).collect();
        rs.extend((0..50).map(|i| rec(8, 2.0, 3.0, 11.0, 1.0 + 0.01 * i as f64)));
        rs.push(rec(8, 9.0, 0.0, 100.0, 0.0));
        let t = hist(&rs, (5.0, 20.0), 10).unwrap();
        assert_eq!(t.labels.len(), 2);
        assert_eq!(t.ks[0].2, 0.0);
        assert!(hist(&rs, (1000.0, 2000.0), 10).is_err());
    }
}
