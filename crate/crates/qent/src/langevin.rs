//! Parallel Langevin ensembles and their moment-curve files.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qent_core::dynamics::{self, ClosedFormFit, LangevinConfig, MomentPoint, OdeResidual, Trajectory};

use crate::error::{Error, Result};

pub const LANGEVIN_VERSION: u32 = 1;

/// Trajectories in id order; each has its own random stream, so the result
/// does not depend on scheduling.
pub fn run_trajectories(cfg: &LangevinConfig) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let out = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|id| dynamics::run_trajectory(cfg, id))
        .collect::<qent_core::Result<Vec<_>>>()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinRun {
    pub moments: Vec<MomentPoint>,
    pub fit: Option<ClosedFormFit>,
    pub mean_residuals: Vec<OdeResidual>,
    pub var_residuals: Vec<OdeResidual>,
}

pub fn run(cfg: &LangevinConfig) -> Result<LangevinRun> {
    let trajs = run_trajectories(cfg)?;
    let moments = dynamics::moment_curves(cfg, &trajs)?;
    let nl: Vec<f64> = moments.iter().map(|m| m.n_lambda).collect();
    let r1: Vec<f64> = moments.iter().map(|m| m.stats.mean_r1).collect();
    let fit = dynamics::fit_closed_form(&nl, &r1).ok();
    let (mean_residuals, var_residuals) = if cfg.lambda_grid.len() >= 2 {
        dynamics::ode_residuals(cfg, &trajs)?
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(LangevinRun {
        moments,
        fit,
        mean_residuals,
        var_residuals,
    })
}

pub const COLUMNS: [&str; 14] = [
    "Lambda",
    "N_Lambda",
    "mean_R1",
    "var_R1",
    "mean_R0",
    "Q",
    "cov_R0_R1",
    "mean_R1_sq",
    "stderr_mean_R1",
    "stderr_var_R1",
    "stderr_mean_R0",
    "stderr_Q",
    "stderr_cov_R0_R1",
    "count",
];

/// Moment curves as CSV behind a `# qent-langevin v1` line.
pub fn write_moments(path: &Path, moments: &[MomentPoint]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "# qent-langevin v{LANGEVIN_VERSION}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(COLUMNS).map_err(csv_err)?;
    for m in moments {
        let s = &m.stats;
        let row = [
            m.lambda,
            m.n_lambda,
            s.mean_r1,
            s.var_r1,
            s.mean_r0,
            s.mean_q,
            s.cov_r0_r1,
            s.mean_r1_sq,
            m.stderr_mean_r1,
            m.stderr_var_r1,
            m.stderr_mean_r0,
            m.stderr_q,
            m.stderr_cov,
            s.count as f64,
        ];
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qent_core::dynamics::Init;

    fn small() -> LangevinConfig {
        let mut c = LangevinConfig::new(2, 3, Init::Uniform, dynamics::log_grid(1e-3, 0.5, 5), 6, 3);
        c.step_fraction = Some(1e-2);
        c
    }

    #[test]
    fn parallel_matches_serial() {
        let c = small();
        let (serial, curves) = dynamics::evolve(&c).unwrap();
        assert_eq!(run_trajectories(&c).unwrap(), serial);
        assert_eq!(run(&c).unwrap().moments, curves);
    }

    #[test]
    fn csv_has_named_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.csv");
        let r = run(&small()).unwrap();
        write_moments(&path, &r.moments).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# qent-langevin v1"));
        assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
        assert_eq!(lines.count(), r.moments.len());
    }
}
