//! Sweep driver: sample, diagonalize, select windows, measure, and emit one
//! record per selected state.

use std::collections::BTreeSet;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;

use qent_core::complexity::{self, ComplexityPoint, PointInputs, QREM_PREFACTOR};
use qent_core::entangle;
use qent_core::math;
use qent_core::models::{BasisMap, Model, Sampler};
use qent_core::spectral::{self, EigenWindow};

use crate::config::{Config, Plan, Point};
use crate::error::{Error, Result};
use crate::records::{self, CellDone, ExperimentRecord, Header, Line, Writer};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub cells_run: usize,
    pub cells_skipped: usize,
    pub records: usize,
    pub failed_realizations: usize,
}

/// Output of one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub records: Vec<ExperimentRecord>,
    pub done: CellDone,
}

/// Runs the sweep into `out`. With `resume`, cells already marked complete
/// in an existing file from the same configuration are kept and skipped.
pub fn run(cfg: &Config, out: &Path, resume: bool) -> Result<RunSummary> {
    let plan = cfg.plan()?;
    let header = Header::new(cfg);
    let mut done = BTreeSet::new();
    let mut writer = if resume && out.exists() {
        let existing = records::read(out)?;
        match &existing.header {
            Some(h) if h.config == *cfg => {}
            Some(_) => {
                return Err(Error::config(
                    "existing record file was written with a different config",
                ))
            }
            None => {}
        }
        done.extend(existing.done.iter().map(|d| d.cell));
        if existing.header.is_none() {
            Writer::create(out, &header)?
        } else {
            Writer::resume(out, existing.complete_len)?
        }
    } else {
        Writer::create(out, &header)?
    };
    let mut summary = RunSummary::default();
    for (p, point) in plan.points.iter().enumerate() {
        let cells: Vec<usize> = (0..plan.energies.len()).map(|k| plan.cell(p, k)).collect();
        if cells.iter().all(|c| done.contains(c)) {
            summary.cells_skipped += cells.len();
            continue;
        }
        info!(
            "point {}/{}: {:?} L={} ({} realizations)",
            p + 1,
            plan.points.len(),
            point.spec.model,
            point.spec.l,
            point.realizations
        );
        for result in run_point(cfg, &plan, p)? {
            if done.contains(&result.done.cell) {
                summary.cells_skipped += 1;
                continue;
            }
            for r in &result.records {
                writer.write(&Line::Record(r.clone()))?;
            }
            writer.write(&Line::CellDone(result.done))?;
            summary.cells_run += 1;
            summary.records += result.records.len();
            summary.failed_realizations += result.done.skipped;
        }
        writer.flush()?;
    }
    writer.flush()?;
    Ok(summary)
}

/// Realization index with its windows and seed, or `None` if it failed.
type Outcome = (u64, Option<(Vec<EigenWindow>, u64)>);

/// Computes every cell of sweep point `p`.
pub fn run_point(cfg: &Config, plan: &Plan, p: usize) -> Result<Vec<CellResult>> {
    let point = &plan.points[p];
    let sampler = Sampler::new(&point.spec);
    let energies = &plan.energies;
    let window = cfg.window;
    // A bad window would fail every realization; report it once instead.
    window.resolve(point.spec.dim())?;
    let outcomes: Vec<Outcome> = (0..point.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let s = sampler.sample(r);
            match spectral::diagonalize_windows(&s, energies, window) {
                Ok(ws) => (r, Some((ws, s.seed_used))),
                Err(e) => {
                    warn!(
                        "realization {r} of {:?} L={} skipped: {e}",
                        point.spec.model, point.spec.l
                    );
                    (r, None)
                }
            }
        })
        .collect();
    let failed = outcomes.iter().filter(|o| o.1.is_none()).count();
    let ok: Vec<(u64, &Vec<EigenWindow>, u64)> = outcomes
        .iter()
        .filter_map(|(r, o)| o.as_ref().map(|(ws, seed)| (*r, ws, *seed)))
        .collect();
    let mut out = Vec::with_capacity(energies.len());
    for (k, &e) in energies.iter().enumerate() {
        let cell = plan.cell(p, k);
        let windows: Vec<EigenWindow> = ok.iter().map(|(_, ws, _)| ws[k].clone()).collect();
        let complexity = match cell_complexity(cfg, plan, point, &windows) {
            Ok(c) => c,
            Err(err) => {
                warn!("cell {cell} (E = {e}) has no complexity point: {err}");
                out.push(CellResult {
                    records: Vec::new(),
                    done: CellDone {
                        cell,
                        records: 0,
                        realizations: ok.len(),
                        skipped: point.realizations,
                    },
                });
                continue;
            }
        };
        let mut records = Vec::new();
        for (i, w) in windows.iter().enumerate() {
            let (r, _, seed) = ok[i];
            records.extend(state_records(
                cfg,
                point,
                sampler.basis(),
                cell,
                r,
                seed,
                w,
                &complexity,
            )?);
        }
        out.push(CellResult {
            done: CellDone {
                cell,
                records: records.len(),
                realizations: ok.len(),
                skipped: failed,
            },
            records,
        });
    }
    Ok(out)
}

/// `Y - Y0` and its prefactor label for one sweep point.
pub fn complexity_y(cfg: &Config, point: &Point) -> Result<(f64, String)> {
    let spec = &point.spec;
    match spec.model {
        Model::Qrem { b } => Ok((complexity::y_qrem(b, spec.l, spec.gamma)?, QREM_PREFACTOR.to_string())),
        Model::Rfhm { d, h, .. } => {
            let d0 = cfg.d0.unwrap_or(d);
            Ok((complexity::y_rfhm(h, d, cfg.h0, d0, spec.gamma)?, "1/gamma".to_string()))
        }
        Model::GenericGaussian { .. } => Err(Error::config("sweeps support the QREM and RFHM only")),
    }
}

fn cell_complexity(
    cfg: &Config,
    plan: &Plan,
    point: &Point,
    windows: &[EigenWindow],
) -> Result<(ComplexityPoint, f64, String)> {
    let omega = spectral::omega_e(windows, cfg.omega_estimator)?;
    let delta_e = math::mean(&windows.iter().map(|w| w.delta_e).collect::<Vec<_>>());
    let ipr_paper = math::mean(&windows.iter().map(|w| w.ipr_paper).collect::<Vec<_>>());
    let (y, prefactor) = complexity_y(cfg, point)?;
    let cp = complexity::lambda_psi(
        PointInputs {
            y_minus_y0: y,
            delta_e,
            omega_e: omega.value(cfg.omega_normalization),
            ipr_paper,
            n: point.spec.dim(),
        },
        plan.recipe,
        Some(plan.kind.name()),
    )?;
    Ok((cp, y, prefactor))
}

#[allow(clippy::too_many_arguments)]
fn state_records(
    cfg: &Config,
    point: &Point,
    basis: &BasisMap,
    cell: usize,
    realization: u64,
    seed: u64,
    w: &EigenWindow,
    (cp, y, prefactor): &(ComplexityPoint, f64, String),
) -> Result<Vec<ExperimentRecord>> {
    let spec = &point.spec;
    let (n_a, n_b) = entangle::bipartition(spec.l);
    let base = cfg.log_base;
    let mut out = Vec::with_capacity(w.n_f());
    for j in 0..w.n_f() {
        let c = entangle::state_matrix(&w.vector(j), basis, n_a, n_b)?;
        let lambdas = entangle::schmidt_spectrum(&c)?.lambdas;
        let m = entangle::measures(&lambdas, base, &[2.0]);
        out.push(ExperimentRecord {
            cell,
            model: spec.model.clone(),
            l: spec.l,
            n: spec.dim(),
            gamma: spec.gamma,
            e_target: w.target_e,
            realization_index: realization,
            state_index: w.indices[j],
            energy: w.eigenvalues[j],
            r1: base.from_nats(m.r1),
            r0: base.from_nats(m.r0),
            q: base.from_nats(base.from_nats(m.q)),
            renyi2: m.renyi_reported(2.0).unwrap_or(f64::NAN),
            log_base: base,
            delta_e: cp.delta_e,
            ipr_paper: cp.ipr_paper,
            ipr_std: w.ipr_std_states[j],
            omega_e: cp.omega_e,
            estimator_name: cfg.omega_estimator.name().to_string(),
            omega_normalization: cfg.omega_normalization,
            y_minus_y0: *y,
            y_prefactor: prefactor.clone(),
            lambda: cp.lambda,
            n_lambda: cp.n_lambda,
            lambda_e: cp.lambda_e,
            chi0_recipe: cp.chi0_recipe,
            recipe_mismatch: cp.recipe_mismatch,
            seed_used: seed,
        });
    }
    Ok(out)
}
