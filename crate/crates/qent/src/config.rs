//! JSON configuration shared by every subcommand.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qent_core::complexity::Chi0Recipe;
use qent_core::dynamics::LangevinConfig;
use qent_core::entangle::LogBase;
use qent_core::models::{build_spec, Boundary, EnsembleSpec, Model};
use qent_core::spectral::{OmegaEstimator, OmegaNormalization, WindowSize};

use crate::error::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

/// Largest `L` accepted without `allow_large`.
pub const DESK_MAX_L: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "QREM")]
    Qrem,
    #[serde(rename = "RFHM")]
    Rfhm,
}

impl ModelKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "QREM" | "qrem" => Some(ModelKind::Qrem),
            "RFHM" | "rfhm" => Some(ModelKind::Rfhm),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Qrem => "QREM",
            ModelKind::Rfhm => "RFHM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "version")]
    pub version: u32,
    #[serde(default)]
    pub model: Option<ModelKind>,
    #[serde(rename = "L", default)]
    pub l: Vec<usize>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(rename = "D", default)]
    pub d: Vec<f64>,
    #[serde(rename = "J", default = "unit")]
    pub j: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(rename = "E", default)]
    pub e: Vec<f64>,
    /// Defaults to 1/2 for the QREM and 1 for the RFHM.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Per-size defaults when absent.
    #[serde(default)]
    pub realizations: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_window")]
    pub window: WindowSize,
    #[serde(default)]
    pub log_base: LogBase,
    /// Defaults to `QREM_mean` or `RFHM_both` by model.
    #[serde(default)]
    pub chi0_recipe: Option<Chi0Recipe>,
    #[serde(default)]
    pub omega_estimator: OmegaEstimator,
    #[serde(default)]
    pub omega_normalization: OmegaNormalization,
    /// Reference field of the RFHM complexity parameter.
    #[serde(default = "default_h0")]
    pub h0: f64,
    /// Reference Ising coupling; defaults to each cell's `D`.
    #[serde(rename = "D0", default)]
    pub d0: Option<f64>,
    #[serde(default)]
    pub allow_large: bool,
    #[serde(default)]
    pub langevin: Option<LangevinConfig>,
    #[serde(default)]
    pub aggregate: AggregateOptions,
    #[serde(default)]
    pub hist: HistOptions,
}

fn version() -> u32 {
    CONFIG_VERSION
}

fn unit() -> f64 {
    1.0
}

fn default_window() -> WindowSize {
    WindowSize::Fraction(0.01)
}

fn default_h0() -> f64 {
    10.0
}

impl Default for Config {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    MeanR1,
    VarR1,
    MeanR0,
    MeanQ,
    MeanRenyi2,
}

impl Measure {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mean_R1" | "mean_r1" => Some(Measure::MeanR1),
            "var_R1" | "var_r1" => Some(Measure::VarR1),
            "mean_R0" | "mean_r0" => Some(Measure::MeanR0),
            "mean_Q" | "mean_q" => Some(Measure::MeanQ),
            "mean_renyi2" => Some(Measure::MeanRenyi2),
            _ => None,
        }
    }
}

/// Abscissa of aggregated curves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    NLambda,
    /// The swept model parameter (`b` or `h`).
    Param,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateOptions {
    #[serde(default)]
    pub measure: Measure,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub x: Axis,
}

fn default_bins() -> usize {
    40
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self {
            measure: Measure::default(),
            bins: default_bins(),
            normalize: false,
            x: Axis::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistOptions {
    #[serde(default)]
    pub n_lambda_window: Option<(f64, f64)>,
    #[serde(default = "default_hist_bins")]
    pub bins: usize,
}

fn default_hist_bins() -> usize {
    30
}

impl Default for HistOptions {
    fn default() -> Self {
        Self {
            n_lambda_window: None,
            bins: default_hist_bins(),
        }
    }
}

/// One `(L, parameters)` sweep point; all target energies share its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub spec: EnsembleSpec,
    pub realizations: usize,
}

/// Fully resolved sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub kind: ModelKind,
    pub points: Vec<Point>,
    pub energies: Vec<f64>,
    pub recipe: Chi0Recipe,
}

impl Plan {
    /// Cell id of energy `k` at point `p`.
    pub fn cell(&self, p: usize, k: usize) -> usize {
        p * self.energies.len() + k
    }

    pub fn cells(&self) -> usize {
        self.points.len() * self.energies.len()
    }
}

pub fn default_realizations(kind: ModelKind, l: usize) -> usize {
    match (kind, l) {
        (ModelKind::Qrem, _) => 200,
        (ModelKind::Rfhm, 0..=8) => 500,
        (ModelKind::Rfhm, 9..=10) => 300,
        (ModelKind::Rfhm, _) => 100,
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn gamma_for(&self, kind: ModelKind) -> f64 {
        self.gamma.unwrap_or(match kind {
            ModelKind::Qrem => 0.5,
            ModelKind::Rfhm => 1.0,
        })
    }

    pub fn recipe_for(&self, kind: ModelKind) -> Chi0Recipe {
        self.chi0_recipe.unwrap_or(match kind {
            ModelKind::Qrem => Chi0Recipe::QremMean,
            ModelKind::Rfhm => Chi0Recipe::RfhmBoth,
        })
    }

    /// Expands the sweep. Sizes vary slowest, then `D`, then `b` or `h`.
    pub fn plan(&self) -> Result<Plan> {
        let kind = self.model.ok_or_else(|| Error::config("`model` is required"))?;
        if self.l.is_empty() {
            return Err(Error::config("`L` must list at least one size"));
        }
        if let Some(&l) = self.l.iter().find(|&&l| l > DESK_MAX_L) {
            if !self.allow_large {
                return Err(Error::config(format!(
                    "L = {l} exceeds {DESK_MAX_L}; set `allow_large` to override"
                )));
            }
        }
        if self.realizations == Some(0) || self.realizations == Some(1) {
            return Err(Error::config("`realizations` must be at least 2"));
        }
        let energies = if self.e.is_empty() { vec![0.0] } else { self.e.clone() };
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::config("`E` must be finite"));
        }
        let gamma = self.gamma_for(kind);
        let mut models = Vec::new();
        match kind {
            ModelKind::Qrem => {
                if self.b.is_empty() {
                    return Err(Error::config("QREM sweep needs a `b` grid"));
                }
                for &b in &self.b {
                    models.push(Model::Qrem { b });
                }
            }
            ModelKind::Rfhm => {
                if self.h.is_empty() {
                    return Err(Error::config("RFHM sweep needs an `h` grid"));
                }
                let ds = if self.d.is_empty() { vec![1.0] } else { self.d.clone() };
                for &d in &ds {
                    for &h in &self.h {
                        models.push(Model::Rfhm {
                            j: self.j,
                            d,
                            h,
                            boundary: self.boundary,
                        });
                    }
                }
            }
        }
        let mut points = Vec::new();
        for &l in &self.l {
            for m in &models {
                let spec = build_spec(m.clone(), l, gamma, self.seed)?;
                let realizations = self.realizations.unwrap_or_else(|| default_realizations(kind, l));
                points.push(Point { spec, realizations });
            }
        }
        Ok(Plan {
            kind,
            points,
            energies,
            recipe: self.recipe_for(kind),
        })
    }
}

/// Command-line overrides; `None` leaves the file value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<String>,
    pub l: Option<Vec<usize>>,
    pub b: Option<Vec<f64>>,
    pub h: Option<Vec<f64>>,
    pub d: Option<Vec<f64>>,
    pub e: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub log_base: Option<String>,
    pub chi0_recipe: Option<String>,
    pub omega_estimator: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut Config) -> Result<()> {
        if let Some(m) = &self.model {
            cfg.model = Some(ModelKind::parse(m).ok_or_else(|| Error::config(format!("unknown model `{m}`")))?);
        }
        if let Some(v) = &self.l {
            cfg.l = v.clone();
        }
        if let Some(v) = &self.b {
            cfg.b = v.clone();
        }
        if let Some(v) = &self.h {
            cfg.h = v.clone();
        }
        if let Some(v) = &self.d {
            cfg.d = v.clone();
        }
        if let Some(v) = &self.e {
            cfg.e = v.clone();
        }
        if let Some(r) = self.realizations {
            cfg.realizations = Some(r);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = &self.log_base {
            cfg.log_base =
                LogBase::parse(b).ok_or_else(|| Error::config(format!("log base must be 2 or e, got `{b}`")))?;
        }
        if let Some(r) = &self.chi0_recipe {
            cfg.chi0_recipe =
                Some(Chi0Recipe::parse(r).ok_or_else(|| Error::config(format!("unknown chi0 recipe `{r}`")))?);
        }
        if let Some(o) = &self.omega_estimator {
            cfg.omega_estimator = match o.as_str() {
                "abs_overlap" => OmegaEstimator::AbsOverlap,
                "raw_overlap" => OmegaEstimator::RawOverlap,
                "ipr" => OmegaEstimator::Ipr,
                _ => return Err(Error::config(format!("unknown omega estimator `{o}`"))),
            };
        }
        Ok(())
    }
}
