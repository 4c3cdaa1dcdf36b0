//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qent_core::analysis::{self, FssOptions, Scale};
use qent_core::models::Sampler;

use crate::analyze::{self, FssTarget};
use crate::config::{Axis, Config, Measure, Overrides};
use crate::error::{Error, Result};
use crate::{langevin, pipeline, records};

#[derive(Debug, Parser)]
#[command(
    name = "qent",
    version,
    about = "Random-matrix entanglement sweeps and Schmidt-eigenvalue dynamics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one Hamiltonian realization as JSON.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Realization index.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Run a parameter sweep into a JSONL record file.
    Run {
        #[command(flatten)]
        common: Common,
        /// Keep completed cells of an existing output file.
        #[arg(long)]
        resume: bool,
    },
    /// Integrate a Langevin ensemble and write moment curves as CSV.
    Langevin {
        #[command(flatten)]
        common: Common,
        /// Also write the closed-form fit and ODE residuals as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Bin records into curves.
    Aggregate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        bins: Option<usize>,
        /// Divide each curve by its maximum.
        #[arg(long)]
        normalize: bool,
        #[arg(long, value_enum)]
        x: Option<XAxis>,
    },
    /// Score how well a set of curves collapses.
    Collapse {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long, value_enum, default_value_t = ScaleArg::Log)]
        scale: ScaleArg,
    },
    /// Finite-size scaling fit of records from several sizes.
    Fss {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = TargetArg::NLambda)]
        target: TargetArg,
        /// Fit the logarithm of the target.
        #[arg(long)]
        log_y: bool,
    },
    /// Histograms of R1 at fixed N Lambda.
    Hist {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        /// `lo,hi` window in N Lambda.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
        #[arg(long)]
        bins: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum XAxis {
    NLambda,
    Param,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TargetArg {
    NLambda,
    NormalizedR1,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long = "L", value_delimiter = ',')]
    pub l: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub b: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub h: Option<Vec<f64>>,
    #[arg(long = "D", value_delimiter = ',', allow_negative_numbers = true)]
    pub d: Option<Vec<f64>>,
    #[arg(long = "E", value_delimiter = ',', allow_negative_numbers = true)]
    pub e: Option<Vec<f64>>,
    #[arg(long)]
    pub realizations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Entropy base: 2 or e.
    #[arg(long)]
    pub log_base: Option<String>,
    #[arg(long)]
    pub chi0_recipe: Option<String>,
    #[arg(long)]
    pub omega_estimator: Option<String>,
    /// Output path; standard output when absent for JSON results.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model.clone(),
            l: self.l.clone(),
            b: self.b.clone(),
            h: self.h.clone(),
            d: self.d.clone(),
            e: self.e.clone(),
            realizations: self.realizations,
            seed: self.seed,
            log_base: self.log_base.clone(),
            chi0_recipe: self.chi0_recipe.clone(),
            omega_estimator: self.omega_estimator.clone(),
        }
    }

    pub fn load(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        self.overrides().apply(&mut cfg)?;
        Ok(cfg)
    }

    fn out(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| Error::config("`--out` is required"))
    }
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => analyze::write_json(p, value),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
                path: PathBuf::from("<stdout>"),
                line: 0,
                source,
            })?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| Error::io("<stdout>", e))
        }
    }
}

#[derive(Serialize)]
struct SampleOut<'a> {
    spec: &'a qent_core::models::EnsembleSpec,
    realization_index: u64,
    seed_used: u64,
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct CollapseOut {
    quality: f64,
    curves: Vec<String>,
    bins: usize,
}

#[derive(Serialize)]
struct FssOut {
    fit: analysis::FssFit,
    crossings: Vec<analyze::Crossing>,
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample { common, index } => {
            let cfg = common.load()?;
            let plan = cfg.plan()?;
            let point = &plan.points[0];
            let sampler = Sampler::new(&point.spec);
            let s = sampler.sample(index);
            let basis = sampler.basis();
            emit(
                common.out.as_deref(),
                &SampleOut {
                    spec: &point.spec,
                    realization_index: s.realization_index,
                    seed_used: s.seed_used,
                    labels: (0..basis.len()).map(|i| basis.label(i)).collect(),
                    matrix: (0..s.matrix.rows()).map(|i| s.matrix.row(i).to_vec()).collect(),
                },
            )
        }
        Command::Run { common, resume } => {
            let cfg = common.load()?;
            let summary = pipeline::run(&cfg, common.out()?, resume)?;
            log::info!(
                "{} cells run, {} skipped, {} records, {} failed realizations",
                summary.cells_run,
                summary.cells_skipped,
                summary.records,
                summary.failed_realizations
            );
            Ok(())
        }
        Command::Langevin { common, summary } => {
            let cfg = common.load()?;
            let mut lc = cfg
                .langevin
                .clone()
                .ok_or_else(|| Error::config("missing `langevin` section"))?;
            if let Some(s) = common.seed {
                lc.seed = s;
            }
            if let Some(r) = common.realizations {
                lc.ensemble_size = r;
            }
            let result = langevin::run(&lc)?;
            langevin::write_moments(common.out()?, &result.moments)?;
            if let Some(p) = summary {
                analyze::write_json(&p, &result)?;
            }
            Ok(())
        }
        Command::Aggregate {
            common,
            input,
            measure,
            bins,
            normalize,
            x,
        } => {
            let cfg = common.load()?;
            let mut opts = cfg.aggregate.clone();
            if let Some(m) = measure {
                opts.measure = Measure::parse(&m).ok_or_else(|| Error::config(format!("unknown measure `{m}`")))?;
            }
            if let Some(b) = bins {
                opts.bins = b;
            }
            opts.normalize |= normalize;
            if let Some(x) = x {
                opts.x = match x {
                    XAxis::NLambda => Axis::NLambda,
                    XAxis::Param => Axis::Param,
                };
            }
            let recs = records::read(&input)?.completed_records();
            let curves = analyze::aggregate(&recs, &opts)?;
            analyze::write_curves(common.out()?, &curves)
        }
        Command::Collapse {
            common,
            input,
            bins,
            scale,
        } => {
            let curves = analyze::read_curves(&input)?;
            let scale = match scale {
                ScaleArg::Log => Scale::Log,
                ScaleArg::Linear => Scale::Linear,
            };
            let quality = analysis::collapse_quality(&curves, bins, scale)?;
            emit(
                common.out.as_deref(),
                &CollapseOut {
                    quality,
                    curves: curves.iter().map(|c| c.label.clone()).collect(),
                    bins,
                },
            )
        }
        Command::Fss {
            common,
            input,
            target,
            log_y,
        } => {
            let recs = records::read(&input)?.completed_records();
            let target = match target {
                TargetArg::NLambda => FssTarget::NLambda,
                TargetArg::NormalizedR1 => FssTarget::NormalizedR1,
            };
            let opts = FssOptions {
                log_y,
                ..FssOptions::default()
            };
            let series = analyze::size_series(&recs, target)?;
            let fit = analysis::fss_fit(&series, &opts)?;
            emit(
                common.out.as_deref(),
                &FssOut {
                    fit,
                    crossings: analyze::crossings(&series),
                },
            )
        }
        Command::Hist {
            common,
            input,
            window,
            bins,
        } => {
            let cfg = common.load()?;
            let window = match window {
                Some(w) if w.len() == 2 => (w[0], w[1]),
                Some(_) => return Err(Error::config("`--window` takes `lo,hi`")),
                None => cfg
                    .hist
                    .n_lambda_window
                    .ok_or_else(|| Error::config("give `--window lo,hi` or `hist.n_lambda_window`"))?,
            };
            let recs = records::read(&input)?.completed_records();
            let table = analyze::hist(&recs, window, bins.unwrap_or(cfg.hist.bins))?;
            emit(common.out.as_deref(), &table)
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    }
}
