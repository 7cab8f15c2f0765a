use std::path::PathBuf;

use authcap::channel::ChannelPair;
use authcap::error::Error;
use authcap::io::{sweep_csv, ChannelSpecFile, SweepDocument};
use authcap::region::{boundary_sweep, SearchParams, SweepAxis};
use clap::{Args, ValueEnum};

use crate::{Outcome, EXIT_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Binary symmetric main and tap channels.
    #[arg(long, num_args = 2, value_names = ["LAMBDA_T", "LAMBDA_Q"], required_unless_present = "spec", conflicts_with = "spec")]
    pub bsc: Option<Vec<f64>>,
    /// JSON channel spec file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Hold the key rate fixed and sweep r.
    #[arg(long, required_unless_present = "r", conflicts_with = "r")]
    pub kappa: Option<f64>,
    /// Hold the message rate fixed and sweep kappa.
    #[arg(long = "r")]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exit with 3 if any row hit the search budget.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Gradient restarts per membership query.
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// Gradient steps per restart.
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
}

pub fn load_pair(bsc: Option<&[f64]>, spec: Option<&PathBuf>) -> Result<ChannelPair, Error> {
    match (bsc, spec) {
        (Some(l), _) => ChannelPair::bsc_pair(l[0], l[1]),
        (None, Some(path)) => ChannelSpecFile::load(path)?.to_pair(),
        (None, None) => Err(Error::InvalidParameter("give --bsc or --spec".into())),
    }
}

pub fn run(args: &RegionArgs) -> Result<Outcome, Error> {
    let pair = load_pair(args.bsc.as_deref(), args.spec.as_ref())?;
    let fixed = match (args.kappa, args.r) {
        (Some(k), _) => SweepAxis::Kappa(k),
        (None, Some(r)) => SweepAxis::R(r),
        (None, None) => return Err(Error::InvalidParameter("give --kappa or --r".into())),
    };
    let search = SearchParams {
        restarts: args.restarts,
        steps: args.steps,
        seed: args.seed,
        ..SearchParams::default()
    };
    let rows = boundary_sweep(&pair, fixed, args.step, &search)?;
    let exhausted = rows.iter().any(|r| r.budget_flag);
    let text = match args.format {
        Format::Csv => sweep_csv(&rows),
        Format::Json => SweepDocument::new(pair, fixed, args.step, args.seed, rows).to_json(),
    };
    if exhausted && args.strict {
        eprintln!("search budget exhausted on at least one row");
    }
    Ok(Outcome {
        text,
        code: if exhausted && args.strict {
            EXIT_BUDGET
        } else {
            0
        },
    })
}
