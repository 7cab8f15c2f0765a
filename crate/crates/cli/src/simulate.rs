use std::path::PathBuf;

use authcap::adversary::{
    best_deterministic_attack, impostor_attack, omega_exact, randomized_attack,
    substitution_attack, typical_auth_rate, Attack, AuthRateBracket, KeyBounds, OmegaReport,
    RateConfig,
};
use authcap::channel::{bsc, ChannelPair, DiscreteChannel};
use authcap::codes::{
    check_lai_strategy, key_expansion_transform, lai_toy_code, message_error,
    simmons_noiseless_code, TabularCode, ToleranceExpressions, TransformSpec,
};
use authcap::error::Error;
use authcap::info::Bits;
use authcap::io::{write_text, ChannelSpecFile, CodeFile};
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodeKind {
    Simmons,
    LaiToy,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in construction.
    #[arg(long, value_enum, required_unless_present = "code_file")]
    pub code: Option<CodeKind>,
    /// Load a code from JSON instead.
    #[arg(long, conflicts_with = "code")]
    pub code_file: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Key rate; defaults to 1 for simmons and 0.5 for lai-toy.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Message rate of lai-toy; defaults to 1/n.
    #[arg(long = "r")]
    pub r: Option<f64>,
    /// Alphabet size for simmons.
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    /// Main channel crossover; default 0.
    #[arg(long)]
    pub main_bsc: Option<f64>,
    /// Tap channel crossover; default 0 for simmons and 0.5 for lai-toy.
    #[arg(long)]
    pub tap_bsc: Option<f64>,
    /// Channel spec file, instead of the crossover flags.
    #[arg(long, conflicts_with_all = ["main_bsc", "tap_bsc"])]
    pub spec: Option<PathBuf>,
    /// Apply the key-expansion transform with this beta first.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "impostor,substitution,bestdet,randomized"
    )]
    pub attacks: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Threshold a for the per-attack reports; defaults to the first grid
    /// value above the bracket's lower end.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Include every omega cell in the attack reports (small codes only).
    #[arg(long)]
    pub cells: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the code as JSON.
    #[arg(long)]
    pub save_code: Option<PathBuf>,
}

#[derive(Serialize)]
struct CodeSummary {
    construction: String,
    seed: Option<u64>,
    n: usize,
    messages: usize,
    keys: usize,
    r: Bits,
    kappa: Bits,
}

#[derive(Serialize)]
struct TransformSummary {
    beta: Bits,
    warnings: Vec<String>,
    tolerances: ToleranceExpressions,
}

#[derive(Serialize)]
struct ChannelSummary {
    main: Vec<Vec<f64>>,
    tap: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct SimulationReport {
    code: CodeSummary,
    transform: Option<TransformSummary>,
    channel: ChannelSummary,
    message_error: f64,
    key_leakage: Bits,
    lai_structural: bool,
    key_bounds: KeyBounds,
    rate: AuthRateBracket,
    threshold_a: Bits,
    attacks: Vec<OmegaReport>,
}

fn build_pair(args: &SimulateArgs, input_size: usize) -> Result<ChannelPair, Error> {
    if let Some(path) = &args.spec {
        return ChannelSpecFile::load(path)?.to_pair();
    }
    let default_tap = if args.code == Some(CodeKind::LaiToy) {
        0.5
    } else {
        0.0
    };
    match (input_size, args.main_bsc, args.tap_bsc) {
        (2, main, tap) => {
            ChannelPair::new(bsc(main.unwrap_or(0.0))?, bsc(tap.unwrap_or(default_tap))?)
        }
        (q, None, None) => {
            ChannelPair::new(DiscreteChannel::identity(q), DiscreteChannel::identity(q))
        }
        (q, _, _) => Err(Error::InvalidParameter(format!(
            "crossover flags need a binary alphabet, got {q} symbols; use --spec"
        ))),
    }
}

fn build_code(args: &SimulateArgs) -> Result<(TabularCode, ChannelPair), Error> {
    match (&args.code_file, args.code) {
        (Some(path), _) => {
            let code = CodeFile::parse(&authcap::io::read_text(path)?)?;
            let pair = build_pair(args, code.input_alphabet)?;
            Ok((code, pair))
        }
        (None, Some(CodeKind::Simmons)) => {
            let pair = build_pair(args, args.q)?;
            Ok((
                simmons_noiseless_code(args.q, args.n, args.kappa.unwrap_or(1.0), args.seed)?,
                pair,
            ))
        }
        (None, Some(CodeKind::LaiToy)) => {
            let pair = build_pair(args, 2)?;
            let r = args.r.unwrap_or(1.0 / args.n as f64);
            Ok((
                lai_toy_code(args.n, args.kappa.unwrap_or(0.5), r, &pair.tap, args.seed)?,
                pair,
            ))
        }
        (None, None) => Err(Error::InvalidParameter("give --code or --code-file".into())),
    }
}

pub fn run(args: &SimulateArgs) -> Result<Outcome, Error> {
    let attacks: Vec<Attack> = args
        .attacks
        .iter()
        .map(|a| a.trim().parse())
        .collect::<Result<_, _>>()?;
    let (mut code, pair) = build_code(args)?;
    let mut transform = None;
    if let Some(beta) = args.beta {
        let spec = TransformSpec::random(&code.params, beta, args.seed)?;
        let t = key_expansion_transform(&code, &spec)?;
        for w in &t.warnings {
            eprintln!("warning: {w}");
        }
        transform = Some(TransformSummary {
            beta,
            warnings: t.warnings,
            tolerances: t.tolerances,
        });
        code = t.code;
    }
    if let Some(path) = &args.save_code {
        write_text(path, &CodeFile::new(code.clone()).to_json())?;
    }

    let rate = typical_auth_rate(&code, &pair, args.epsilon, &attacks, &RateConfig::default())?;
    let threshold_a = args.threshold.unwrap_or(if rate.unbounded {
        rate.alpha_lb
    } else {
        rate.alpha_lb + rate.grid_step
    });
    let mut reports = Vec::new();
    for attack in &attacks {
        let psi = match attack {
            Attack::Impostor => impostor_attack(&code, &pair)?,
            Attack::Substitution => substitution_attack(&code, &pair)?,
            Attack::BestDeterministic => best_deterministic_attack(&code, &pair, threshold_a)?,
            Attack::Randomized => randomized_attack(&code, &pair, threshold_a)?,
            Attack::Fixed(psi) => psi.clone(),
        };
        let mut report = omega_exact(&code, &pair, &psi, threshold_a)?;
        if !args.cells {
            report.cells = None;
        }
        reports.push(report);
    }
    let lai = check_lai_strategy(&code, &pair, f64::INFINITY)?;
    let origin = code.origin.clone();
    let report = SimulationReport {
        code: CodeSummary {
            construction: origin
                .as_ref()
                .map_or_else(|| "file".to_string(), |o| o.construction.clone()),
            seed: origin.and_then(|o| o.seed),
            n: code.params.n,
            messages: code.params.messages,
            keys: code.params.keys,
            r: code.params.r(),
            kappa: code.params.kappa(),
        },
        transform,
        channel: ChannelSummary {
            main: pair.main.to_rows(),
            tap: pair.tap.to_rows(),
        },
        message_error: message_error(&code, &pair.main)?,
        key_leakage: lai.leakage,
        lai_structural: lai.structural,
        key_bounds: rate.bounds,
        rate,
        threshold_a,
        attacks: reports,
    };
    Ok(Outcome {
        text: serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        code: 0,
    })
}
