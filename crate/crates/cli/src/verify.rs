use std::path::PathBuf;

use authcap::adversary::{
    best_deterministic_attack, impostor_attack, key_guess_check, substitution_attack,
    tail_bound_checks, typical_auth_rate, Attack, AttackKind, AttackStrategy, RateConfig,
};
use authcap::channel::{bsc, ChannelPair, DiscreteChannel, Pmf};
use authcap::codes::{
    concentration_frequencies, key_expansion_transform, lai_toy_code, simmons_noiseless_code,
    transform_error_mismatches, CodeParams, TabularCode, TransformSpec,
};
use authcap::error::Error;
use authcap::io::CodeFile;
use authcap::region::{fm_equivalence_check, AuxiliaryChain};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Outcome, EXIT_PROPERTY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Battery {
    /// Table validity of every built-in fixture.
    Codes,
    /// Eliminated system against the pre-elimination linear program.
    Fm,
    /// Rates and per-cell errors of the key-expansion transform.
    Transform,
    /// Image-count violation frequencies of random mappings.
    Concentration,
    /// omega against the induced key law on Lai-structural codes.
    KeyGuess,
    /// Rate brackets against the key-information bounds.
    RateBounds,
    /// Mutual-information and binomial tail bounds.
    Tails,
}

const ALL: [Battery; 7] = [
    Battery::Codes,
    Battery::Fm,
    Battery::Transform,
    Battery::Concentration,
    Battery::KeyGuess,
    Battery::RateBounds,
    Battery::Tails,
];

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Run only these batteries.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub only: Vec<Battery>,
    /// Sample count for the elimination check.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Trial count for the Monte Carlo batteries.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Check a code file; alone it replaces the default batteries.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Failure {
    battery: String,
    invariant: String,
    detail: String,
}

#[derive(Serialize)]
struct BatteryResult {
    name: String,
    passed: bool,
    summary: Value,
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    passed: bool,
    batteries: Vec<BatteryResult>,
    failures: Vec<Failure>,
}

struct Run {
    results: Vec<BatteryResult>,
    failures: Vec<Failure>,
}

impl Run {
    fn record(&mut self, name: &str, summary: Value, failures: Vec<(String, String)>) {
        self.results.push(BatteryResult {
            name: name.into(),
            passed: failures.is_empty(),
            summary,
        });
        self.failures
            .extend(failures.into_iter().map(|(invariant, detail)| Failure {
                battery: name.into(),
                invariant,
                detail,
            }));
    }
}

fn label(b: Battery) -> String {
    b.to_possible_value()
        .expect("named battery")
        .get_name()
        .to_string()
}

fn noiseless() -> ChannelPair {
    ChannelPair::bsc_pair(0.0, 0.0).expect("valid pair")
}

/// Built-in codes with the channel pair each is meant for.
fn fixtures(seed: u64) -> Result<Vec<(String, TabularCode, ChannelPair)>, Error> {
    let mut out = vec![
        (
            "simmons-n2".into(),
            simmons_noiseless_code(2, 2, 1.0, seed)?,
            noiseless(),
        ),
        (
            "simmons-n4".into(),
            simmons_noiseless_code(2, 4, 1.0, seed)?,
            noiseless(),
        ),
    ];
    for (name, tap) in [
        ("lai-independent", bsc(0.5)?),
        ("lai-noisy", bsc(0.1)?),
        ("lai-identity", DiscreteChannel::identity(2)),
    ] {
        let pair = ChannelPair::new(bsc(0.0)?, tap)?;
        out.push((
            name.into(),
            lai_toy_code(4, 0.5, 0.25, &pair.tap, seed)?,
            pair,
        ));
    }
    let base = simmons_noiseless_code(2, 4, 1.0, seed)?;
    let spec = TransformSpec::random(&base.params, 0.25, seed)?;
    out.push((
        "simmons-expanded".into(),
        key_expansion_transform(&base, &spec)?.code,
        noiseless(),
    ));
    Ok(out)
}

fn attack_family(code: &TabularCode, pair: &ChannelPair) -> Result<Vec<AttackStrategy>, Error> {
    let mut out = vec![
        impostor_attack(code, pair)?,
        substitution_attack(code, pair)?,
    ];
    for a in [0.25, 0.5, 1.0] {
        out.push(best_deterministic_attack(code, pair, a)?);
    }
    let y = code.output_words();
    out.push(AttackStrategy::new(
        AttackKind::Custom,
        vec![vec![1.0 / y as f64; y]; out[0].z_words()],
    )?);
    out.push(out[1].mix(&out[3], 0.5)?);
    Ok(out)
}

fn codes_battery(run: &mut Run, seed: u64) -> Result<(), Error> {
    let mut failures = Vec::new();
    let fixtures = fixtures(seed)?;
    for (name, code, _) in &fixtures {
        for v in code.violations() {
            failures.push((invariant_of(&v), format!("{name}: {v}")));
        }
    }
    run.record("codes", json!({ "fixtures": fixtures.len() }), failures);
    Ok(())
}

fn invariant_of(violation: &str) -> String {
    violation.split(':').next().unwrap_or("code").to_string()
}

fn fm_battery(run: &mut Run, seed: u64, samples: usize) -> Result<(), Error> {
    let uniform = Pmf::uniform(2);
    let cases = [
        (
            "bsc-0.1-0.2",
            ChannelPair::bsc_pair(0.1, 0.2)?,
            AuxiliaryChain::input_only(&uniform),
        ),
        (
            "bsc-0.05-0.3",
            ChannelPair::bsc_pair(0.05, 0.3)?,
            AuxiliaryChain::input_only(&uniform),
        ),
        (
            "bsc-0.2-0.1",
            ChannelPair::bsc_pair(0.2, 0.1)?,
            AuxiliaryChain::fully_public(&uniform),
        ),
    ];
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (name, pair, chain) in &cases {
        let report = fm_equivalence_check(pair, chain, samples, seed)?;
        summary.push(
            json!({ "case": name, "samples": report.samples, "inside": report.inside,
            "disagreements": report.disagreements.len() }),
        );
        for d in report.disagreements.iter().take(5) {
            failures.push(("fm-equivalence".into(), format!("{name}: {d:?}")));
        }
    }
    run.record("fm", Value::Array(summary), failures);
    Ok(())
}

fn transform_battery(run: &mut Run, seed: u64) -> Result<(), Error> {
    // a Z channel makes per-cell errors differ
    let main = DiscreteChannel::new(vec![vec![1.0, 0.0], vec![0.2, 0.8]])?;
    let mut failures = Vec::new();
    let mut cases = 0;
    for (q, n, kappa, beta) in [(2, 4, 1.0, 0.25), (2, 4, 1.0, 0.5), (2, 4, 0.5, 0.25)] {
        let code = simmons_noiseless_code(q, n, kappa, seed)?;
        let spec = TransformSpec::random(&code.params, beta, seed)?;
        let t = key_expansion_transform(&code, &spec)?;
        let (p, tp) = (code.params, t.code.params);
        let shrink = 1usize << (n as f64 * beta).round() as usize;
        if tp.messages * shrink != p.messages || tp.keys != p.keys * shrink * shrink {
            failures.push((
                "transform-rates".into(),
                format!("n={n} kappa={kappa} beta={beta}: sizes {tp:?}"),
            ));
        }
        let bad = transform_error_mismatches(&code, &t.code, &spec, &main)?;
        if !bad.is_empty() {
            failures.push((
                "transform-cell-error".into(),
                format!("n={n} kappa={kappa} beta={beta}: {} cells", bad.len()),
            ));
        }
        cases += 1;
    }
    run.record("transform", json!({ "cases": cases }), failures);
    Ok(())
}

fn concentration_battery(run: &mut Run, seed: u64, trials: usize) -> Result<(), Error> {
    let params = CodeParams::from_rates(4, 1.0, 1.0, 0.0)?;
    let report = concentration_frequencies(&params, 0.5, trials, seed)?;
    let mut failures = Vec::new();
    if report.gstar_frequency > report.gstar_bound {
        failures.push((
            "gstar-frequency".into(),
            format!("{} > {}", report.gstar_frequency, report.gstar_bound),
        ));
    }
    if report.gdagger_frequency > report.gdagger_bound {
        failures.push((
            "gdagger-frequency".into(),
            format!("{} > {}", report.gdagger_frequency, report.gdagger_bound),
        ));
    }
    run.record(
        "concentration",
        serde_json::to_value(&report).expect("serializes"),
        failures,
    );
    Ok(())
}

fn key_guess_on(
    name: &str,
    code: &TabularCode,
    pair: &ChannelPair,
    failures: &mut Vec<(String, String)>,
) -> Result<Value, Error> {
    let report = key_guess_check(code, pair, &attack_family(code, pair)?)?;
    if !report.passed {
        failures.push((
            "key-guess".into(),
            format!(
                "{name}: {} violations, max excess {}",
                report.violations, report.max_excess
            ),
        ));
    }
    Ok(json!({ "code": name, "cells": report.cells_checked, "violations": report.violations }))
}

fn key_guess_battery(run: &mut Run, seed: u64) -> Result<(), Error> {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (name, code, pair) in fixtures(seed)?.iter().filter(|f| f.0.starts_with("lai")) {
        summary.push(key_guess_on(name, code, pair, &mut failures)?);
    }
    run.record("key-guess", Value::Array(summary), failures);
    Ok(())
}

fn rate_bounds_battery(run: &mut Run, seed: u64) -> Result<(), Error> {
    let attacks = [
        Attack::Impostor,
        Attack::Substitution,
        Attack::BestDeterministic,
        Attack::Randomized,
    ];
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (name, code, pair) in &fixtures(seed)? {
        let b = typical_auth_rate(code, pair, 0.1, &attacks, &RateConfig::default())?;
        if !b.consistent {
            failures.push((
                "rate-bounds".into(),
                format!("{name}: alpha_lb {} > alpha_ub {}", b.alpha_lb, b.alpha_ub),
            ));
        }
        summary.push(json!({ "code": name, "alpha_lb": b.alpha_lb, "alpha_ub": b.alpha_ub, "unbounded": b.unbounded }));
    }
    run.record("rate-bounds", Value::Array(summary), failures);
    Ok(())
}

fn tails_battery(run: &mut Run, seed: u64, trials: usize) -> Result<(), Error> {
    let report = tail_bound_checks(seed, trials)?;
    let mut failures = Vec::new();
    for c in report.info_tails.iter().filter(|c| !c.passed) {
        failures.push((
            "mi-tail".into(),
            format!(
                "{}: exact {} observed {} bound {}",
                c.label, c.exact_tail, c.observed_frequency, c.bound
            ),
        ));
    }
    for c in report.binomial.iter().filter(|c| !c.passed) {
        failures.push((
            "binomial-tail".into(),
            format!(
                "q={} k={} alpha={}: observed {} bound {}",
                c.q, c.k, c.alpha, c.observed_frequency, c.bound
            ),
        ));
    }
    run.record(
        "tails",
        serde_json::to_value(&report).expect("serializes"),
        failures,
    );
    Ok(())
}

fn fixture_battery(run: &mut Run, path: &PathBuf) -> Result<(), Error> {
    let file = CodeFile::parse_unchecked(&authcap::io::read_text(path)?)?;
    let code = file.code;
    let violations = code.violations();
    let mut failures: Vec<(String, String)> = violations
        .iter()
        .map(|v| (invariant_of(v), v.clone()))
        .collect();
    let mut summary = json!({ "path": path.display().to_string(), "violations": violations.len() });
    if violations.is_empty() && code.input_alphabet == 2 {
        summary["key-guess"] = key_guess_on("fixture", &code, &noiseless(), &mut failures)?;
    }
    run.record("fixture", summary, failures);
    Ok(())
}

pub fn run(args: &VerifyArgs) -> Result<Outcome, Error> {
    let selected: Vec<Battery> = match (&args.fixture, args.only.is_empty()) {
        (_, false) => ALL
            .iter()
            .copied()
            .filter(|b| args.only.contains(b))
            .collect(),
        (Some(_), true) => Vec::new(),
        (None, true) => ALL.to_vec(),
    };
    let mut run = Run {
        results: Vec::new(),
        failures: Vec::new(),
    };
    if let Some(path) = &args.fixture {
        fixture_battery(&mut run, path)?;
    }
    for b in selected {
        match b {
            Battery::Codes => codes_battery(&mut run, args.seed)?,
            Battery::Fm => fm_battery(&mut run, args.seed, args.samples)?,
            Battery::Transform => transform_battery(&mut run, args.seed)?,
            Battery::Concentration => concentration_battery(&mut run, args.seed, args.trials)?,
            Battery::KeyGuess => key_guess_battery(&mut run, args.seed)?,
            Battery::RateBounds => rate_bounds_battery(&mut run, args.seed)?,
            Battery::Tails => tails_battery(&mut run, args.seed, args.trials)?,
        }
        debug_assert_eq!(run.results.last().map(|r| r.name.clone()), Some(label(b)));
    }
    let passed = run.failures.is_empty();
    for f in &run.failures {
        eprintln!("FAIL {} [{}]: {}", f.battery, f.invariant, f.detail);
    }
    let report = VerifyReport {
        seed: args.seed,
        passed,
        batteries: run.results,
        failures: run.failures,
    };
    Ok(Outcome {
        text: serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        code: if passed { 0 } else { EXIT_PROPERTY },
    })
}
