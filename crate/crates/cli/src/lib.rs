//! `qpv` command-line front end: key generation, single protocol rounds,
//! attack campaigns and parameter sweeps, all batch and file-based.
//!
//! Exit codes: 0 accept (or completed), 1 reject, 2 usage or input error.

/// `println!` that ignores a closed stdout.
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub mod manifest;
pub mod sweep;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::builder::RangedU64ValueParser;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qpv_core::adversary::{key_estimation_attack, AttackParams, AttackReport, AttackSpec, Strategy};
use qpv_core::cipher::Convention;
use qpv_core::keyfile::{private_key_to_json, public_key_to_json};
use qpv_core::keys::MAX_PRECISION;
use qpv_core::protocol::{round_keygen, run_honest, run_with_adversary, ProtocolConfig, ProtocolTranscript};
use qpv_core::spacetime::{Position, Scenario};
use qpv_core::SimRng;

use manifest::RunManifest;

pub const EXIT_ACCEPT: u8 = 0;
pub const EXIT_REJECT: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// The three-verifier example scenario shipped with the binary.
pub const BUNDLED_TRIAD: &str = include_str!("../scenarios/triad.json");

#[derive(Debug, Parser)]
#[command(name = "qpv", version, about = "Quantum position-verification laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a private/public key pair.
    Keygen(KeygenArgs),
    /// Run one honest protocol round.
    Run(RunArgs),
    /// Run an attack campaign against the protocol.
    Attack(AttackArgs),
    /// Evaluate metrics over a parameter grid into one CSV.
    Sweep(sweep::SweepArgs),
}

fn key_len_parser() -> RangedU64ValueParser<usize> {
    RangedU64ValueParser::new().range(1..)
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "QPV_OUT_DIR", default_value = "qpv-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct KeygenArgs {
    /// Register length.
    #[arg(long = "T", default_value_t = 32, value_parser = key_len_parser())]
    pub key_len: usize,
    /// Precision exponent; angles are multiples of π/2^t.
    #[arg(long = "t", default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=MAX_PRECISION as i64))]
    pub precision: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    /// Scenario JSON file. Defaults to the bundled three-verifier triad.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Register length.
    #[arg(long = "T", default_value_t = 32, value_parser = key_len_parser())]
    pub key_len: usize,
    /// Precision exponent; angles are multiples of π/2^t.
    #[arg(long = "t", default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=MAX_PRECISION as i64))]
    pub precision: u32,
    /// Message length per verifier: one value for all, or one per verifier.
    #[arg(long = "r", value_delimiter = ',', default_value = "16", value_parser = key_len_parser())]
    pub message_lengths: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Encrypt bits with a rotation by π instead of π/2.
    #[arg(long)]
    pub literal_pi: bool,
    /// Timing tolerance in seconds; overrides the scenario's value.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Depolarizing probability per cipher qubit in transit.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Bit errors each verifier tolerates.
    #[arg(long, default_value_t = 0)]
    pub error_budget: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// One of: none, guess, measure, spoof, collude, key-estimation.
    #[arg(long)]
    pub strategy: String,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Adversary position `x,y,z` in metres; repeat for colluders.
    #[arg(long = "pos", allow_hyphen_values = true)]
    pub positions: Vec<Position>,
    /// Measurement basis angle in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub angle: Option<f64>,
    /// Public-key copies available to key estimation.
    #[arg(long)]
    pub copies: Option<usize>,
    /// Basis grid resolution for key estimation.
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

/// How a command ended when it did not fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accept,
    Reject,
    Done,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Accept | Outcome::Done => EXIT_ACCEPT,
            Outcome::Reject => EXIT_REJECT,
        }
    }
}

/// Parses `args`, runs the command and maps the result to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_ACCEPT });
        }
    };
    match execute(&cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Keygen(args) => cmd_keygen(args),
        Command::Run(args) => cmd_run(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Sweep(args) => sweep::cmd_sweep(args),
    }
}

/// Fixed-width decimal with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_output(dir: &Path, name: &str, contents: &str, manifest: &mut RunManifest) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    manifest.outputs.push(name.into());
    Ok(())
}

pub(crate) fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

pub(crate) fn finish_manifest(dir: &Path, mut manifest: RunManifest) -> Result<()> {
    manifest.outputs.push("manifest.json".into());
    manifest.finish();
    let path = dir.join("manifest.json");
    fs::write(&path, manifest.to_json()).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct KeygenConfig {
    command: &'static str,
    key_len: usize,
    precision: u32,
    seed: u64,
}

fn cmd_keygen(args: &KeygenArgs) -> Result<Outcome> {
    let config = KeygenConfig {
        command: "keygen",
        key_len: args.key_len,
        precision: args.precision,
        seed: args.seed,
    };
    let mut manifest = RunManifest::start("keygen", &serde_json::to_vec(&config)?, args.seed);
    let (sk, pk) = round_keygen(args.key_len, args.precision, args.seed)?;
    let dir = &args.out.out;
    prepare_dir(dir)?;
    write_output(dir, "private_key.json", &private_key_to_json(&sk)?, &mut manifest)?;
    write_output(dir, "public_key.json", &public_key_to_json(&pk)?, &mut manifest)?;
    finish_manifest(dir, manifest)?;
    outln!(
        "wrote key pair (T={}, t={}) to {}",
        args.key_len,
        args.precision,
        dir.display()
    );
    Ok(Outcome::Done)
}

/// Everything that determines a protocol round, in canonical form.
#[derive(Serialize)]
struct ProtocolConfigBytes<'a> {
    command: &'a str,
    key_len: usize,
    precision: u32,
    message_lengths: &'a [usize],
    seed: u64,
    convention: Convention,
    tolerance_s: f64,
    noise: f64,
    identity_error_budget: usize,
    scenario: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    attack: Option<AttackConfigBytes<'a>>,
}

#[derive(Serialize)]
struct AttackConfigBytes<'a> {
    strategy: &'a str,
    trials: u64,
    positions: &'a [Position],
    angle: Option<f64>,
    copies: Option<usize>,
    grid: Option<usize>,
}

pub fn load_scenario(path: Option<&Path>) -> Result<Scenario> {
    let text = match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading scenario {}", p.display()))?,
        None => BUNDLED_TRIAD.to_string(),
    };
    let what = path.map_or("bundled scenario".to_string(), |p| p.display().to_string());
    Scenario::from_json(&text).with_context(|| format!("invalid scenario {what}"))
}

pub fn protocol_config(args: &ProtocolArgs) -> Result<ProtocolConfig> {
    let mut scenario = load_scenario(args.scenario.as_deref())?;
    if let Some(eps) = args.tolerance {
        scenario = scenario.with_tolerance(eps)?;
    }
    let n = scenario.geometry.verifier_count();
    let message_lengths = match args.message_lengths.as_slice() {
        [r] => vec![*r; n],
        rs if rs.len() == n => rs.to_vec(),
        rs => bail!("--r gives {} lengths for {n} verifiers", rs.len()),
    };
    let mut config = ProtocolConfig::new(scenario, args.key_len, args.precision, 1, args.seed);
    config.message_lengths = message_lengths;
    config.convention = if args.literal_pi {
        Convention::LiteralPi
    } else {
        Convention::QuarterTurn
    };
    config.noise = args.noise;
    config.identity_error_budget = args.error_budget;
    config.validate()?;
    Ok(config)
}

fn config_bytes(command: &str, config: &ProtocolConfig, attack: Option<AttackConfigBytes<'_>>) -> Result<Vec<u8>> {
    let scenario: serde_json::Value = serde_json::from_str(&config.scenario.to_json()?)?;
    Ok(serde_json::to_vec(&ProtocolConfigBytes {
        command,
        key_len: config.key_len,
        precision: config.precision,
        message_lengths: &config.message_lengths,
        seed: config.seed,
        convention: config.convention,
        tolerance_s: config.scenario.tolerance,
        noise: config.noise,
        identity_error_budget: config.identity_error_budget,
        scenario,
        attack,
    })?)
}

pub const SUMMARY_HEADER: &[&str] = &[
    "config_hash",
    "verifier",
    "message_len",
    "bit_errors",
    "identity_ok",
    "emit_time_s",
    "receipt_time_s",
    "round_trip_s",
    "expected_round_trip_s",
    "timing_ok",
    "accepted",
];

/// One row per verifier, each tagged with the run's config hash.
pub fn summary_csv(transcript: &ProtocolTranscript, config_hash: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for v in &transcript.verifiers {
        w.write_record([
            config_hash.to_string(),
            v.id.to_string(),
            v.message.len().to_string(),
            v.bit_errors.map(|e| e.to_string()).unwrap_or_default(),
            v.identity_ok.to_string(),
            fmt_f64(v.emit_time),
            opt(v.receipt_time),
            opt(v.round_trip),
            fmt_f64(v.expected_round_trip),
            v.timing_ok.to_string(),
            v.accepted().to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn write_transcript(dir: &Path, t: &ProtocolTranscript, manifest: &mut RunManifest) -> Result<()> {
    write_output(dir, "transcript.json", &t.to_json()?, manifest)?;
    write_output(dir, "events.jsonl", &t.log.to_jsonl(), manifest)?;
    let hash = manifest.config_hash.clone();
    write_output(dir, "summary.csv", &summary_csv(t, &hash)?, manifest)
}

fn cmd_run(args: &RunArgs) -> Result<Outcome> {
    let config = protocol_config(&args.protocol)?;
    let mut manifest = RunManifest::start("run", &config_bytes("run", &config, None)?, config.seed);
    let transcript = run_honest(&config)?;
    let dir = &args.out.out;
    prepare_dir(dir)?;
    write_transcript(dir, &transcript, &mut manifest)?;
    finish_manifest(dir, manifest)?;
    for v in &transcript.verifiers {
        let rt = v.round_trip.map_or("timeout".to_string(), |x| format!("{x:.9e} s"));
        outln!(
            "{}: round_trip={rt} expected={:.9e} s identity={} timing={}",
            v.id,
            v.expected_round_trip,
            verdict(v.identity_ok),
            verdict(v.timing_ok),
        );
    }
    if transcript.accepted {
        outln!("accept");
        Ok(Outcome::Accept)
    } else {
        outln!("reject");
        Ok(Outcome::Reject)
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "fail"
    }
}

pub fn report_csv(report: &AttackReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(AttackReport::csv_header())?;
    w.write_record(report.csv_row())?;
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn cmd_attack(args: &AttackArgs) -> Result<Outcome> {
    let config = protocol_config(&args.protocol)?;
    let params = AttackParams {
        positions: args.positions.clone(),
        basis: args.angle,
        copies: args.copies,
        grid: args.grid,
    };
    let spec = AttackSpec::from_registry(&args.strategy, &params, args.trials)?;
    let attack = AttackConfigBytes {
        strategy: &args.strategy,
        trials: args.trials,
        positions: &args.positions,
        angle: args.angle,
        copies: args.copies,
        grid: args.grid,
    };
    let mut manifest = RunManifest::start("attack", &config_bytes("attack", &config, Some(attack))?, config.seed);
    let dir = &args.out.out;
    let report = match spec.strategy {
        Strategy::KeyEstimation { copies, grid } => {
            let report = key_estimation_attack(
                copies,
                config.precision,
                config.key_len,
                grid,
                spec.trials,
                &SimRng::seed_from(config.seed),
            )?;
            prepare_dir(dir)?;
            report
        }
        _ => {
            let (first, report) = run_with_adversary(&config, &spec)?;
            prepare_dir(dir)?;
            write_output(dir, "transcript.json", &first.to_json()?, &mut manifest)?;
            write_output(dir, "events.jsonl", &first.log.to_jsonl(), &mut manifest)?;
            report
        }
    };
    write_output(dir, "report.json", &report.to_json()?, &mut manifest)?;
    write_output(dir, "report.csv", &report_csv(&report)?, &mut manifest)?;
    finish_manifest(dir, manifest)?;
    let s = &report.success;
    let theory = report.theoretical.map_or("n/a".to_string(), |p| format!("{p:.6e}"));
    outln!(
        "{}: {} of {} successful (p_hat={:.6e}, 3σ interval [{:.6e}, {:.6e}], theory {theory})",
        report.strategy,
        s.successes,
        s.trials,
        s.p_hat,
        s.ci_low,
        s.ci_high
    );
    for v in &report.per_verifier {
        outln!(
            "  {}: detected {} (identity {}, timing {})",
            v.id,
            v.detections,
            v.identity_rejects,
            v.timing_rejects
        );
    }
    Ok(Outcome::Done)
}
