//! Cross-product sweeps. Each metric reads only the axes it depends on, so a
//! cell is one point of that metric's own sub-grid.
//!
//! Cells are keyed by the SHA-256 of their canonical JSON. Finished cells are
//! journaled to `sweep.partial.csv` as they complete; a rerun reuses every
//! row already present there or in `sweep.csv` and only computes the rest.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::path::Path;
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use qpv_core::adversary::{cipher_mixtures, key_estimation_attack, AttackSpec, Strategy};
use qpv_core::density::trace_distance;
use qpv_core::keys::neighbor_distance;
use qpv_core::protocol::{run_with_adversary, ProtocolConfig};
use qpv_core::spacetime::Scenario;
use qpv_core::SimRng;

use crate::manifest::{config_hash, RunManifest};
use crate::{finish_manifest, fmt_f64, prepare_dir, OutArgs, Outcome};

/// Verifier distance from the claimed position in generated shells, metres.
pub const SHELL_RADIUS_M: f64 = 3.0e5;

pub const CSV_NAME: &str = "sweep.csv";
pub const JOURNAL_NAME: &str = "sweep.partial.csv";

pub const HEADER: &[&str] = &[
    "metric",
    "T",
    "t",
    "r",
    "N",
    "k",
    "trials",
    "value",
    "ci_low",
    "ci_high",
    "expected",
    "config_hash",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Trace distance between neighbouring key states.
    NeighborDistance,
    /// Honest acceptance rate.
    Honest,
    /// Acceptance rate of a guessing impersonator.
    Guess,
    /// Per-qubit key-index recovery from `k` public-key copies.
    KeyEstimation,
    /// Trace distance between the cipher mixtures for bits 0 and 1.
    Secrecy,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::NeighborDistance => "neighbor-distance",
            Metric::Honest => "honest",
            Metric::Guess => "guess",
            Metric::KeyEstimation => "key-estimation",
            Metric::Secrecy => "secrecy",
        }
    }

    /// Axes this metric reads, in the fixed order T, t, r, N, k.
    fn axes(self) -> [bool; 5] {
        match self {
            Metric::NeighborDistance | Metric::Secrecy => [false, true, false, false, false],
            Metric::Honest | Metric::Guess => [true, true, true, true, false],
            Metric::KeyEstimation => [true, true, false, false, true],
        }
    }

    fn uses_trials(self) -> bool {
        !matches!(self, Metric::NeighborDistance | Metric::Secrecy)
    }
}

/// Parses `a..b` (inclusive), `a,b,c` or a single value.
pub fn parse_axis(s: &str) -> std::result::Result<Vec<u64>, String> {
    let num = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("{x:?}: {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        return Ok((a..=b).collect());
    }
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(num).collect()
}

/// Values of one grid axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis(pub Vec<u64>);

fn axis_arg(s: &str) -> std::result::Result<Axis, String> {
    parse_axis(s).map(Axis)
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Metrics to evaluate, comma separated.
    #[arg(long = "metric", value_enum, value_delimiter = ',', required = true)]
    pub metrics: Vec<Metric>,
    /// Register lengths.
    #[arg(long = "T", default_value = "32", value_parser = axis_arg)]
    pub key_len: Axis,
    /// Precision exponents.
    #[arg(long = "t", default_value = "10", value_parser = axis_arg)]
    pub precision: Axis,
    /// Message length per verifier.
    #[arg(long = "r", default_value = "16", value_parser = axis_arg)]
    pub message_len: Axis,
    /// Verifier counts; stations sit on a sphere around the claimed position.
    #[arg(long = "N", default_value = "3", value_parser = axis_arg)]
    pub verifiers: Axis,
    /// Public-key copies for key estimation.
    #[arg(long = "k", default_value = "1", value_parser = axis_arg)]
    pub copies: Axis,
    /// Monte-Carlo trials per cell.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Basis grid resolution for key estimation.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub metric: Metric,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub key_len: Option<u64>,
    #[serde(rename = "t", skip_serializing_if = "Option::is_none")]
    pub precision: Option<u64>,
    #[serde(rename = "r", skip_serializing_if = "Option::is_none")]
    pub message_len: Option<u64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub verifiers: Option<u64>,
    #[serde(rename = "k", skip_serializing_if = "Option::is_none")]
    pub copies: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    pub seed: u64,
}

impl Cell {
    pub fn hash(&self) -> String {
        config_hash(&serde_json::to_vec(self).expect("cell serializes"))
    }

    /// Seed for this cell's randomness, derived from the sweep seed and the
    /// cell's identity so that reordering the grid changes nothing.
    fn rng_seed(&self) -> u64 {
        let hash = self.hash();
        let stream = u64::from_str_radix(&hash[..16], 16).expect("hex digest");
        SimRng::seed_from(self.seed).fork(stream).seed()
    }
}

/// Every cell in deterministic grid order. Cells with `r > T` are dropped and
/// counted.
pub fn expand(args: &SweepArgs) -> Result<(Vec<Cell>, usize)> {
    if args.metrics.is_empty() {
        bail!("empty grid: no metrics");
    }
    let axes: [&[u64]; 5] = [
        &args.key_len.0,
        &args.precision.0,
        &args.message_len.0,
        &args.verifiers.0,
        &args.copies.0,
    ];
    let names = ["T", "t", "r", "N", "k"];
    let mut cells = Vec::new();
    let mut skipped = 0;
    let mut seen = Vec::new();
    for &metric in &args.metrics {
        if seen.contains(&metric) {
            continue;
        }
        seen.push(metric);
        let used = metric.axes();
        let mut points: Vec<[Option<u64>; 5]> = vec![[None; 5]];
        for (i, axis) in axes.iter().enumerate() {
            if !used[i] {
                continue;
            }
            if axis.is_empty() {
                bail!("empty grid: axis {} has no values", names[i]);
            }
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p;
                        q[i] = Some(v);
                        q
                    })
                })
                .collect();
        }
        for p in points {
            if let (Some(t_len), Some(r)) = (p[0], p[2]) {
                if r > t_len {
                    skipped += 1;
                    continue;
                }
            }
            cells.push(Cell {
                metric,
                key_len: p[0],
                precision: p[1],
                message_len: p[2],
                verifiers: p[3],
                copies: p[4],
                trials: metric.uses_trials().then_some(args.trials),
                grid: (metric == Metric::KeyEstimation).then_some(args.grid),
                seed: args.seed,
            });
        }
    }
    if cells.is_empty() {
        bail!("empty grid: every cell was skipped (r > T)");
    }
    Ok((cells, skipped))
}

/// One evaluated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub value: f64,
    pub ci: Option<(f64, f64)>,
    pub expected: Option<f64>,
}

fn narrow<T: TryFrom<u64>>(x: Option<u64>, name: &str) -> Result<T> {
    let v = x.with_context(|| format!("cell lacks {name}"))?;
    T::try_from(v).map_err(|_| anyhow::anyhow!("{name} = {v} out of range"))
}

pub fn evaluate(cell: &Cell) -> Result<CellResult> {
    let t: u32 = narrow(cell.precision, "t")?;
    Ok(match cell.metric {
        Metric::NeighborDistance => {
            if t == 0 || t > qpv_core::keys::MAX_PRECISION {
                bail!("t = {t} outside 1..={}", qpv_core::keys::MAX_PRECISION);
            }
            CellResult {
                value: neighbor_distance(t),
                ci: None,
                expected: Some((std::f64::consts::PI / 2f64.powi(t as i32)).sin()),
            }
        }
        Metric::Secrecy => {
            let r0 = cipher_mixtures(t, false)?;
            let r1 = cipher_mixtures(t, true)?;
            CellResult {
                value: trace_distance(&r0, &r1)?,
                ci: None,
                expected: Some(0.0),
            }
        }
        Metric::Honest | Metric::Guess => {
            let n: usize = narrow(cell.verifiers, "N")?;
            let scenario = Scenario::shell(n, SHELL_RADIUS_M)?;
            let config = ProtocolConfig::new(
                scenario,
                narrow(cell.key_len, "T")?,
                t,
                narrow(cell.message_len, "r")?,
                cell.rng_seed(),
            );
            let strategy = if cell.metric == Metric::Honest {
                Strategy::None
            } else {
                Strategy::Guess
            };
            let spec = AttackSpec::new(strategy, narrow(cell.trials, "trials")?);
            let (_, report) = run_with_adversary(&config, &spec)?;
            CellResult {
                value: report.success.p_hat,
                ci: Some((report.success.ci_low, report.success.ci_high)),
                expected: report.theoretical,
            }
        }
        Metric::KeyEstimation => {
            let report = key_estimation_attack(
                narrow(cell.copies, "k")?,
                t,
                narrow(cell.key_len, "T")?,
                cell.grid.unwrap_or(64),
                narrow(cell.trials, "trials")?,
                &SimRng::seed_from(cell.rng_seed()),
            )?;
            CellResult {
                value: report.success.p_hat,
                ci: Some((report.success.ci_low, report.success.ci_high)),
                expected: report.theoretical,
            }
        }
    })
}

pub fn row(cell: &Cell, result: &CellResult) -> Vec<String> {
    let opt = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
    vec![
        cell.metric.name().to_string(),
        opt(cell.key_len),
        opt(cell.precision),
        opt(cell.message_len),
        opt(cell.verifiers),
        opt(cell.copies),
        opt(cell.trials),
        fmt_f64(result.value),
        result.ci.map(|c| fmt_f64(c.0)).unwrap_or_default(),
        result.ci.map(|c| fmt_f64(c.1)).unwrap_or_default(),
        result.expected.map(fmt_f64).unwrap_or_default(),
        cell.hash(),
    ]
}

/// Rows already on disk, keyed by config hash.
fn load_rows(path: &Path, rows: &mut HashMap<String, Vec<String>>) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    if r.headers()?.iter().ne(HEADER.iter().copied()) {
        bail!("{} has an unexpected header; remove it to start over", path.display());
    }
    for rec in r.records() {
        // A torn final line from an interrupted run is simply recomputed.
        let Ok(rec) = rec else { continue };
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        if fields.len() == HEADER.len() {
            rows.insert(fields[HEADER.len() - 1].clone(), fields);
        }
    }
    Ok(())
}

fn csv_line(fields: &[String]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fields)?;
    Ok(w.into_inner()?)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Outcome> {
    let (cells, skipped) = expand(args)?;
    if skipped > 0 {
        eprintln!("skipped {skipped} cells with r > T");
    }
    let dir = &args.out.out;
    let spec = serde_json::to_vec(&cells)?;
    let mut manifest = RunManifest::start("sweep", &spec, args.seed);
    prepare_dir(dir)?;
    let csv_path = dir.join(CSV_NAME);
    let journal_path = dir.join(JOURNAL_NAME);

    let mut done = HashMap::new();
    load_rows(&csv_path, &mut done)?;
    load_rows(&journal_path, &mut done)?;
    let todo: Vec<&Cell> = cells.iter().filter(|c| !done.contains_key(&c.hash())).collect();
    let reused = cells.len() - todo.len();

    use std::io::Write;
    let fresh_journal = !journal_path.exists();
    let mut journal = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&journal_path)
        .with_context(|| format!("opening {}", journal_path.display()))?;
    if fresh_journal {
        journal.write_all(&csv_line(&HEADER.iter().map(|s| s.to_string()).collect::<Vec<_>>())?)?;
    }
    let journal = Mutex::new(journal);

    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build()?;
    let computed: Vec<(String, Vec<String>)> = pool.install(|| {
        todo.par_iter()
            .map(|cell| -> Result<(String, Vec<String>)> {
                let hash = cell.hash();
                let result = evaluate(cell).with_context(|| format!("cell {}", serde_json::json!(cell)))?;
                let fields = row(cell, &result);
                let line = csv_line(&fields)?;
                let mut j = journal.lock().expect("journal lock");
                j.write_all(&line)?;
                j.flush()?;
                Ok((hash, fields))
            })
            .collect::<Result<_>>()
    })?;
    done.extend(computed);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for cell in &cells {
        w.write_record(&done[&cell.hash()])?;
    }
    let tmp = dir.join(format!("{CSV_NAME}.tmp"));
    fs::write(&tmp, w.into_inner()?)?;
    fs::rename(&tmp, &csv_path)?;
    drop(journal);
    fs::remove_file(&journal_path).ok();
    manifest.outputs.push(CSV_NAME.into());
    finish_manifest(dir, manifest)?;
    outln!(
        "{} cells ({} computed, {reused} reused) -> {}",
        cells.len(),
        cells.len() - reused,
        csv_path.display()
    );
    Ok(Outcome::Done)
}
