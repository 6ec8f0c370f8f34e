//! Command-line entry points. Exit status: 0 success, 1 invalid input or
//! configuration, 2 failure while running.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adaptive::Objective;
use crate::combiner::CombinationWeights;
use crate::eeg::PreprocessConfig;
use crate::error::{Error, Result};
use crate::harness::{
    decode_brain_scores, decoder_sweep, derive_seed, estimate_synthesis_params, generate_raw_trials, generate_sessions,
    run_irf, run_rrf, Dataset, EmissionMode, ExperimentReport, Method, WeightPolicy,
};
use crate::harness::AssignmentSource;
use crate::io::{
    load_bundle, read_raw_trials, resolve_data_dir, save_bundle, write_raw_trials, write_report, RunConfig, Summary, DATA_ENV,
    RAW_FILE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "brainrf", version, about = "Relevance feedback with brain, click and pseudo-relevance signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Re-rank unseen documents after every examined one.
    RunIrf(RfArgs),
    /// Re-rank the examined list once each session ends.
    RunRrf(RfArgs),
    /// Iterative feedback with weights searched per step, against fixed weights.
    RunAdaptive(AdaptiveArgs),
    /// Decoder AUC: cross-validated over raw trials, or split-by-timepoint over features.
    DecodeEval(DecodeArgs),
    /// Write a synthetic dataset bundle.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Dataset directory (default: ${BRAINRF_DATA}).
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSON run configuration, or a summary.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RfArgs {
    #[command(flatten)]
    common: Common,
    /// Weights as theta_bs,theta_c,theta_p.
    #[arg(long)]
    weights: Option<CombinationWeights>,
    /// Feedback documents kept for expansion.
    #[arg(long)]
    k: Option<usize>,
    /// Feedback share of the final score.
    #[arg(long)]
    c: Option<f64>,
    /// Use click-count and bad-click dependent weights.
    #[arg(long)]
    scenario: bool,
    /// Cluster documents with k-means instead of ingested labels.
    #[arg(long)]
    kmeans: Option<usize>,
}

#[derive(Debug, Args)]
struct AdaptiveArgs {
    #[command(flatten)]
    rf: RfArgs,
    /// Objective for the weight search: ndcg@K or map.
    #[arg(long)]
    objective: Option<Objective>,
    /// Fit synthesis parameters to the dataset first.
    #[arg(long)]
    estimate_params: bool,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    #[command(flatten)]
    common: Common,
    /// Post-stimulus window lengths in ms.
    #[arg(long, value_delimiter = ',')]
    post_ms: Vec<f64>,
    /// Resampling rates in Hz.
    #[arg(long, value_delimiter = ',')]
    rate: Vec<f64>,
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Total sessions, split evenly over users.
    #[arg(long)]
    sessions: Option<usize>,
    #[arg(long)]
    users: Option<usize>,
    /// features, scores or raw.
    #[arg(long)]
    emission: Option<String>,
    /// Also write this many labelled raw EEG trials.
    #[arg(long)]
    raw_trials: Option<usize>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_INVALID
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::RunIrf(a) => run_feedback(RunKind::Irf, &a, None, false),
        Command::RunRrf(a) => run_feedback(RunKind::Rrf, &a, None, false),
        Command::RunAdaptive(a) => run_feedback(RunKind::Adaptive, &a.rf, a.objective, a.estimate_params),
        Command::DecodeEval(a) => decode_eval(&a),
        Command::Synth(a) => synth(&a),
    }
}

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn rf_config(a: &RfArgs, rrf: bool) -> Result<RunConfig> {
    let mut cfg = base_config(&a.common)?;
    if let Some(w) = a.weights {
        if rrf {
            cfg.rrf_weights = w;
        } else {
            cfg.irf_weights = w;
        }
    }
    if let Some(k) = a.k {
        cfg.expansion.k = k;
    }
    if let Some(c) = a.c {
        cfg.expansion.c = c;
    }
    cfg.scenario_policy |= a.scenario;
    if let Some(n) = a.kmeans {
        cfg.clusters = AssignmentSource::KMeans { clusters: n };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn load(common: &Common) -> Result<Dataset> {
    let dir = resolve_data_dir(common.data.clone())?;
    log::info!("loading {}", dir.display());
    load_bundle(&dir)
}

fn embedded(command: &str, cfg: &RunConfig) -> serde_json::Value {
    let mut v = cfg.to_json();
    v.as_object_mut()
        .expect("config is an object")
        .insert("command".into(), command.into());
    v
}

/// The configured weights and, when it differs, the same triple without the
/// brain channel.
fn methods(weights: CombinationWeights, scenario: bool) -> Vec<Method> {
    let fused = if scenario {
        Method {
            name: "fused".into(),
            policy: WeightPolicy::Scenario { base: weights },
        }
    } else {
        Method::fixed("fused", weights)
    };
    let mut out = vec![fused];
    if let Ok(ablated) = weights.without_brain() {
        if ablated != weights {
            out.push(Method::fixed("no-brain", ablated));
        }
    }
    out
}

fn finish(report: &ExperimentReport, command: &str, out: &Path) -> Result<()> {
    write_report(report, out)?;
    let summary = Summary::from_report(report);
    println!("{command}: {} rows ({} skipped) -> {}", summary.rows, summary.skipped_rows, out.display());
    for (m, vals) in summary.methods.iter().zip(&summary.aggregates) {
        let cells: Vec<String> = summary.columns.iter().zip(vals).map(|(c, v)| format!("{c}={v:.4}")).collect();
        println!("  {m}: {}", cells.join(" "));
    }
    println!("  fingerprint {}", summary.fingerprint);
    Ok(())
}

/// The three experiment commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Irf,
    Rrf,
    Adaptive,
}

impl RunKind {
    pub fn command(self) -> &'static str {
        match self {
            RunKind::Irf => "run-irf",
            RunKind::Rrf => "run-rrf",
            RunKind::Adaptive => "run-adaptive",
        }
    }
}

impl std::str::FromStr for RunKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim_start_matches("run-") {
            "irf" => Ok(RunKind::Irf),
            "rrf" => Ok(RunKind::Rrf),
            "adaptive" => Ok(RunKind::Adaptive),
            _ => Err(Error::Config(format!("unknown run kind {s}; use irf, rrf or adaptive"))),
        }
    }
}

/// Decodes brain scores and runs one experiment. The report embeds the fully
/// resolved configuration, so rerunning from it reproduces the report.
pub fn execute_run(kind: RunKind, data: &Dataset, config: &RunConfig) -> Result<ExperimentReport> {
    let mut cfg = config.clone();
    if kind == RunKind::Adaptive {
        cfg.adaptive.expansion = cfg.expansion;
    }
    cfg.validate()?;
    if kind != RunKind::Rrf {
        data.check_external_labels()?;
    }
    let decoded = decode_brain_scores(data, &cfg.decode_config())?;
    let eval = cfg.eval_config();
    let report = match kind {
        RunKind::Irf => run_irf(data, &decoded, &methods(cfg.irf_weights, cfg.scenario_policy), &eval)?,
        RunKind::Rrf => run_rrf(data, &decoded, &methods(cfg.rrf_weights, cfg.scenario_policy), &eval)?,
        RunKind::Adaptive => {
            if cfg.estimate_synthesis {
                cfg.adaptive.params = estimate_synthesis_params(data, &decoded, cfg.adaptive.params.n_synth)?;
                for w in cfg.adaptive.params.warnings() {
                    log::warn!("{w}");
                }
            }
            let methods = vec![
                Method {
                    name: "adaptive".into(),
                    policy: WeightPolicy::Adaptive {
                        config: cfg.adaptive.clone(),
                    },
                },
                Method::fixed("fixed", cfg.irf_weights),
            ];
            run_irf(data, &decoded, &methods, &eval)?
        }
    };
    Ok(report.with_config(embedded(kind.command(), &cfg)))
}

fn run_feedback(kind: RunKind, a: &RfArgs, objective: Option<Objective>, estimate: bool) -> Result<()> {
    let mut cfg = rf_config(a, kind == RunKind::Rrf)?;
    if let Some(o) = objective {
        cfg.adaptive.objective = o;
    }
    cfg.estimate_synthesis |= estimate;
    let data = load(&a.common)?;
    let report = execute_run(kind, &data, &cfg)?;
    finish(&report, kind.command(), &out_dir(&a.common, "brainrf-report"))
}

fn decode_eval(a: &DecodeArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    if !a.post_ms.is_empty() {
        cfg.sweep.post_ms = a.post_ms.clone();
    }
    if !a.rate.is_empty() {
        cfg.sweep.rate_hz = a.rate.clone();
    }
    if let Some(f) = a.folds {
        cfg.sweep.folds = f;
    }
    cfg.validate()?;
    let dir = resolve_data_dir(a.common.data.clone())?;
    let out = out_dir(&a.common, "brainrf-report");
    fs::create_dir_all(&out)?;
    let raw = dir.join(RAW_FILE);
    let result = if raw.exists() {
        let trials = read_raw_trials(&raw)?;
        let points = decoder_sweep(
            &trials,
            &PreprocessConfig::default(),
            &cfg.sweep.post_ms,
            &cfg.sweep.rate_hz,
            cfg.sweep.folds,
            &cfg.decode_config().decoder,
        )?;
        let mut tsv = String::from("post_ms\trate_hz\ttrials\tauc\n");
        for p in &points {
            tsv.push_str(&format!("{}\t{}\t{}\t{}\n", p.post_ms, p.rate_hz, p.trials, p.auc));
            println!("post {} ms, {} Hz: AUC {:.4} over {} trials", p.post_ms, p.rate_hz, p.auc, p.trials);
        }
        fs::write(out.join("decode.tsv"), tsv)?;
        serde_json::json!({ "kind": "cross-validated", "points": points })
    } else {
        let data = load_bundle(&dir)?;
        if data.features.is_none() {
            return Err(Error::input(format!(
                "{} has neither {RAW_FILE} nor feature files to decode",
                dir.display()
            )));
        }
        let auc = decode_brain_scores(&data, &cfg.decode_config())?.auc(&data)?;
        println!("split-by-timepoint AUC {auc:.4}");
        serde_json::json!({ "kind": "split-by-timepoint", "auc": auc })
    };
    let summary = serde_json::json!({ "result": result, "config": embedded("decode-eval", &cfg) });
    fs::write(out.join("decode.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}

fn parse_emission(s: &str) -> Result<EmissionMode> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| Error::Config(format!("unknown emission mode {s}; use features, scores or raw")))
}

/// Users and sessions per user for `total` sessions: the fewest users that
/// keep every user within the configured per-user count and divide `total`.
fn split_sessions(total: usize, users: Option<usize>, per_user: usize) -> Result<(usize, usize)> {
    if total == 0 {
        return Err(Error::Config("--sessions must be positive".into()));
    }
    if let Some(u) = users {
        if u == 0 || total % u != 0 {
            return Err(Error::Config(format!("{total} sessions cannot be split evenly over {u} users")));
        }
        return Ok((u, total / u));
    }
    let start = total.div_ceil(per_user.max(1));
    let u = (start..=total).find(|u| total % u == 0).expect("total divides itself");
    Ok((u, total / u))
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = base_config(&a.common)?;
    let g = &mut cfg.generator;
    if let Some(total) = a.sessions {
        let (u, per) = split_sessions(total, a.users, g.sessions_per_user)?;
        g.users = u;
        g.sessions_per_user = per;
    } else if let Some(u) = a.users {
        g.users = u;
    }
    if let Some(e) = &a.emission {
        g.emission = parse_emission(e)?;
    }
    cfg.validate()?;
    let dir = match (&a.common.out, &a.common.data) {
        (Some(d), _) | (None, Some(d)) => d.clone(),
        (None, None) => std::env::var_os(DATA_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("brainrf-data")),
    };
    let data = generate_sessions(&cfg.generator, cfg.seed)?;
    save_bundle(&data, &dir)?;
    if let Some(n) = a.raw_trials {
        let trials = generate_raw_trials(&cfg.generator, n, derive_seed(cfg.seed, 1))?;
        write_raw_trials(&dir.join(RAW_FILE), &trials)?;
    }
    fs::write(dir.join("synth.json"), serde_json::to_string_pretty(&embedded("synth", &cfg))? + "\n")?;
    let stats = crate::harness::cohort_stats(&data);
    println!(
        "synth: {} sessions, {:.2} examined, {:.2} clicks, {:.3} bad-click share -> {}",
        stats.sessions,
        stats.mean_examined,
        stats.mean_clicks,
        stats.bad_click_fraction,
        dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn session_split() {
        assert_eq!(split_sessions(200, None, 25).unwrap(), (8, 25));
        assert_eq!(split_sessions(7, None, 25).unwrap(), (1, 7));
        assert_eq!(split_sessions(31, None, 25).unwrap(), (31, 1));
        assert_eq!(split_sessions(30, Some(3), 25).unwrap(), (3, 10));
        assert!(split_sessions(30, Some(4), 25).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_cli(["brainrf", "run-irf", "--bogus"]), EXIT_INVALID);
        assert_eq!(run_cli(["brainrf"]), EXIT_INVALID);
        assert_eq!(run_cli(["brainrf", "--help"]), EXIT_OK);
    }

    #[test]
    fn bad_weights_exit_one() {
        assert_eq!(run_cli(["brainrf", "run-irf", "--data", "/nonexistent", "--weights", "0,0,0"]), EXIT_INVALID);
    }

    #[test]
    fn emission_names() {
        assert_eq!(parse_emission("Raw").unwrap(), EmissionMode::Raw);
        assert!(parse_emission("eeg").is_err());
    }
}
