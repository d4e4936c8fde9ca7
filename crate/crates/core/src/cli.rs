//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a validated requirement failed, 2 invalid
//! input, 3 runtime failure (for example a setting pair with no kept trials).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{parse_config, SimulationSection, SourceKind};
use crate::config_validator::{all_pass, validate, RequirementCheck, Status};
use crate::error::{invalid, Error, Result};
use crate::lhv::{evaluate_model, paper_model, LhvModel};
use crate::montecarlo::{estimate_chsh, run, run_with_threads, split_fractions, ChshEstimate, RunConfig, Source, TallySet};
use crate::phys_model::{qm_chsh, ChshValue, PhaseConfig};
use crate::postselect::Scheme;
use crate::strategy_search::{extremal_beta, verify_fake_violation, ConstraintClass, SearchResult};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REQUIREMENT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "etbell", version, about = "Energy-time Bell-CHSH simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Franson,
    Genuine,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Franson => Scheme::Franson,
            SchemeArg::Genuine => Scheme::Genuine,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClassArg {
    PathDependent,
    PathFixed,
}

impl From<ClassArg> for ConstraintClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::PathDependent => ConstraintClass::PathSettingDependent,
            ClassArg::PathFixed => ConstraintClass::PathFixed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo run with postselection and CHSH estimate.
    Simulate(SimulateArgs),
    /// Extreme CHSH values over deterministic strategies.
    Enumerate {
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forge a target CHSH value with the two-table model.
    Fake {
        #[arg(long, allow_hyphen_values = true)]
        target: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the [geometry] section of a config file.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    /// Config file whose [simulation] section supplies defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long, value_enum)]
    source: Option<SourceKind>,
    /// a0,a1,b0,b1 in radians.
    #[arg(long, allow_hyphen_values = true)]
    phases: Option<String>,
    #[arg(long, conflicts_with = "model_file")]
    p: Option<f64>,
    #[arg(long)]
    model_file: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// p00,p01,p10,p11
    #[arg(long)]
    setting_probs: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Omit the timestamp and wall time so identical runs give identical bytes.
    #[arg(long)]
    no_timestamp: bool,
}

/// Output of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub tallies: TallySet,
    pub estimate: ChshEstimate,
    pub split_fractions: [f64; 4],
    pub keep_fractions: [f64; 4],
    pub exact: Option<ChshValue>,
    pub wall_time_s: Option<f64>,
    pub timestamp: Option<u64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("bad report: {e}")))
    }

    /// `section,key,value` rows, numbers to 15 significant digits.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut row = |section: &str, key: String, value: String| {
            w.write_record([section, &key, &value]).expect("in-memory csv write");
        };
        let num = |x: f64| format!("{x:.14e}");
        const PAIRS: [&str; 4] = ["00", "01", "10", "11"];
        const OUTCOMES: [&str; 4] = ["pp", "pm", "mp", "mm"];
        const PATTERNS: [&str; 4] = ["SS", "SL", "LS", "LL"];

        row("meta", "schema_version".into(), self.schema_version.to_string());
        row("config", "n_trials".into(), self.config.n_trials.to_string());
        row("config", "seed".into(), self.config.seed.to_string());
        row("config", "scheme".into(), self.config.scheme.to_string());
        match &self.config.source {
            Source::Quantum { phases } => {
                row("config", "source".into(), "qm".into());
                for (k, v) in ["phi_a0", "phi_a1", "phi_b0", "phi_b1"].iter().zip(phases.as_array()) {
                    row("config", k.to_string(), num(v));
                }
            }
            Source::Lhv { model } => {
                row("config", "source".into(), "lhv".into());
                row("config", "model_sets".into(), model.len().to_string());
            }
        }
        for (k, p) in PAIRS.iter().zip(self.config.setting_probs) {
            row("config", format!("setting_prob_{k}"), num(p));
        }
        row("estimate", "beta_hat".into(), num(self.estimate.beta_hat));
        row("estimate", "stderr".into(), num(self.estimate.stderr));
        for (k, pair) in PAIRS.iter().enumerate() {
            row("estimate", format!("correlator_{pair}"), num(self.estimate.correlators[k]));
            row("estimate", format!("correlator_stderr_{pair}"), num(self.estimate.correlator_stderr[k]));
            row("estimate", format!("kept_{pair}"), self.estimate.kept[k].to_string());
        }
        for (k, pair) in PAIRS.iter().enumerate() {
            for (o, out) in OUTCOMES.iter().enumerate() {
                row("tallies", format!("kept_{pair}_{out}"), self.tallies.kept[k][o].to_string());
            }
            row("tallies", format!("rejected_{pair}"), self.tallies.rejected[k].to_string());
            for (o, pat) in PATTERNS.iter().enumerate() {
                row("tallies", format!("pattern_{pair}_{pat}"), self.tallies.slot_patterns[k][o].to_string());
            }
        }
        for (k, pat) in PATTERNS.iter().enumerate() {
            row("split", pat.to_string(), num(self.split_fractions[k]));
        }
        for (k, pair) in PAIRS.iter().enumerate() {
            row("keep", pair.to_string(), num(self.keep_fractions[k]));
        }
        if let Some(exact) = &self.exact {
            row("exact", "beta".into(), num(exact.beta));
            for (k, pair) in PAIRS.iter().enumerate() {
                row("exact", format!("correlator_{pair}"), num(exact.components[k]));
            }
        }
        if let Some(t) = self.wall_time_s {
            row("meta", "wall_time_s".into(), num(t));
        }
        if let Some(t) = self.timestamp {
            row("meta", "timestamp".into(), t.to_string());
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
    }
}

/// Envelope for the non-simulate reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandReport<T> {
    pub schema_version: u32,
    pub command: String,
    pub result: T,
}

fn envelope<T: Serialize>(command: &str, result: T) -> String {
    let report = CommandReport { schema_version: SCHEMA_VERSION, command: command.into(), result };
    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
    s.push('\n');
    s
}

/// Failure with the exit code it maps to.
struct Failure {
    code: i32,
    error: Error,
}

fn usage(error: Error) -> Failure {
    Failure { code: EXIT_USAGE, error }
}

fn runtime(error: Error) -> Failure {
    Failure { code: EXIT_RUNTIME, error }
}

fn read_file(path: &PathBuf) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(invalid(format!("cannot read {}: {e}", path.display()))))
}

fn emit(out: &Option<PathBuf>, body: &str, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, body)
            .map_err(|e| runtime(invalid(format!("cannot write {}: {e}", path.display())))),
        None => stdout.write_all(body.as_bytes()).map_err(|e| runtime(invalid(e.to_string()))),
    }
}

fn parse_probs(s: &str) -> Result<[f64; 4]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| invalid(format!("bad probability {x:?}: {e}"))))
        .collect::<Result<_>>()?;
    v.try_into().map_err(|v: Vec<f64>| invalid(format!("expected 4 setting probabilities, got {}", v.len())))
}

fn build_run_config(args: &SimulateArgs) -> Result<RunConfig> {
    let section = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?.simulation.unwrap_or_default()
        }
        None => SimulationSection::default(),
    };
    let scheme = args.scheme.map(Scheme::from).or(section.scheme).unwrap_or(Scheme::Genuine);
    let kind = args.source.or(section.source).unwrap_or(SourceKind::Qm);
    let source = match kind {
        SourceKind::Qm => {
            let phases = match (&args.phases, section.phases) {
                (Some(s), _) => PhaseConfig::parse(s)?,
                (None, Some(v)) => PhaseConfig::try_from(v)?,
                (None, None) => PhaseConfig::optimal(),
            };
            Source::Quantum { phases }
        }
        SourceKind::Lhv => {
            let model_path = args.model_file.clone().or_else(|| section.model_file.clone().map(PathBuf::from));
            let model = match (args.p, model_path) {
                (Some(p), _) => paper_model(p)?,
                (None, Some(path)) => {
                    let text = fs::read_to_string(&path)
                        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
                    LhvModel::from_text(&text)?
                }
                (None, None) => match section.p {
                    Some(p) => paper_model(p)?,
                    None => return Err(invalid("--source lhv needs --p or --model-file")),
                },
            };
            Source::Lhv { model }
        }
    };
    let mut config = RunConfig::new(
        args.trials.or(section.trials).unwrap_or(100_000),
        args.seed.or(section.seed).unwrap_or(0),
        source,
        scheme,
    );
    if let Some(s) = &args.setting_probs {
        config.setting_probs = parse_probs(s)?;
    } else if let Some(p) = section.setting_probs {
        config.setting_probs = p;
    }
    if args.threads == Some(0) {
        return Err(invalid("--threads must be at least 1"));
    }
    config.validate()?;
    Ok(config)
}

/// Runs a simulation and assembles its report.
pub fn simulate_report(config: RunConfig, threads: Option<usize>, with_timestamp: bool) -> Result<RunReport> {
    let started = Instant::now();
    let tallies = match threads {
        Some(n) => run_with_threads(&config, n)?,
        None => run(&config)?,
    };
    let estimate = estimate_chsh(&tallies)?;
    let split = split_fractions(&tallies)?;
    let exact = match &config.source {
        Source::Quantum { phases } => Some(qm_chsh(phases)),
        Source::Lhv { model } => evaluate_model(model, config.scheme).ok().map(|e| e.chsh),
    };
    let keep_fractions = tallies.keep_fractions();
    let (wall_time_s, timestamp) = if with_timestamp {
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        (Some(started.elapsed().as_secs_f64()), Some(ts))
    } else {
        (None, None)
    };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config,
        tallies,
        estimate,
        split_fractions: split,
        keep_fractions,
        exact,
        wall_time_s,
        timestamp,
    })
}

fn cmd_simulate(args: SimulateArgs, stdout: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let config = build_run_config(&args).map_err(usage)?;
    let report = simulate_report(config, args.threads, !args.no_timestamp).map_err(runtime)?;
    let body = match args.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    let _ = writeln!(stdout, "beta_hat = {:.6} ± {:.6}", report.estimate.beta_hat, report.estimate.stderr);
    emit(&args.out, &body, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_enumerate(class: ClassArg, scheme: SchemeArg, out: Option<PathBuf>, stdout: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let result: SearchResult = extremal_beta(class.into(), scheme.into());
    let _ = writeln!(stdout, "max_beta = {:.6} min_beta = {:.6}", result.max_beta, result.min_beta);
    emit(&out, &envelope("enumerate", &result), stdout)?;
    Ok(EXIT_OK)
}

fn cmd_fake(target: f64, trials: u64, seed: u64, out: Option<PathBuf>, stdout: &mut dyn Write) -> std::result::Result<i32, Failure> {
    if !(-4.0..=4.0).contains(&target) {
        return Err(usage(invalid(format!("target beta must lie in [-4, 4], got {target}"))));
    }
    if trials == 0 {
        return Err(usage(invalid("--trials must be at least 1")));
    }
    let report = verify_fake_violation(target, trials, seed).map_err(runtime)?;
    let _ = writeln!(
        stdout,
        "p = {:.6} exact_beta = {:.6} beta_hat = {:.6} ± {:.6}",
        report.p, report.exact.chsh.beta, report.estimate.beta_hat, report.estimate.stderr
    );
    emit(&out, &envelope("fake", &report), stdout)?;
    Ok(EXIT_OK)
}

fn cmd_validate(config: PathBuf, out: Option<PathBuf>, stdout: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let text = read_file(&config)?;
    let geometry = parse_config(&text)
        .map_err(usage)?
        .geometry
        .ok_or_else(|| usage(Error::Config("missing [geometry] section".into())))?;
    let checks: Vec<RequirementCheck> = validate(&geometry).map_err(usage)?;
    for c in &checks {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Info => "info",
        };
        let margin = c.margin.map(|m| format!(" margin={m:.6}")).unwrap_or_default();
        let _ = writeln!(stdout, "{:<14} {status}{margin} {}", c.id, c.detail);
    }
    emit(&out, &envelope("validate", &checks), stdout)?;
    Ok(if all_pass(&checks) { EXIT_OK } else { EXIT_REQUIREMENT_FAILED })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args, stdout),
        Command::Enumerate { class, scheme, out } => cmd_enumerate(class, scheme, out, stdout),
        Command::Fake { target, trials, seed, out } => cmd_fake(target, trials, seed, out, stdout),
        Command::Validate { config, out } => cmd_validate(config, out, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.error);
            f.code
        }
    }
}
