//! Command-line parsing and dispatch.
//!
//! Exit codes: 0 when every pass/fail verdict passed, 1 when at least one
//! failed (the report is still written), 2 on input or configuration errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use strongweights_core::theorems::{
    campaign_instance, resolve_theorems, run_campaign, CampaignConfig, Status, VerdictReport,
};
use strongweights_core::{Error, Result};

use crate::report::{verdicts_to_csv, Report};
use crate::spec::{parse_spec, InstanceSpec, TaskKind, TaskSpec};
use crate::tasks::{plot_series, run_task, series_to_csv, verify_options, RunOptions};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "STRONGWEIGHTS_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "strongweights", version, about = "Strong Muckenhoupt weights on grid measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random instance spec with explicit grid, masses and weight.
    Gen(Flags),
    /// Certified intervals for the weight constants.
    Constants(Flags),
    /// Maximal function of the weight on a refined lattice.
    Maximal(Flags),
    /// Rising-sun decomposition of the weight at a level.
    RisingSun(Flags),
    /// Run theorem verifiers on a spec instance.
    Verify(Flags),
    /// Seeded random campaign over generated instances.
    Suite(Flags),
    /// Write (x, y) series for plotting.
    ExportPlot(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Instance spec (TOML); for `suite`, an optional campaign config.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub depth: Option<u32>,
    /// Constant, maximal family or theorem to run; repeatable.
    #[arg(long)]
    pub variant: Vec<String>,
    /// Report path (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Verdict table path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Omit timestamps and wall times so output is byte-stable.
    #[arg(long)]
    pub deterministic: bool,
    /// Cells per axis for `gen` and `suite`.
    #[arg(long)]
    pub max_cells: Option<usize>,
    #[arg(long)]
    pub slack: Option<f64>,
    /// Level of the rising-sun decomposition.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Number of campaign instances.
    #[arg(long)]
    pub count: Option<usize>,
}

const DEFAULT_SLACK: f64 = 1e-12;

/// Parses arguments and runs; returns the exit code. Diagnostics go to
/// standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io { path: "<stdout>".into(), message: e.to_string() }),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })
}

fn load_spec(path: &Path) -> Result<InstanceSpec> {
    let text = read_file(path)?;
    parse_spec(&text).map_err(|e| match e {
        Error::Parse { line, column, message } => {
            Error::Parse { line, column, message: format!("{}: {message}", path.display()) }
        }
        other => other,
    })
}

fn check_p(p: Option<f64>) -> Result<()> {
    match p {
        Some(p) if !(p > 1.0) || !p.is_finite() => {
            Err(Error::InvalidInput("p must exceed 1 for A_p*; use a1 task for A_1*".into()))
        }
        _ => Ok(()),
    }
}

fn check_flags(f: &Flags) -> Result<()> {
    check_p(f.p)?;
    if let Some(t) = f.tol {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("--tol must be positive, got {t}")));
        }
    }
    if let Some(s) = f.slack {
        // Negative values tighten every check; useful to exercise the
        // failure path on instances that satisfy the theorems.
        if !(s > -1.0) || !s.is_finite() {
            return Err(Error::InvalidInput(format!("--slack must be finite and above -1, got {s}")));
        }
    }
    if let Some(l) = f.lambda {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidInput(format!("--lambda must be positive and finite, got {l}")));
        }
    }
    if f.max_cells == Some(0) {
        return Err(Error::InvalidInput("--max-cells must be positive".into()));
    }
    Ok(())
}

fn default_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("{THREADS_ENV} must be a nonnegative integer, got '{s}'"))),
        Err(_) => Ok(0),
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Gen(f) => gen(f),
        Command::Constants(f) => spec_command(f, TaskKind::Constants, "constants"),
        Command::Maximal(f) => spec_command(f, TaskKind::Maximal, "maximal"),
        Command::RisingSun(f) => spec_command(f, TaskKind::RisingSun, "rising-sun"),
        Command::Verify(f) => spec_command(f, TaskKind::Verify, "verify"),
        Command::Suite(f) => suite(f),
        Command::ExportPlot(f) => export_plot(f),
    }
}

fn require_spec(f: &Flags) -> Result<InstanceSpec> {
    let path = f.spec.as_deref().ok_or_else(|| Error::InvalidInput("--spec is required".into()))?;
    load_spec(path)
}

/// Flags override the matching field of every task of the command's kind;
/// with no such task in the spec, one is built from the flags alone.
fn tasks_for(spec: &InstanceSpec, kind: TaskKind, f: &Flags) -> Vec<TaskSpec> {
    let mut tasks: Vec<TaskSpec> = spec.tasks().filter(|t| t.kind == kind).cloned().collect();
    if tasks.is_empty() {
        tasks.push(TaskSpec::new(kind));
    }
    for t in &mut tasks {
        t.p = f.p.or(t.p);
        t.tol = f.tol.or(t.tol);
        t.depth = f.depth.or(t.depth);
        t.lambda = f.lambda.or(t.lambda);
        if !f.variant.is_empty() {
            t.variants = f.variant.clone();
        }
    }
    tasks
}

fn exit_code(verdicts: &[VerdictReport]) -> i32 {
    if verdicts.iter().any(|v| v.status == Status::Fail) {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

fn spec_command(f: &Flags, kind: TaskKind, name: &str) -> Result<i32> {
    check_flags(f)?;
    let spec = require_spec(f)?;
    let tasks = tasks_for(&spec, kind, f);
    for t in &tasks {
        match kind {
            TaskKind::Verify if t.p.is_none() => return Err(Error::InvalidInput("verify needs --p".into())),
            TaskKind::RisingSun if t.lambda.is_none() => {
                return Err(Error::InvalidInput("rising-sun needs --lambda".into()))
            }
            _ => {}
        }
    }
    let built = spec.build()?;
    let opts = RunOptions {
        seed: f.seed.unwrap_or(0),
        slack: f.slack.unwrap_or(DEFAULT_SLACK),
        deterministic: f.deterministic,
    };
    let config = json!({
        "spec": serde_json::to_value(&spec).expect("spec serializes"),
        "tasks": serde_json::to_value(&tasks).expect("tasks serialize"),
        "seed": opts.seed,
        "slack": opts.slack,
    });
    let mut report = Report::new(name, config, f.deterministic);
    let mut verdicts = Vec::new();
    for (i, t) in tasks.iter().enumerate() {
        let out = run_task(&built, t, i, &opts)?;
        report.results.extend(out.results);
        verdicts.extend(out.verdicts);
    }
    if kind == TaskKind::Verify {
        report.summary = Some(verdict_summary(&verdicts));
    }
    finish(f, &report, &verdicts)
}

fn verdict_summary(verdicts: &[VerdictReport]) -> Value {
    let count = |s: Status| verdicts.iter().filter(|v| v.status == s).count();
    json!({
        "verdicts": verdicts.len(),
        "passed": count(Status::Pass),
        "failed": count(Status::Fail),
        "report_only": count(Status::ReportOnly),
        "flagged": verdicts.iter().filter(|v| v.flagged).count(),
    })
}

/// Writes the report (and CSV when asked) and picks the exit code.
fn finish(f: &Flags, report: &Report, verdicts: &[VerdictReport]) -> Result<i32> {
    emit(f.out.as_deref(), &report.to_json()?)?;
    if let Some(path) = &f.csv {
        write_file(path, &verdicts_to_csv(verdicts)?)?;
    }
    let code = exit_code(verdicts);
    if code == EXIT_VIOLATION {
        let failed: Vec<String> = verdicts
            .iter()
            .filter(|v| v.status == Status::Fail)
            .map(|v| format!("{} on instance {}", v.theorem, v.instance.id))
            .collect();
        eprintln!("violations: {}", failed.join(", "));
    }
    Ok(code)
}

fn campaign_config(f: &Flags) -> Result<CampaignConfig> {
    let mut config = match &f.spec {
        Some(path) => {
            let text = read_file(path)?;
            toml::from_str::<CampaignConfig>(&text).map_err(|e| {
                let (line, column) = e.span().map_or((1, 1), |s| {
                    let before = &text[..s.start];
                    (before.matches('\n').count() + 1, s.start - before.rfind('\n').map_or(0, |n| n + 1) + 1)
                });
                Error::Parse { line, column, message: format!("{}: {}", path.display(), e.message().trim()) }
            })?
        }
        None => CampaignConfig { threads: default_threads()?, ..CampaignConfig::default() },
    };
    if let Some(n) = f.count {
        config.count = n;
    }
    if let Some(n) = f.max_cells {
        config.max_cells_1d = n;
        config.max_cells_nd = n;
    }
    if let Some(p) = f.p {
        config.p_values = vec![p];
    }
    if !f.variant.is_empty() {
        config.theorems = resolve_theorems(&f.variant)?;
    }
    config.deterministic |= f.deterministic;
    config.options = verify_options(f.tol, f.slack.unwrap_or(DEFAULT_SLACK));
    config.validate()?;
    Ok(config)
}

fn suite(f: &Flags) -> Result<i32> {
    check_flags(f)?;
    let config = campaign_config(f)?;
    let seed = f.seed.unwrap_or(0);
    let outcome = run_campaign(&config, seed)?;
    let mut shown = serde_json::to_value(&config).expect("config serializes");
    // Thread count does not affect results; keep it out of the report so
    // the bytes do not depend on the machine.
    if let Value::Object(m) = &mut shown {
        m.remove("threads");
        m.insert("slack".into(), json!(config.options.slack));
        m.insert("tol".into(), json!(config.options.search.tol));
        m.insert("seed".into(), json!(seed));
    }
    let mut report = Report::new("suite", shown, config.deterministic);
    report.results = outcome.verdicts.iter().map(|v| serde_json::to_value(v).expect("verdicts serialize")).collect();
    report.summary = Some(serde_json::to_value(&outcome.summary).expect("summary serializes"));
    finish(f, &report, &outcome.verdicts)
}

fn gen(f: &Flags) -> Result<i32> {
    check_flags(f)?;
    let cells = f.max_cells.unwrap_or(8);
    let p = f.p.unwrap_or(2.0);
    let config = CampaignConfig {
        max_cells_1d: cells,
        max_cells_nd: cells,
        p_values: vec![p],
        ..CampaignConfig::default()
    };
    config.validate()?;
    let inst = campaign_instance(&config, f.seed.unwrap_or(0), 0)?;
    let mut verify = TaskSpec::new(TaskKind::Verify);
    verify.p = Some(p);
    let mut constants = TaskSpec::new(TaskKind::Constants);
    constants.p = Some(p);
    let spec = InstanceSpec::explicit(&inst.mu, &inst.w, vec![constants, verify]);
    let header = format!("# generated by strongweights gen: {}\n", inst.fingerprint.generator);
    emit(f.out.as_deref(), &(header + &spec.to_toml()?))?;
    Ok(EXIT_OK)
}

fn export_plot(f: &Flags) -> Result<i32> {
    check_flags(f)?;
    let spec = require_spec(f)?;
    let p = f.p.or_else(|| spec.tasks().find_map(|t| t.p)).unwrap_or(2.0);
    let series = plot_series(&spec.build()?, p, f.tol)?;
    emit(f.out.as_deref(), &series_to_csv(&series)?)?;
    Ok(EXIT_OK)
}
