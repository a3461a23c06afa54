//! `flr`: command-line runner for federated logistic regression experiments.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flr_core::experiment::{self, Mode, RunOptions, SweepAxis};
use flr_core::{AggregationRule, ErrorKind, ExperimentConfig, FlrError, Regime};

const DEFAULT_TRIM_ALPHA: f64 = 0.1;

#[derive(Parser, Debug)]
#[command(name = "flr", version, about = "Federated logistic regression with robust aggregation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check logistic-regression assumptions (VIF, Box-Tidwell, sample size, correlations).
    Screen(Common),
    /// Run the seeded experiment and write report.json.
    Run(Common),
    /// Repeat the experiment over values of one partition axis and write curve.csv.
    Sweep(SweepArgs),
    /// Run the experiment and write per-class coefficient importance.
    Importance(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Mean,
    Median,
    #[value(name = "trim_mean", alias = "trimmed_mean")]
    TrimMean,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    #[value(name = "iid_full")]
    IidFull,
    #[value(name = "noniid_full")]
    NoniidFull,
    #[value(name = "iid_sampled")]
    IidSampled,
    #[value(name = "noniid_sampled")]
    NoniidSampled,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::IidFull => Regime::IidFull,
            RegimeArg::NoniidFull => Regime::NoniidFull,
            RegimeArg::IidSampled => Regime::IidSampled,
            RegimeArg::NoniidSampled => Regime::NoniidSampled,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Federated,
    Centralized,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Target (label) column.
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated numeric feature columns.
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    /// CSV field separator (detected from the header when omitted).
    #[arg(long)]
    delimiter: Option<char>,
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
    /// Trim fraction for trim_mean.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    clients: Option<usize>,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long)]
    outlier_frac: Option<f64>,
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Global rounds T.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Prune features by VIF before training.
    #[arg(long)]
    screen_prune: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write per-round logs to trace.jsonl.
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Axis to vary: s, p_out or M.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Comma-separated rules to compare (default: the configured rule).
    #[arg(long, value_enum, value_delimiter = ',')]
    rules: Vec<RuleArg>,
}

#[derive(Debug)]
enum CliError {
    Core(FlrError),
    Output { path: PathBuf, source: std::io::Error },
}

impl From<FlrError> for CliError {
    fn from(e: FlrError) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Output { path, source } => write!(f, "cannot write {}: {source}", path.display()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => 1,
                ErrorKind::Data => 2,
                ErrorKind::Runtime => 3,
            },
            CliError::Output { .. } => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn rule_from(arg: RuleArg, alpha: Option<f64>) -> AggregationRule {
    match arg {
        RuleArg::Mean => AggregationRule::Mean,
        RuleArg::Median => AggregationRule::Median,
        RuleArg::TrimMean => AggregationRule::TrimmedMean { alpha: alpha.unwrap_or(DEFAULT_TRIM_ALPHA) },
    }
}

fn build_config(c: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &c.dataset {
        cfg.dataset.path = p.clone();
    }
    if let Some(t) = &c.target {
        cfg.dataset.target = t.clone();
    }
    if !c.features.is_empty() {
        cfg.dataset.features = c.features.clone();
    }
    if c.delimiter.is_some() {
        cfg.dataset.delimiter = c.delimiter;
    }
    match (c.rule, c.alpha) {
        (Some(rule), alpha) => {
            if alpha.is_some() && rule != RuleArg::TrimMean {
                return Err(FlrError::InvalidConfig("--alpha only applies to --rule trim_mean".into()).into());
            }
            cfg.fed.rule = rule_from(rule, alpha);
        }
        (None, Some(alpha)) => match cfg.fed.rule {
            AggregationRule::TrimmedMean { .. } => cfg.fed.rule = AggregationRule::TrimmedMean { alpha },
            _ => return Err(FlrError::InvalidConfig("--alpha only applies to --rule trim_mean".into()).into()),
        },
        (None, None) => {}
    }
    if let Some(m) = c.clients {
        cfg.partition.clients = m;
    }
    if let Some(s) = c.sample_size {
        cfg.partition.sample_size = s;
    }
    if let Some(p) = c.outlier_frac {
        cfg.partition.outlier_frac = p;
    }
    if let Some(r) = c.regime {
        cfg.partition.regime = r.into();
    }
    if !c.seeds.is_empty() {
        cfg.seeds = c.seeds.clone();
    }
    if let Some(t) = c.rounds {
        cfg.fed.rounds = t;
    }
    if let Some(m) = c.mode {
        cfg.mode = match m {
            ModeArg::Federated => Mode::Federated,
            ModeArg::Centralized => Mode::Centralized,
        };
    }
    if c.screen_prune {
        cfg.screen_prune = true;
    }
    Ok(cfg)
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let path = dir.join(name);
    let text = serde_json::to_vec_pretty(value).map_err(FlrError::from)?;
    write_file(&path, &text)?;
    Ok(path)
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_path_buf(), source })
}

fn run_and_write(c: &Common) -> CliResult<experiment::ExperimentOutput> {
    let cfg = build_config(c)?;
    prepare_out(&c.out)?;
    let out = experiment::run_experiment(&cfg, RunOptions { trace: c.trace })?;
    let report = write_json(&c.out, "report.json", &out.report)?;
    write_json(&c.out, "manifests.json", &out.manifests)?;
    if c.trace {
        let path = c.out.join("trace.jsonl");
        let mut buf = Vec::new();
        for trace in &out.traces {
            for log in &trace.logs {
                let mut record = serde_json::to_value(log).map_err(FlrError::from)?;
                record["seed"] = trace.seed.into();
                serde_json::to_writer(&mut buf, &record).map_err(FlrError::from)?;
                buf.push(b'\n');
            }
        }
        write_file(&path, &buf)?;
    }
    let s = &out.report.summary;
    println!(
        "acc {:.4} ± {:.4}  f1 {:.4} ± {:.4}  auc {:.4} ± {:.4}  ({} seeds) -> {}",
        s.acc.mean,
        s.acc.half_width,
        s.f1.mean,
        s.f1.half_width,
        s.auc.mean,
        s.auc.half_width,
        out.report.per_seed.len(),
        report.display()
    );
    Ok(out)
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Screen(c) => {
            let cfg = build_config(&c)?;
            prepare_out(&c.out)?;
            let report = experiment::screen(&cfg)?;
            let path = write_json(&c.out, "screen.json", &report)?;
            write_file(&c.out.join("correlation.csv"), report.correlation.to_csv().as_bytes())?;
            println!(
                "removed by VIF: {}; sample size: {}; -> {}",
                report.vif.removal_order.len(),
                if report.sample_size.passed { "pass" } else { "fail" },
                path.display()
            );
        }
        Command::Run(c) => {
            run_and_write(&c)?;
        }
        Command::Importance(c) => {
            let out = run_and_write(&c)?;
            let importance = out.report.feature_importance()?;
            let path = write_json(&c.out, "importance.json", &importance)?;
            println!("importance -> {}", path.display());
        }
        Command::Sweep(args) => {
            let c = &args.common;
            // With --rules, --alpha belongs to the listed trim_mean rule.
            let mut base = c.clone();
            if !args.rules.is_empty() {
                base.alpha = None;
            }
            let cfg = build_config(&base)?;
            let axis: SweepAxis = args.axis.parse()?;
            let rules: Vec<AggregationRule> = args.rules.iter().map(|&r| rule_from(r, c.alpha)).collect();
            prepare_out(&c.out)?;
            let result = experiment::run_sweep(&cfg, axis, &args.values, &rules)?;
            let curve = c.out.join("curve.csv");
            write_file(&curve, result.to_csv().as_bytes())?;
            let reports: Vec<_> = result.points.iter().map(|p| &p.report).collect();
            write_json(&c.out, "sweep.json", &reports)?;
            println!("{} points -> {}", result.points.len(), curve.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
