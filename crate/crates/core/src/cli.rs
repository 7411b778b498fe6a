//! Command-line front end.
//!
//! Errors are reported as one line on stderr, `error: <kind>: <message>`, with
//! these exit codes:
//!
//! | code | kind                         |
//! |------|------------------------------|
//! | 0    | success                      |
//! | 1    | `usage`, `parse`, `config`, `io` |
//! | 2    | `contract` (method cannot be applied to the input) |
//! | 3    | `not-rankable`               |
//! | 4    | `calibration`                |

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::indices::{self, alpha_rankability_bound, IndexError, DEFAULT_ALPHA, DEFAULT_BETA};
use crate::io::{self as pio, fmt_fixed, fmt_short, MatrixFileError};
use crate::matrix::PcMatrix;
use crate::metrics::ranking_order;
use crate::montecarlo::{
    run_distribution_study, run_sensitivity_study, summarize_distribution, summarize_sensitivity,
    with_workers, ExperimentConfig, ExperimentRecord, SamplingError, Stat, StudyError,
};
use crate::priority::{evm_pc, gmm, harker_rank, PriorityError, PriorityVector, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PCRANK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "pcrank", version, about = "Rankings and incompleteness indices for pairwise comparison matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Priority vector and ordering of a matrix file.
    Rank(RankArgs),
    /// Inconsistency and incompleteness indices of a matrix file.
    Indices(IndicesArgs),
    /// Whether a ranking can be computed from a matrix file.
    Check(CheckArgs),
    /// Sensitivity against inconsistency and incompleteness.
    ExperimentSensitivity(SensitivityArgs),
    /// Sensitivity of regular versus irregular gap patterns.
    ExperimentDistribution(DistributionArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Evm,
    Gmm,
    Harker,
}

#[derive(Debug, Args)]
struct Common {
    /// key=value file with defaults for the flags of this command.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Power-iteration tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Power-iteration budget.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Debug, Args)]
struct RankArgs {
    input: PathBuf,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct IndicesArgs {
    input: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Also write the report as a one-row CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CheckArgs {
    input: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Matrix order.
    #[arg(long)]
    n: Option<usize>,
    /// Number of consistent base matrices.
    #[arg(long)]
    matrix_count: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Matrices per calibration of a CI target.
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory for the CSV files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SensitivityArgs {
    /// Comma-separated ascending CI targets (default: 41-level ladder).
    #[arg(long)]
    ci_targets: Option<String>,
    /// Removal scheme: random, regular or irregular.
    #[arg(long)]
    scheme: Option<String>,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Debug, Args)]
struct DistributionArgs {
    /// Target mean CI.
    #[arg(long)]
    ci: Option<f64>,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            kind,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Self::new(1, "config", message)
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::new(1, "io", format!("{}: {e}", path.display()))
    }
}

impl From<MatrixFileError> for CliError {
    fn from(e: MatrixFileError) -> Self {
        match e {
            MatrixFileError::Io { .. } => Self::new(1, "io", e.to_string()),
            _ => Self::new(1, "parse", e.to_string()),
        }
    }
}

impl From<PriorityError> for CliError {
    fn from(e: PriorityError) -> Self {
        Self::new(2, "contract", e.to_string())
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::InvalidParameter(_) => Self::config(e.to_string()),
            _ => Self::new(2, "contract", e.to_string()),
        }
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Config(m) => Self::config(m),
            StudyError::Sampling(SamplingError::CalibrationFailed { .. }) => {
                Self::new(4, "calibration", e.to_string())
            }
            StudyError::Sampling(_) => Self::config(e.to_string()),
            StudyError::Priority(p) => p.into(),
            StudyError::Index(i) => i.into(),
        }
    }
}

/// Settings read from a `--config` file: `key = value` lines, `#` comments.
/// Keys use the flag names with `-` or `_`.
#[derive(Debug, Default)]
struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "{}:{}: expected key=value",
                    path.display(),
                    idx + 1
                )));
            };
            let key = key.trim().replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::config(format!(
                    "{}:{}: unknown key '{key}'",
                    path.display(),
                    idx + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::config(format!("invalid value '{v}' for {key}")))
            })
            .transpose()
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

fn pick<T: std::str::FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str, default: T) -> Result<T, CliError> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.get(key)?.unwrap_or(default)),
    }
}

fn solver(common: &Common, cfg: &ConfigFile) -> Result<(f64, usize), CliError> {
    let tol = pick(common.tol, cfg, "tol", DEFAULT_TOL)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::config(format!("tolerance must be positive, got {tol}")));
    }
    let max_iter = pick(common.max_iter, cfg, "max-iter", DEFAULT_MAX_ITER)?;
    Ok((tol, max_iter))
}

/// Runs the command line `args` (including the program name), writing the
/// report to stdout, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{e}");
                return 1;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", first.trim_start_matches("error: "));
            return 1;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            let message = e.message.replace('\n', " ");
            eprintln!("error: {}: {message}", e.kind);
            e.code
        }
    }
}

fn run(command: Command, out: &mut impl Write) -> Result<i32, CliError> {
    let mut report = String::new();
    let result = match command {
        Command::Rank(a) => cmd_rank(&a, &mut report),
        Command::Indices(a) => cmd_indices(&a, &mut report),
        Command::Check(a) => cmd_check(&a, &mut report),
        Command::ExperimentSensitivity(a) => cmd_sensitivity(&a, &mut report),
        Command::ExperimentDistribution(a) => cmd_distribution(&a, &mut report),
    };
    out.write_all(report.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::new(1, "io", format!("stdout: {e}")))?;
    result
}

fn order_line(w: &PriorityVector) -> String {
    let order = ranking_order(w);
    let mut s = format!("a{}", order[0] + 1);
    for pair in order.windows(2) {
        let sep = if w.get(pair[0]) == w.get(pair[1]) { " = " } else { " > " };
        s.push_str(sep);
        let _ = write!(s, "a{}", pair[1] + 1);
    }
    s
}

fn cmd_rank(a: &RankArgs, out: &mut String) -> Result<i32, CliError> {
    let cfg = ConfigFile::load(a.common.config.as_deref(), &["method", "tol", "max-iter"])?;
    let method = match a.method {
        Some(m) => m,
        None => match cfg.raw("method") {
            Some(m) => Method::from_str(m, true).map_err(|_| CliError::config(format!("unknown method '{m}'")))?,
            None => Method::Evm,
        },
    };
    let (tol, max_iter) = solver(&a.common, &cfg)?;
    let c = pio::parse_matrix_file(&a.input)?;

    let (weights, eig) = match method {
        Method::Evm => {
            let e = evm_pc(&c, tol, max_iter)?;
            (e.vector.clone(), Some(e))
        }
        Method::Harker => {
            let e = harker_rank(&c, tol, max_iter)?;
            (e.vector.clone(), c.is_complete().then_some(e))
        }
        Method::Gmm => (gmm(&c)?, None),
    };

    let name = match method {
        Method::Evm => "evm",
        Method::Gmm => "gmm",
        Method::Harker => "harker",
    };
    let _ = writeln!(out, "method: {name}");
    let _ = writeln!(out, "n: {}", c.order());
    let _ = writeln!(out, "missing: {}", c.missing_count());
    let _ = writeln!(out, "weights:");
    for (i, w) in weights.weights().iter().enumerate() {
        let _ = writeln!(out, "  a{} {}", i + 1, fmt_fixed(*w));
    }
    if let Some(e) = eig {
        let _ = writeln!(out, "lambda_max: {}", fmt_fixed(e.lambda_max));
        let ci = indices::consistency_index(&c, &e)?;
        let _ = writeln!(out, "ci: {}", fmt_fixed(ci));
    }
    let _ = writeln!(out, "order: {}", order_line(&weights));
    Ok(0)
}

fn index_report(c: &PcMatrix, alpha: f64, beta: f64, tol: f64, max_iter: usize) -> Result<indices::IndexReport, CliError> {
    let eig = if c.is_complete() {
        evm_pc(c, tol, max_iter).ok()
    } else {
        None
    };
    Ok(indices::report(c, alpha, beta, eig.as_ref())?)
}

fn cmd_indices(a: &IndicesArgs, out: &mut String) -> Result<i32, CliError> {
    let cfg = ConfigFile::load(a.common.config.as_deref(), &["alpha", "beta", "csv", "tol", "max-iter"])?;
    let alpha = pick(a.alpha, &cfg, "alpha", DEFAULT_ALPHA)?;
    let beta = pick(a.beta, &cfg, "beta", DEFAULT_BETA)?;
    let csv_path = a.csv.clone().or_else(|| cfg.raw("csv").map(PathBuf::from));
    let (tol, max_iter) = solver(&a.common, &cfg)?;
    indices::check_parameters(alpha, beta)?;
    let c = pio::parse_matrix_file(&a.input)?;
    let r = index_report(&c, alpha, beta, tol, max_iter)?;

    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), fmt_short);
    let _ = writeln!(out, "n: {}", r.n);
    let _ = writeln!(out, "missing: {}", r.missing);
    let _ = writeln!(out, "ci: {}", opt(r.ci));
    let _ = writeln!(out, "alpha: {}", r.alpha);
    let _ = writeln!(out, "beta: {}", r.beta);
    let _ = writeln!(out, "iid_alpha: {}", fmt_short(r.iid_alpha));
    let _ = writeln!(out, "ii_beta: {}", fmt_short(r.ii_beta));
    let _ = writeln!(out, "spanning_trees: {}", r.spanning_trees);
    let _ = writeln!(out, "tree_index: {}", opt(r.tree_index));
    let _ = writeln!(out, "compound: {}", fmt_short(r.compound));
    if r.tree_index.is_none() {
        eprintln!("warning: {}", IndexError::UndefinedForOrderTwo);
    }

    if let Some(path) = csv_path {
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        pio::write_index_csv(BufWriter::new(file), &r).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(0)
}

fn cmd_check(a: &CheckArgs, out: &mut String) -> Result<i32, CliError> {
    let cfg = ConfigFile::load(a.common.config.as_deref(), &["alpha", "tol", "max-iter"])?;
    let alpha = pick(a.alpha, &cfg, "alpha", DEFAULT_ALPHA)?;
    indices::check_parameters(alpha, DEFAULT_BETA)?;
    let c = pio::parse_matrix_file(&a.input)?;

    let n = c.order();
    let iid = indices::alpha_index(&c, alpha);
    let bound = alpha_rankability_bound(n, alpha);
    if iid >= bound * (1.0 - 1e-12) {
        eprintln!(
            "warning: alpha index {} reaches the rankability bound {} (alpha = {alpha})",
            fmt_short(iid),
            fmt_short(bound)
        );
    }
    if n > 2 && indices::tree_index(&c)? == 1.0 {
        eprintln!("warning: tree index is 1, the comparison graph has no spanning tree");
    }

    if c.is_irreducible() {
        let _ = writeln!(out, "rankable");
        Ok(0)
    } else {
        let _ = writeln!(out, "not rankable");
        Err(CliError::new(
            3,
            "not-rankable",
            PriorityError::NotIrreducible {
                components: c.graph().components(),
            }
            .to_string(),
        ))
    }
}

fn worker_count() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

const EXPERIMENT_KEYS: &[&str] = &[
    "n",
    "matrix-count",
    "alpha",
    "beta",
    "seed",
    "samples",
    "out-dir",
    "tol",
    "max-iter",
    "ci-targets",
    "scheme",
    "ci",
];

fn experiment_config(a: &ExperimentArgs, cfg: &ConfigFile) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let d = ExperimentConfig::default();
    let (tol, max_iter) = solver(&a.common, cfg)?;
    let config = ExperimentConfig {
        n: pick(a.n, cfg, "n", d.n)?,
        matrix_count: pick(a.matrix_count, cfg, "matrix-count", d.matrix_count)?,
        ci_targets: d.ci_targets,
        alpha: pick(a.alpha, cfg, "alpha", d.alpha)?,
        beta: pick(a.beta, cfg, "beta", d.beta)?,
        seed: pick(a.seed, cfg, "seed", d.seed)?,
        scheme: d.scheme,
        calibration_samples: pick(a.samples, cfg, "samples", d.calibration_samples)?,
        tol,
        max_iter,
    };
    let out_dir = a
        .out_dir
        .clone()
        .or_else(|| cfg.raw("out-dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, out_dir))
}

fn parse_targets(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("invalid CI target '{}'", t.trim())))
        })
        .collect()
}

fn write_csv(
    dir: &Path,
    name: &str,
    f: impl FnOnce(BufWriter<File>) -> csv::Result<()>,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    f(BufWriter::new(file)).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn mean_cell(s: &Stat) -> String {
    if s.count == 0 {
        "-".into()
    } else {
        format!("{:.6}", s.mean())
    }
}

fn cmd_sensitivity(a: &SensitivityArgs, out: &mut String) -> Result<i32, CliError> {
    let cfg = ConfigFile::load(a.exp.common.config.as_deref(), EXPERIMENT_KEYS)?;
    let (mut config, out_dir) = experiment_config(&a.exp, &cfg)?;
    if let Some(t) = a.ci_targets.as_deref().or(cfg.raw("ci-targets")) {
        config.ci_targets = parse_targets(t)?;
    }
    if let Some(s) = a.scheme.as_deref().or(cfg.raw("scheme")) {
        config.scheme = s.parse().map_err(CliError::config)?;
    }
    config.validate()?;
    let workers = worker_count()?;

    let run = with_workers(workers, || run_sensitivity_study(&config))?;
    let cells = summarize_sensitivity(&run.records, &config.ci_targets);
    let records = write_csv(&out_dir, "sensitivity_records.csv", |w| {
        pio::write_records_csv(w, &run.records)
    })?;
    let summary = write_csv(&out_dir, "sensitivity_summary.csv", |w| {
        pio::write_sensitivity_summary(w, &cells)
    })?;

    let groups = config.ci_targets.len();
    let mut ci = vec![Stat::default(); groups];
    let mut md = vec![Stat::default(); groups];
    let mut krd = vec![Stat::default(); groups];
    for r in &run.records {
        ci[r.ci_group].push(r.ci_actual);
        if r.converged {
            md[r.ci_group].push(r.manhattan);
            krd[r.ci_group].push(r.kendall_rescaled);
        }
    }
    let _ = writeln!(out, "scheme: {}", config.scheme);
    let _ = writeln!(out, "records: {}", run.records.len());
    let _ = writeln!(out, "{:>5} {:>10} {:>10} {:>10} {:>12} {:>12}", "group", "ci_target", "ci_avg", "spread", "manhattan", "kendall_rd");
    for g in 0..groups {
        let _ = writeln!(
            out,
            "{:>5} {:>10.6} {:>10} {:>10.6} {:>12} {:>12}",
            g,
            config.ci_targets[g],
            mean_cell(&ci[g]),
            run.spreads[g],
            mean_cell(&md[g]),
            mean_cell(&krd[g])
        );
    }
    let _ = writeln!(out, "wrote {}", records.display());
    let _ = writeln!(out, "wrote {}", summary.display());
    Ok(0)
}

fn cmd_distribution(a: &DistributionArgs, out: &mut String) -> Result<i32, CliError> {
    let cfg = ConfigFile::load(a.exp.common.config.as_deref(), EXPERIMENT_KEYS)?;
    let (mut config, out_dir) = experiment_config(&a.exp, &cfg)?;
    config.ci_targets = vec![pick(a.ci, &cfg, "ci", 0.1)?];
    config.validate()?;
    let workers = worker_count()?;

    let run = with_workers(workers, || run_distribution_study(&config))?;
    let points = summarize_distribution(&run.records);
    let records = write_csv(&out_dir, "distribution_records.csv", |w| {
        pio::write_records_csv(w, &run.records)
    })?;
    let summary = write_csv(&out_dir, "distribution_summary.csv", |w| {
        pio::write_distribution_summary(w, &points)
    })?;

    let ci_avg = {
        let mut s = Stat::default();
        run.records.iter().filter(|r| r.k == 0).for_each(|r: &ExperimentRecord| s.push(r.ci_actual));
        s
    };
    let _ = writeln!(out, "ci_target: {}", config.ci_targets[0]);
    let _ = writeln!(out, "ci_avg: {}", mean_cell(&ci_avg));
    let _ = writeln!(out, "spread: {:.6}", run.spread);
    let _ = writeln!(
        out,
        "{:>9} {:>3} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "scheme", "k", "manhattan", "kendall_rd", "iid_alpha", "ii_beta", "tree", "compound"
    );
    for p in &points {
        let _ = writeln!(
            out,
            "{:>9} {:>3} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
            p.scheme.as_str(),
            p.k,
            mean_cell(&p.manhattan),
            mean_cell(&p.kendall),
            mean_cell(&p.iid_alpha),
            mean_cell(&p.ii_beta),
            mean_cell(&p.tree_index),
            mean_cell(&p.compound)
        );
    }
    let _ = writeln!(out, "wrote {}", records.display());
    let _ = writeln!(out, "wrote {}", summary.display());
    Ok(0)
}
