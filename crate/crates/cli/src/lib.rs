//! The `ultralevy` command line: argument parsing, validation, dispatch to
//! the library and table output.
//!
//! Tables go to `--out` or stdout, as CSV behind a `# {json}` metadata line
//! or, with `--json`, as one JSON document. Summaries and check reports go
//! to stderr, so stdout stays machine readable.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde_json::{json, Value};

use ultralevy::levy::{
    asymptotic_diagnostics, build_shell_table, evans_ratio, shell_density, shell_density_abel, tail,
};
use ultralevy::process::{
    ball_counts, exit_record, fit_dimension, mean_and_stderr, ExitStatistics, MetricNormalization,
    PathConfig, Simulator, StopRule, Trajectory, DEFAULT_EVENT_BUDGET,
};
use ultralevy::rational::{format_rational, parse_rational};
use ultralevy::spectral::{
    dual_shells, eigenvalue, heat_kernel, inverse_radial_fourier, jump_density, kernel_normalization,
    radial_fourier, scalar_to_string, RadialFunction, RadialSequence,
};
use ultralevy::tower::ExpoScalar;
use ultralevy::{parse_profile_json, Precision, Real, TowerProfile};

/// Used when `--profile` is absent.
pub const DEFAULT_PROFILE: &str = r#"{"p":2,"kappa":1,"m":[1,3,9,27]}"#;

/// Normalization tolerance for `kernel --check`.
const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// One-sided 95% normal quantile.
const Z95: f64 = 1.6449;

#[derive(Debug, Parser)]
#[command(name = "ultralevy", version, about = "Spectra, heat kernels, Levy measures and exact simulation on profinite unit groups")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Tower profile JSON; defaults to p = 2, kappa = 1, m = [1, 3, 9, 27].
    #[arg(long, global = true, value_name = "PATH")]
    pub profile: Option<PathBuf>,
    /// Stability exponent as an exact rational ("1/2") or decimal ("0.5").
    #[arg(long, global = true, default_value = "1/2", value_name = "R")]
    pub alpha: String,
    /// Working precision in decimal digits.
    #[arg(long, global = true, default_value_t = 30, value_name = "DIGITS")]
    pub precision: u32,
    /// Master seed for the random streams.
    #[arg(long, global = true, default_value_t = 0, value_name = "U64")]
    pub seed: u64,
    /// Output file (a directory for multi-path `simulate`); stdout if absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Emit structured JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Also run the exact identity checks (kernel, levy, evans).
    #[arg(long, global = true)]
    pub check: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the profile and list m_n, n m_n, digit alphabets and indices.
    Validate,
    /// Eigenvalues q^{alpha n m_n} with their multiplicities.
    Spectrum {
        /// Highest level; defaults to the tower depth.
        #[arg(long)]
        max_level: Option<usize>,
    },
    /// Radial Fourier transform of a JSON array of rationals.
    Fourier {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Recover the dual sequence from level values instead.
        #[arg(long)]
        inverse: bool,
    },
    /// Heat kernel G(t, l) on the finite levels.
    Kernel {
        /// Times, comma separated (rationals or decimals).
        #[arg(long, value_delimiter = ',', default_value = "1")]
        t: Vec<String>,
        /// Highest level; defaults to depth - 1.
        #[arg(long)]
        max_level: Option<usize>,
    },
    /// Shell densities, tails and their ratio diagnostics.
    Levy {
        /// Highest level; defaults to depth - 1.
        #[arg(long)]
        max_level: Option<usize>,
    },
    /// Exit-time ratios against the dimension theorem's hypothesis.
    Evans {
        /// Levels n >= 2, comma separated; defaults to 2..=depth.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
    },
    /// Sample trajectories of the quotient chain on V / V_N.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1)]
        paths: u64,
    },
    /// Ball-count dimension estimate averaged over independent paths.
    Dimension {
        #[command(flatten)]
        run: RunArgs,
        /// Levels entering the fit, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        fit: Vec<usize>,
        /// Observation window [0, t].
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 20)]
        paths: u64,
        /// c in diam(V_n) = M(n)^{-c}.
        #[arg(long, default_value_t = 1.0)]
        metric_exponent: f64,
    },
    /// First exits from V_n and V_outer and the avoidance frequency.
    Exitstats {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        outer: usize,
        /// Paths that have not left V_outer by then are excluded.
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1000)]
        paths: u64,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Quotient depth N; defaults to depth - 1.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Maximum events per path.
    #[arg(long, default_value_t = DEFAULT_EVENT_BUDGET)]
    pub budget: u64,
}

/// Validated common settings.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub profile: TowerProfile,
    pub alpha: BigRational,
    pub precision: Precision,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub json: bool,
    pub check: bool,
}

impl RunConfig {
    pub fn from_args(args: &CommonArgs) -> Result<Self> {
        let text = match &args.profile {
            Some(path) => fs::read_to_string(path)
                .with_context(|| format!("reading profile {}", path.display()))?,
            None => DEFAULT_PROFILE.to_string(),
        };
        let profile = parse_profile_json(&text).context("loading profile")?;
        let alpha = parse_rational(&args.alpha).context("parsing --alpha")?;
        ensure!(
            (1..=10_000).contains(&args.precision),
            "precision must be between 1 and 10000 digits (got {})",
            args.precision
        );
        Ok(RunConfig {
            profile,
            alpha,
            precision: Precision::from_digits(args.precision),
            seed: args.seed,
            out: args.out.clone(),
            json: args.json,
            check: args.check,
        })
    }

    fn digits(&self) -> usize {
        self.precision.digits() as usize
    }

    fn real(&self, value: &Real) -> String {
        value.to_decimal_string(self.digits())
    }

    fn decimal(&self, value: &ExpoScalar) -> String {
        self.real(&value.to_real(self.precision))
    }

    fn meta(&self, command: &str) -> Value {
        json!({
            "command": command,
            "profile": self.profile,
            "alpha": format_rational(&self.alpha),
            "precision": self.precision.digits(),
        })
    }

    /// Levels `0..=n` where `n + 1` must stay within the tower.
    fn inner_levels(&self, requested: Option<usize>) -> Result<usize> {
        let depth = self.profile.depth();
        ensure!(depth >= 1, "the tower needs at least one level");
        let top = requested.unwrap_or(depth - 1);
        ensure!(
            top < depth,
            "level {top} needs m_{} but the tower has depth {depth}",
            top + 1
        );
        Ok(top)
    }
}

/// A table with string cells, written as CSV or JSON.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub meta: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(meta: Value, columns: &[&str]) -> Self {
        Table {
            meta,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# {}", self.meta)?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({ "meta": self.meta, "columns": self.columns, "rows": self.rows })
    }
}

struct Console<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Console<'_> {
    fn emit(&mut self, cfg: &RunConfig, table: &Table) -> Result<()> {
        match &cfg.out {
            Some(path) => {
                let mut file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
                write_table(cfg, table, &mut file)
            }
            None => write_table(cfg, table, self.stdout),
        }
    }

    fn note(&mut self, line: impl AsRef<str>) -> Result<()> {
        writeln!(self.stderr, "{}", line.as_ref())?;
        Ok(())
    }
}

fn write_table(cfg: &RunConfig, table: &Table, out: &mut dyn Write) -> Result<()> {
    if cfg.json {
        serde_json::to_writer_pretty(&mut *out, &table.to_json())?;
        writeln!(out)?;
    } else {
        table.write_csv(out)?;
    }
    Ok(())
}

/// Parses the arguments' settings and runs the subcommand.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::from_args(&cli.common)?;
    let mut console = Console { stdout, stderr };
    match &cli.command {
        Command::Validate => cmd_validate(&cfg, &mut console),
        Command::Spectrum { max_level } => {
            let table = cmd_spectrum(&cfg, *max_level)?;
            console.emit(&cfg, &table)
        }
        Command::Fourier { input, inverse } => {
            let table = cmd_fourier(&cfg, input, *inverse)?;
            console.emit(&cfg, &table)
        }
        Command::Kernel { t, max_level } => {
            let table = cmd_kernel(&cfg, t, *max_level)?;
            console.emit(&cfg, &table)?;
            if cfg.check {
                let times = parse_times(t)?;
                let mut report = identity_report(&cfg, None)?;
                report.extend(normalization_report(&cfg, &times)?);
                finish_checks(&mut console, report)?;
            }
            Ok(())
        }
        Command::Levy { max_level } => {
            let table = cmd_levy(&cfg, *max_level)?;
            console.emit(&cfg, &table)?;
            if cfg.check {
                let report = identity_report(&cfg, *max_level)?;
                finish_checks(&mut console, report)?;
            }
            Ok(())
        }
        Command::Evans { n } => {
            let table = cmd_evans(&cfg, n)?;
            console.emit(&cfg, &table)?;
            if cfg.check {
                let report = identity_report(&cfg, None)?;
                finish_checks(&mut console, report)?;
            }
            Ok(())
        }
        Command::Simulate { run, t_end, paths } => cmd_simulate(&cfg, run, *t_end, *paths, &mut console),
        Command::Dimension {
            run,
            fit,
            t,
            paths,
            metric_exponent,
        } => {
            let (table, summary) = cmd_dimension(&cfg, run, fit, *t, *paths, *metric_exponent)?;
            console.emit(&cfg, &table)?;
            console.note(summary)
        }
        Command::Exitstats {
            run,
            n,
            outer,
            t_end,
            paths,
        } => {
            let (table, excluded) = cmd_exitstats(&cfg, run, *n, *outer, *t_end, *paths)?;
            console.emit(&cfg, &table)?;
            if excluded > 0 {
                console.note(format!(
                    "note: {excluded} paths did not leave V_{outer} by t = {t_end} and were excluded"
                ))?;
            }
            Ok(())
        }
    }
}

fn cmd_validate(cfg: &RunConfig, console: &mut Console<'_>) -> Result<()> {
    let p = &cfg.profile;
    let mut table = Table::new(cfg.meta("validate"), &["n", "m_n", "nm_n", "alphabet", "index"]);
    for n in 0..=p.depth() {
        let level = p.level(n)?;
        let alphabet = if n == 0 {
            String::new()
        } else {
            ultralevy::digit_alphabet(p, n)?.to_string()
        };
        table.push(vec![
            n.to_string(),
            p.m(level).to_string(),
            p.nm(level).to_string(),
            alphabet,
            p.index_integer(level).to_string(),
        ]);
    }
    console.emit(cfg, &table)?;
    console.note(format!(
        "profile ok: p = {}, kappa = {}, q = {}, depth {}",
        p.p(),
        p.kappa(),
        p.q(),
        p.depth()
    ))
}

/// Rows `(n, eigenvalue, multiplicity)` for `n = 0..=max_level`.
pub fn cmd_spectrum(cfg: &RunConfig, max_level: Option<usize>) -> Result<Table> {
    let top = max_level.unwrap_or(cfg.profile.depth());
    let shells = dual_shells(&cfg.profile, top)?;
    let mut table = Table::new(cfg.meta("spectrum"), &["n", "eigenvalue", "multiplicity"]);
    for shell in shells {
        let value = eigenvalue(&cfg.profile, &cfg.alpha, shell.level)?;
        table.push(vec![
            shell.level.to_string(),
            cfg.decimal(&value),
            shell.multiplicity.to_string(),
        ]);
    }
    Ok(table)
}

/// Forward: dual sequence `φ_0..φ_N` to level values. Inverse: the reverse.
pub fn cmd_fourier(cfg: &RunConfig, input: &Path, inverse: bool) -> Result<Table> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let data: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
    let (label, values) = if inverse {
        let f = RadialFunction::from_json(&cfg.profile, &data)?;
        ("n", inverse_radial_fourier(&cfg.profile, &f)?.into_values())
    } else {
        let phi = RadialSequence::from_json(&cfg.profile, &data)?;
        ("level", radial_fourier(&cfg.profile, &phi)?.into_values())
    };
    let mut meta = cfg.meta("fourier");
    meta["direction"] = json!(if inverse { "inverse" } else { "forward" });
    let mut table = Table::new(meta, &[label, "exact", "decimal"]);
    for (i, v) in values.iter().enumerate() {
        table.push(vec![i.to_string(), scalar_to_string(v, cfg.precision), cfg.decimal(v)]);
    }
    Ok(table)
}

fn parse_times(raw: &[String]) -> Result<Vec<BigRational>> {
    ensure!(!raw.is_empty(), "at least one time is required");
    raw.iter()
        .map(|s| parse_rational(s).with_context(|| format!("parsing time {s:?}")))
        .collect()
}

/// Rows `(level, t, value)` for each time and each level below the depth.
pub fn cmd_kernel(cfg: &RunConfig, times: &[String], max_level: Option<usize>) -> Result<Table> {
    let top = cfg.inner_levels(max_level)?;
    let times = parse_times(times)?;
    let mut meta = cfg.meta("kernel");
    meta["t"] = json!(times.iter().map(format_rational).collect::<Vec<_>>());
    let mut table = Table::new(meta, &["level", "t", "value"]);
    for t in &times {
        let t_decimal = cfg.real(&Real::from_rational(t, cfg.precision));
        for l in 0..=top {
            let g = heat_kernel(&cfg.profile, &cfg.alpha, t, l, cfg.precision)?;
            table.push(vec![l.to_string(), t_decimal.clone(), cfg.real(&g)]);
        }
    }
    Ok(table)
}

/// Rows `(n, nu_n, tail, tail_ratio, nu_ratio, evans_ratio)`.
pub fn cmd_levy(cfg: &RunConfig, max_level: Option<usize>) -> Result<Table> {
    let top = cfg.inner_levels(max_level)?;
    let records = asymptotic_diagnostics(&cfg.profile, &cfg.alpha, top, cfg.precision)?;
    let mut table = Table::new(
        cfg.meta("levy"),
        &["n", "nu_n", "tail", "tail_ratio", "nu_ratio", "evans_ratio"],
    );
    for record in records {
        let n = record.n;
        let nu = shell_density(&cfg.profile, &cfg.alpha, n)?;
        let tail_n = tail(&cfg.profile, &cfg.alpha, n)?;
        let evans = if n >= 2 {
            cfg.real(&evans_ratio(&cfg.profile, &cfg.alpha, n, cfg.precision)?.ratio)
        } else {
            String::new()
        };
        table.push(vec![
            n.to_string(),
            cfg.decimal(&nu),
            cfg.decimal(&tail_n),
            record.tail_ratio.as_ref().map(|r| cfg.real(r)).unwrap_or_default(),
            cfg.real(&record.nu_ratio),
            evans,
        ]);
    }
    Ok(table)
}

/// Rows `(n, ratio, trend, verdict)`.
pub fn cmd_evans(cfg: &RunConfig, levels: &[usize]) -> Result<Table> {
    let levels: Vec<usize> = if levels.is_empty() {
        (2..=cfg.profile.depth()).collect()
    } else {
        levels.to_vec()
    };
    let mut table = Table::new(cfg.meta("evans"), &["n", "ratio", "trend", "verdict"]);
    for n in levels {
        let report = evans_ratio(&cfg.profile, &cfg.alpha, n, cfg.precision)?;
        table.push(vec![
            n.to_string(),
            cfg.real(&report.ratio),
            cfg.real(&report.trend),
            report.verdict.to_string(),
        ]);
    }
    Ok(table)
}

/// One report line per identity; `true` when it held.
type CheckReport = Vec<(String, bool)>;

/// Shell densities against their Abel-summed form and against the negated
/// symbol-side jump density, compared exactly.
fn identity_report(cfg: &RunConfig, max_level: Option<usize>) -> Result<CheckReport> {
    let top = cfg.inner_levels(max_level)?;
    let mut abel = true;
    let mut jump = true;
    for n in 0..=top {
        let nu = shell_density(&cfg.profile, &cfg.alpha, n)?;
        abel &= nu == shell_density_abel(&cfg.profile, &cfg.alpha, n)?;
        jump &= -jump_density(&cfg.profile, &cfg.alpha, n)? == nu;
    }
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    Ok(vec![
        (format!("abel-identity: {} (n ≤ {top})", verdict(abel)), abel),
        (format!("jump-identity: {} (n ≤ {top})", verdict(jump)), jump),
    ])
}

fn normalization_report(cfg: &RunConfig, times: &[BigRational]) -> Result<CheckReport> {
    let mut report = Vec::new();
    for t in times.iter().filter(|t| *t > &BigRational::from_integer(0.into())) {
        let line = match kernel_normalization(&cfg.profile, &cfg.alpha, t, NORMALIZATION_TOLERANCE, cfg.precision) {
            Ok(check) => {
                let error = (&check.sum - &Real::one(cfg.precision)).abs();
                let ok = error.to_f64() <= NORMALIZATION_TOLERANCE;
                (
                    format!(
                        "kernel-normalization t={}: {} (|sum - 1| = {}, tail bound {}, truncated at level {})",
                        format_rational(t),
                        if ok { "PASS" } else { "FAIL" },
                        error.to_sci_string(3),
                        check.tail_bound.to_sci_string(3),
                        check.truncation
                    ),
                    ok,
                )
            }
            Err(err) => (format!("kernel-normalization t={}: FAIL ({err})", format_rational(t)), false),
        };
        report.push(line);
    }
    Ok(report)
}

fn finish_checks(console: &mut Console<'_>, report: CheckReport) -> Result<()> {
    let mut failed = 0;
    for (line, ok) in &report {
        console.note(line)?;
        failed += usize::from(!ok);
    }
    if failed > 0 {
        bail!("{failed} check(s) failed");
    }
    Ok(())
}

fn simulator(cfg: &RunConfig, run: &RunArgs) -> Result<(Simulator, usize)> {
    let levels = match run.levels {
        Some(n) => n,
        None => cfg.inner_levels(None)?,
    };
    ensure!(levels >= 1, "the quotient depth must be at least 1");
    let table = build_shell_table(&cfg.profile, &cfg.alpha, levels)?;
    Ok((Simulator::new(&table, cfg.precision)?, levels))
}

fn check_paths(paths: u64) -> Result<()> {
    ensure!(paths >= 1, "paths must be at least 1 (got {paths})");
    Ok(())
}

fn outside_hypothesis(cfg: &RunConfig) -> bool {
    cfg.alpha >= BigRational::from_integer(1.into())
}

fn write_trajectory(cfg: &RunConfig, traj: &Trajectory, out: &mut dyn Write) -> Result<()> {
    if cfg.json {
        serde_json::to_writer(&mut *out, &traj.to_json()?)?;
        writeln!(out)?;
    } else {
        traj.write_csv(out)?;
    }
    Ok(())
}

/// Writes trajectories: a single path to `--out` or stdout, several paths as
/// `path-<index>.csv` (or `.json`) inside the `--out` directory.
fn cmd_simulate(cfg: &RunConfig, run: &RunArgs, t_end: f64, paths: u64, console: &mut Console<'_>) -> Result<()> {
    check_paths(paths)?;
    let (sim, levels) = simulator(cfg, run)?;
    let config = PathConfig::new(t_end, cfg.seed).with_budget(run.budget);
    let jumps: usize = if paths == 1 {
        let traj = sim.sample_path(&config, 0)?;
        match &cfg.out {
            Some(path) => {
                let mut file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
                write_trajectory(cfg, &traj, &mut file)?;
            }
            None => write_trajectory(cfg, &traj, console.stdout)?,
        }
        traj.events().len()
    } else {
        let Some(dir) = &cfg.out else {
            bail!("--out must name a directory when simulating more than one path");
        };
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let ext = if cfg.json { "json" } else { "csv" };
        let counts = sim.map_paths(&config, 0..paths, |traj| {
            let path = dir.join(format!("path-{:06}.{ext}", traj.meta().path));
            let mut file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_trajectory(cfg, &traj, &mut file)?;
            anyhow::Ok(traj.events().len())
        })?;
        counts.iter().sum()
    };
    console.note(format!(
        "simulated {paths} path(s) on V/V_{levels} to t = {t_end}: {jumps} jumps, lambda_N = {}",
        sim.chain().total_rate()
    ))?;
    if outside_hypothesis(cfg) {
        console.note("note: alpha >= 1 lies outside the dimension theorem's hypothesis")?;
    }
    Ok(())
}

/// Rows `(level, mean_ball_count, slope, stderr)` plus a one-line summary.
pub fn cmd_dimension(
    cfg: &RunConfig,
    run: &RunArgs,
    fit: &[usize],
    t: f64,
    paths: u64,
    metric_exponent: f64,
) -> Result<(Table, String)> {
    check_paths(paths)?;
    ensure!(
        metric_exponent.is_finite() && metric_exponent > 0.0,
        "metric exponent must be positive (got {metric_exponent})"
    );
    let (sim, levels) = simulator(cfg, run)?;
    ensure!(
        fit.iter().all(|&n| n <= levels),
        "fit levels {fit:?} exceed the quotient depth {levels}"
    );
    let config = PathConfig::new(t, cfg.seed).with_budget(run.budget);
    let counts = sim.map_paths(&config, 0..paths, |traj| ball_counts(&traj, t, fit))?;
    let metric = MetricNormalization {
        exponent: metric_exponent,
    };
    let est = fit_dimension(&cfg.profile, fit, counts, metric)?;
    let stderr = est.stderr.map(|s| s.to_string()).unwrap_or_default();
    let mut meta = cfg.meta("dimension");
    meta["levels"] = json!(levels);
    meta["t"] = json!(t);
    meta["paths"] = json!(paths);
    meta["seed"] = json!(cfg.seed);
    meta["metric_exponent"] = json!(metric_exponent);
    meta["degenerate"] = json!(est.degenerate);
    let mut table = Table::new(meta, &["level", "mean_ball_count", "slope", "stderr"]);
    for (level, mean) in fit.iter().zip(&est.mean_counts) {
        table.push(vec![
            level.to_string(),
            mean.to_string(),
            est.slope.to_string(),
            stderr.clone(),
        ]);
    }
    let mut summary = format!(
        "dimension slope = {:.4} ± {} over {} paths (levels {:?}, {} degenerate); target alpha = {} ≈ {:.4}",
        est.slope,
        est.stderr.map_or("n/a".to_string(), |s| format!("{s:.4}")),
        est.path_slopes.len(),
        fit,
        est.degenerate,
        format_rational(&cfg.alpha),
        Real::from_rational(&cfg.alpha, cfg.precision).to_f64(),
    );
    if outside_hypothesis(cfg) {
        summary.push_str("\nnote: alpha >= 1 lies outside the dimension theorem's hypothesis");
    }
    Ok((table, summary))
}

/// Rows `(quantity, estimate, stderr, reference, lower95, samples)` for the
/// mean exit times and the avoidance frequency; also the excluded count.
pub fn cmd_exitstats(
    cfg: &RunConfig,
    run: &RunArgs,
    n: usize,
    outer: usize,
    t_end: f64,
    paths: u64,
) -> Result<(Table, usize)> {
    check_paths(paths)?;
    ensure!(outer >= 1 && outer < n, "need 1 <= outer < n (got outer = {outer}, n = {n})");
    let run = RunArgs {
        levels: Some(run.levels.unwrap_or(n)),
        budget: run.budget,
    };
    let (sim, levels) = simulator(cfg, &run)?;
    ensure!(n <= levels, "n = {n} exceeds the quotient depth {levels}");
    let config = PathConfig::new(t_end, cfg.seed)
        .with_budget(run.budget)
        .with_stop(StopRule::ExitBall(outer));
    let records = sim.map_paths(&config, 0..paths, |traj| exit_record(&traj, n, outer))?;
    let stats = ExitStatistics::from_records(n, outer, records)?;
    let reference = |level: usize| -> Result<String> {
        let rate = tail(&cfg.profile, &cfg.alpha, level)?.to_real(cfg.precision);
        Ok(cfg.real(&(Real::one(cfg.precision) / rate)))
    };
    let mean_row = |name: &str, samples: &[f64], level: usize| -> Result<Vec<String>> {
        let (mean, se) = match mean_and_stderr(samples) {
            Some((m, s)) => (m.to_string(), s.to_string()),
            None => (String::new(), String::new()),
        };
        Ok(vec![
            name.to_string(),
            mean,
            se,
            reference(level)?,
            String::new(),
            samples.len().to_string(),
        ])
    };
    let mut meta = cfg.meta("exitstats");
    meta["levels"] = json!(levels);
    meta["t_end"] = json!(t_end);
    meta["paths"] = json!(paths);
    meta["seed"] = json!(cfg.seed);
    meta["excluded"] = json!(stats.excluded);
    let mut table = Table::new(meta, &["quantity", "estimate", "stderr", "reference", "lower95", "samples"]);
    table.push(mean_row(&format!("exit_time_{n}"), &stats.inner_exits, n)?);
    table.push(mean_row(&format!("exit_time_{outer}"), &stats.outer_exits, outer)?);
    let q = &stats.avoidance;
    let (estimate, stderr, lower) = if q.trials > 0 {
        (q.mean().to_string(), q.stderr().to_string(), q.wilson_lower(Z95).to_string())
    } else {
        Default::default()
    };
    table.push(vec![
        format!("avoidance_{n}_{outer}"),
        estimate,
        stderr,
        String::new(),
        lower,
        q.trials.to_string(),
    ]);
    Ok((table, stats.excluded))
}
