//! The `varlex` command line.
//!
//! The report goes to stdout in the requested format; with `--out DIR` it is
//! also written to `DIR/report.{json,csv}` next to the command's artifacts.
//! Progress and wall-clock time go to stderr only, so reports stay
//! byte-identical across runs and thread counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use varlex_core::domain::GridFunction;
use varlex_core::exponent::ExponentField;

use crate::calibration::{default_output, Calibration};
use crate::config::{at, ExperimentConfig, Which};
use crate::error::{HarnessError, Result};
use crate::experiments::{self, Bounds, Context, CALIBRATION_MARGIN, CALIBRATION_SEEDS};
use crate::report::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "varlex", version, about = "Variable-exponent commutator experiments")]
pub struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for the report and artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Worker threads; the output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Luxemburg norm of a grid function stored as CSV.
    Norm {
        #[arg(long)]
        function: PathBuf,
        /// Tabulated exponent on the same grid; defaults to the config's `p`.
        #[arg(long)]
        exponent: Option<PathBuf>,
        /// Tabulated log power on the same grid; defaults to the config's `log_power`.
        #[arg(long)]
        log_power: Option<PathBuf>,
    },
    /// Class-D check of the configured kernel.
    CheckKernel,
    /// Cube-condition report of the configured theorem.
    Certify,
    /// End-to-end theorem check on random test functions.
    Verify {
        #[arg(value_parser = parse_which)]
        which: Which,
    },
    /// Invariant suite.
    Suite,
    /// Indicator-norm formula table and its lemma chain.
    Formula,
    /// Stopping-time families.
    Sparse,
    /// Re-measures every calibrated bound and rewrites the defaults file.
    Calibrate {
        /// Configs to measure; defaults to every file in the shipped configs directory.
        configs: Vec<PathBuf>,
        /// Output file; defaults to `$VARLEX_DEFAULTS` or the shipped file.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

fn parse_which(s: &str) -> std::result::Result<Which, String> {
    s.parse()
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    match &cli.config {
        Some(p) => ExperimentConfig::load(p),
        None => Err(HarnessError::Parse("this command needs --config".into())),
    }
}

fn context(cli: &Cli, which: Option<Which>) -> Result<Context> {
    let mut cfg = load_config(cli)?;
    if let Some(w) = which {
        cfg.theorem.which = w;
    }
    Context::new(cfg, cli.seed)
}

fn artifact(out: &Option<PathBuf>, name: &str) -> Result<Option<PathBuf>> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Some(dir.join(name)))
        }
        None => Ok(None),
    }
}

fn emit(cli: &Cli, report: &RunReport) -> Result<()> {
    let text = match cli.format {
        Format::Json => report.to_json()? + "\n",
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            String::from_utf8(buf).map_err(|e| HarnessError::Parse(e.to_string()))?
        }
    };
    print!("{text}");
    let ext = if cli.format == Format::Json { "json" } else { "csv" };
    if let Some(path) = artifact(&cli.out, &format!("report.{ext}"))? {
        fs::write(path, &text)?;
    }
    eprint!("{}", report.summary());
    Ok(())
}

/// Runs the command; `Ok(true)` iff every check passed.
pub fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.jobs {
        // Fails only if a pool already exists, in which case that pool is used.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let start = Instant::now();
    let report = dispatch(cli)?;
    emit(cli, &report)?;
    eprintln!("{} in {:.2}s", if report.pass() { "pass" } else { "FAIL" }, start.elapsed().as_secs_f64());
    Ok(report.pass())
}

fn dispatch(cli: &Cli) -> Result<RunReport> {
    match &cli.command {
        Command::Norm { function, exponent, log_power } => norm(cli, function, exponent.as_deref(), log_power.as_deref()),
        Command::CheckKernel => {
            let ctx = context(cli, None)?;
            let (class_d, report) = experiments::check_kernel(&ctx)?;
            if let Some(path) = artifact(&cli.out, "class_d.json")? {
                fs::write(path, to_json(&class_d)?)?;
            }
            Ok(report)
        }
        Command::Certify => {
            let ctx = context(cli, None)?;
            let (fp, report) = experiments::certify(&ctx)?;
            if let Some(path) = artifact(&cli.out, "cubes.csv")? {
                fp.write_csv_file(path)?;
            }
            if let Some(path) = artifact(&cli.out, "kappa.json")? {
                fs::write(path, fp.summary_json()?)?;
            }
            Ok(report)
        }
        Command::Verify { which } => {
            let ctx = context(cli, Some(*which))?;
            let calibration = Calibration::load()?;
            experiments::verify(&ctx, &Bounds::frozen(&calibration))
        }
        Command::Suite => {
            let ctx = context(cli, None)?;
            let calibration = Calibration::load()?;
            crate::suite::run(&ctx, &Bounds::frozen(&calibration))
        }
        Command::Formula => {
            let ctx = context(cli, None)?;
            let calibration = Calibration::load()?;
            let (table, chain, report) = experiments::formula(&ctx, &Bounds::frozen(&calibration))?;
            if let Some(path) = artifact(&cli.out, "formula.csv")? {
                table.write_csv_file(path)?;
            }
            if let Some(path) = artifact(&cli.out, "lemma_chain.json")? {
                fs::write(path, to_json(&chain)?)?;
            }
            Ok(report)
        }
        Command::Sparse => {
            let ctx = context(cli, None)?;
            let (families, report) = experiments::sparse(&ctx)?;
            for (i, f) in families.iter().enumerate() {
                if let Some(path) = artifact(&cli.out, &format!("stopping_{i}.json"))? {
                    fs::write(path, f.to_json()?)?;
                }
            }
            Ok(report)
        }
        Command::Calibrate { configs, write } => calibrate(configs, write.clone()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| HarnessError::Parse(e.to_string()))
}

fn norm(cli: &Cli, function: &Path, exponent: Option<&Path>, log_power: Option<&Path>) -> Result<RunReport> {
    let f = GridFunction::<f64>::read_csv(function)?;
    let cfg = cli.config.as_ref().map(ExperimentConfig::load).transpose()?;
    let setup = cfg.as_ref().map(|c| c.setup()).transpose()?;
    let p = match exponent {
        Some(path) => at("--exponent", ExponentField::tabulated(GridFunction::read_csv(path)?))?,
        None => setup
            .as_ref()
            .and_then(|s| s.p.clone())
            .ok_or_else(|| HarnessError::Parse("norm needs --exponent or a config with exponents.p".into()))?,
    };
    let theta = match log_power {
        Some(path) => Some(at("--log-power", ExponentField::tabulated_nonnegative(GridFunction::read_csv(path)?))?),
        None => setup.as_ref().and_then(|s| s.log_power.clone()),
    };
    let tol = cfg.as_ref().map_or(1e-10, |c| c.tolerances.luxemburg);
    experiments::norm(&f, &p, theta.as_ref(), tol)
}

fn shipped_configs() -> Result<Vec<PathBuf>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    Ok(paths)
}

fn calibrate(configs: &[PathBuf], write: Option<PathBuf>) -> Result<RunReport> {
    let paths = if configs.is_empty() { shipped_configs()? } else { configs.to_vec() };
    let cal = experiments::calibrate(&paths)?;
    let names: Vec<String> =
        paths.iter().map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into())).collect();
    let provenance = format!(
        "Frozen by `varlex calibrate`; do not edit by hand.\n\
         Each bound is the largest value measured over seeds {:?}, times {CALIBRATION_MARGIN},\n\
         rounded up to two significant digits.\n\
         Configs: {}",
        CALIBRATION_SEEDS,
        names.join(", ")
    );
    let target = write.unwrap_or_else(default_output);
    fs::write(&target, cal.render(&provenance)?)?;
    eprintln!("wrote {}", target.display());
    let mut report = RunReport::new("calibrate", names.join(","), 0);
    for (k, v) in cal.verify.iter() {
        report.push(crate::report::Check::new(format!("verify.{k}"), "frozen end-to-end bound").value("bound", *v));
    }
    for (k, v) in cal.constants.iter() {
        report.push(crate::report::Check::new(k.clone(), "frozen suite constant").value("bound", *v));
    }
    Ok(report)
}
