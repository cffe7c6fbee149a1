//! The `noncausal` command line: argument parsing, `--config` merging, run
//! manifests and exit codes.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kv::KvDoc;

pub const MANIFEST: &str = "run_manifest.txt";

pub const DESK_N: usize = 100_000;
pub const DESK_K: usize = 10_000;
pub const DESK_S: usize = 1_000;
pub const PAPER_N: usize = 1_000_000;
pub const PAPER_K: usize = 100_000;
pub const PAPER_S: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "noncausal", version, about = "Mixed causal-noncausal autoregressions and probability-in-bounds forecasts")]
#[command(args_override_self = true, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Year-on-year transform of a price or level series.
    Transform(TransformArgs),
    /// Identify and estimate a MAR, SMAR or MARX model.
    Fit(FitArgs),
    /// Probability-in-bounds forecast from a fitted model.
    Forecast(ForecastArgs),
    /// Expanding-window forecasts over a range of origins.
    Backtest(BacktestArgs),
    /// ROC curves and AUC ranking of credibility indices.
    Credibility(CredibilityArgs),
    /// Simulate a series from a model file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Key-value file of flag defaults; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TransformKind {
    /// `100 (ln P_t - ln P_{t-12})`.
    YoyLog,
    /// `100 (X_t / X_{t-12} - 1)`.
    PctYoy,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "price")]
    pub column: String,
    #[arg(long, value_enum, default_value = "yoy-log")]
    pub kind: TransformKind,
    /// Column name of the transformed series.
    #[arg(long, default_value = "y")]
    pub name: String,
    #[arg(long, default_value = "transformed.csv")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub column: String,
    /// Largest pseudo-causal order considered.
    #[arg(long, default_value_t = 12)]
    pub p_max: usize,
    /// Fix the causal order (with `--s`) and skip order selection.
    #[arg(long, requires = "s")]
    pub r: Option<usize>,
    #[arg(long, requires = "r")]
    pub s: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub n_starts: usize,
    /// Seasonal displacements `D1[,D2]`.
    #[arg(long, conflicts_with = "exog")]
    pub smar: Option<String>,
    /// Regressor panel; fits a MARX with the selected MAR orders.
    #[arg(long)]
    pub exog: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub ardl_max_lag_y: usize,
    #[arg(long, default_value_t = 3)]
    pub ardl_max_lag_x: usize,
    #[arg(long, default_value_t = 24)]
    pub acf_lags: usize,
}

#[derive(Debug, Args)]
pub struct SimulationCounts {
    /// LLS simulations (default 100000, or 1000000 with `--paper-scale`).
    #[arg(long)]
    pub n: Option<usize>,
    /// LLS truncation.
    #[arg(long, default_value_t = crate::forecast::DEFAULT_TRUNCATION)]
    pub m: usize,
    /// SIR proposal paths (default 10000, or 100000 with `--paper-scale`).
    #[arg(long)]
    pub k: Option<usize>,
    /// SIR resampled paths (default 1000, or 10000 with `--paper-scale`).
    #[arg(long)]
    pub s_resample: Option<usize>,
    #[arg(long, action = ArgAction::SetTrue)]
    pub paper_scale: bool,
    #[arg(long, default_value_t = crate::forecast::DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
}

impl SimulationCounts {
    pub fn resolved(&self) -> (usize, usize, usize) {
        let (n, k, s) = if self.paper_scale { (PAPER_N, PAPER_K, PAPER_S) } else { (DESK_N, DESK_K, DESK_S) };
        (self.n.unwrap_or(n), self.k.unwrap_or(k), self.s_resample.unwrap_or(s))
    }
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub column: String,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub bounds: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
    /// LLS, GJ or SIR.
    #[arg(long, default_value = "LLS")]
    pub method: String,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub counts: SimulationCounts,
    /// Regressor panel over the sample (MARX models).
    #[arg(long)]
    pub exog: Option<PathBuf>,
    /// Regressor forecasts for the months after the last observation.
    #[arg(long)]
    pub exog_future: Option<PathBuf>,
    /// Late regressor vintages overwriting matching rows of `--exog`.
    #[arg(long)]
    pub vintage: Option<PathBuf>,
    /// Write the one-step density grid (GJ).
    #[arg(long, action = ArgAction::SetTrue)]
    pub density: bool,
    /// Write the resampled paths (SIR).
    #[arg(long, action = ArgAction::SetTrue)]
    pub paths: bool,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub column: String,
    #[arg(long)]
    pub bounds: PathBuf,
    /// First forecast origin (YYYY-MM).
    #[arg(long)]
    pub from: String,
    /// Last forecast origin (YYYY-MM).
    #[arg(long)]
    pub to: String,
    #[arg(long, default_value = "1,3,6")]
    pub horizons: String,
    #[arg(long, default_value = "LLS,SIR")]
    pub methods: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// Re-select the orders at each origin instead of fixing them.
    #[arg(long, action = ArgAction::SetTrue)]
    pub select: bool,
    #[arg(long, default_value_t = 12)]
    pub p_max: usize,
    #[arg(long, default_value_t = 8)]
    pub n_starts: usize,
    #[command(flatten)]
    pub counts: SimulationCounts,
}

#[derive(Debug, Args)]
pub struct CredibilityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Index CSVs (`date,value`), comma separated; names come from file stems.
    #[arg(long, required = true)]
    pub index: String,
    /// Outcomes CSV (`date,outcome`).
    #[arg(long, conflicts_with_all = ["realized", "bounds"])]
    pub outcomes: Option<PathBuf>,
    /// Realized series, classified against `--bounds`.
    #[arg(long, requires = "bounds")]
    pub realized: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub column: String,
    #[arg(long, requires = "realized")]
    pub bounds: Option<PathBuf>,
    /// Comma-separated thresholds; defaults to every distinct index value.
    #[arg(long)]
    pub thresholds: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Date of the first simulated value (YYYY-MM).
    #[arg(long, default_value = "2000-01")]
    pub start: String,
    #[arg(long)]
    pub burn: Option<usize>,
    /// Regressor panel (MARX models), covering burn-in and sample.
    #[arg(long)]
    pub exog: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub name: String,
}

/// Keys a manifest carries that are not flags.
fn is_bookkeeping(key: &str) -> bool {
    key == "command" || key == "config" || key.starts_with("sha256.")
}

/// Expands `--config FILE` into flags placed before the explicit ones, so
/// that explicit flags override the file.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(sub_name) = args.get(1).and_then(|a| a.to_str()).map(str::to_owned) else {
        return Ok(args);
    };
    let root = Cli::command();
    let Some(sub) = root.find_subcommand(&sub_name) else {
        return Ok(args);
    };
    let mut config = None;
    let mut i = 2;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            config = args.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        }
        i += 1;
    }
    let Some(path) = config else {
        return Ok(args);
    };
    let doc = KvDoc::load(&path)?;
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in doc.entries() {
        if is_bookkeeping(key) {
            continue;
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| Error::InvalidArgument(format!("{}: unknown key `{key}` for `{sub_name}`", path.display())))?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}={value}").into());
        } else if value == "true" {
            injected.push(format!("--{key}").into());
        } else if value != "false" {
            return Err(Error::InvalidArgument(format!("{}: `{key}` must be true or false", path.display())));
        }
    }
    let mut out = args[..2].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

/// Every resolved flag value of the subcommand, in declaration order.
fn resolved_flags(sub_name: &str, matches: &ArgMatches) -> Vec<(String, String)> {
    let root = Cli::command();
    let Some(sub) = root.find_subcommand(sub_name) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for arg in sub.get_arguments() {
        let (Some(long), id) = (arg.get_long(), arg.get_id().as_str()) else {
            continue;
        };
        if long == "config" || long == "help" || long == "version" {
            continue;
        }
        if let Ok(Some(values)) = matches.try_get_raw(id) {
            let joined: Vec<String> = values.map(|v| v.to_string_lossy().into_owned()).collect();
            out.push((long.to_string(), joined.join(",")));
        }
    }
    out
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Records the resolved configuration and output hashes in the output directory.
fn write_manifest(out: &Path, sub_name: &str, flags: &[(String, String)], outputs: &[String]) -> Result<()> {
    let mut doc = KvDoc::new();
    doc.set("command", sub_name);
    for (k, v) in flags {
        doc.set(k.clone(), v.clone());
    }
    let mut names = outputs.to_vec();
    names.sort();
    names.dedup();
    for name in names {
        doc.set(format!("sha256.{name}"), sha256_file(&out.join(&name))?);
    }
    doc.save(out.join(MANIFEST))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    let (sub_name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let flags = resolved_flags(sub_name, sub_matches);
    match execute(&cli.command, sub_name, &flags) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: &Command, sub_name: &str, flags: &[(String, String)]) -> Result<()> {
    let common = match command {
        Command::Transform(a) => &a.common,
        Command::Fit(a) => &a.common,
        Command::Forecast(a) => &a.common,
        Command::Backtest(a) => &a.common,
        Command::Credibility(a) => &a.common,
        Command::Simulate(a) => &a.common,
    };
    std::fs::create_dir_all(&common.out)?;
    let mut outputs = Outputs::new(&common.out);
    let result = match command {
        Command::Transform(a) => commands::transform(a, &mut outputs),
        Command::Fit(a) => commands::fit(a, &mut outputs),
        Command::Forecast(a) => commands::forecast(a, &mut outputs),
        Command::Backtest(a) => commands::backtest(a, &mut outputs),
        Command::Credibility(a) => commands::credibility(a, &mut outputs),
        Command::Simulate(a) => commands::simulate(a, &mut outputs),
    };
    // Whatever was written is recorded, including on failure.
    write_manifest(&common.out, sub_name, flags, &outputs.written)?;
    result
}

/// Output files written by a command, relative to the output directory.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn config_flags_precede_explicit_ones() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        std::fs::write(&cfg, "command = simulate\nn = 50\nseed = 3\nsha256.series.csv = abc\n").unwrap();
        let merged = merge_config(os(&["noncausal", "simulate", "--config", cfg.to_str().unwrap(), "--n", "9", "--model", "m"])).unwrap();
        let cli = Cli::try_parse_from(merged).unwrap();
        let Command::Simulate(a) = cli.command else { panic!() };
        assert_eq!((a.n, a.seed), (9, 3));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        std::fs::write(&cfg, "bogus = 1\n").unwrap();
        assert!(merge_config(os(&["noncausal", "simulate", "--config", cfg.to_str().unwrap()])).is_err());
    }

    #[test]
    fn boolean_config_keys() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        std::fs::write(&cfg, "paper-scale = true\ndensity = false\n").unwrap();
        let merged = merge_config(os(&["noncausal", "forecast", "--config", cfg.to_str().unwrap()])).unwrap();
        assert!(merged.iter().any(|a| a == "--paper-scale"));
        assert!(!merged.iter().any(|a| a == "--density"));
    }

    #[test]
    fn scale_defaults() {
        let c = SimulationCounts {
            n: None,
            m: 50,
            k: Some(7),
            s_resample: None,
            paper_scale: true,
            grid_points: 11,
        };
        assert_eq!(c.resolved(), (PAPER_N, 7, PAPER_S));
    }
}
