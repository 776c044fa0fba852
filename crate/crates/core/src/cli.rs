//! The `mwr` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::comparator::{attribute, compare_pairs, greedy_match, tally};
use crate::error::{Error, Result};
use crate::hypothesis::{power, sample_size, DesignTarget, TestMethod};
use crate::input::{read_hierarchy, read_pairs, read_subjects};
use crate::intervals::{NbMethod, WrMethod};
use crate::numeric::Alpha;
use crate::report::{analyze, to_json, AnalysisRequest, CompareReport, DesignReport, OutputFormat};
use crate::simulation::{run_grid_with_threads, GridConfig};
use crate::PairCounts;

/// Environment variable holding the default output format.
pub const FORMAT_ENV: &str = "MWR_FORMAT";

#[derive(Debug, Parser)]
#[command(
    name = "mwr",
    version,
    about = "Matched net benefit and win ratio inference"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tests and confidence sets for win/loss/tie counts.
    Analyze(AnalyzeArgs),
    /// Adjudicate a matched-pair file on an outcome hierarchy, then analyze.
    Compare(CompareArgs),
    /// Sample size (or power) for a target effect.
    Design(DesignArgs),
    /// Run a Monte-Carlo grid.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Two-sided significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Use the critical value rounded to two decimals (1.96 at 0.05).
    #[arg(long)]
    pub rounded_z: bool,
    /// Output format.
    #[arg(long, env = FORMAT_ENV, default_value = "text", value_parser = parse_format)]
    pub format: OutputFormat,
}

impl Common {
    fn alpha(&self) -> Result<Alpha> {
        if self.rounded_z {
            Alpha::rounded(self.alpha)
        } else {
            Alpha::new(self.alpha)
        }
    }
}

#[derive(Debug, Args)]
pub struct Methods {
    /// Tests to run: z, z-pocock, exact.
    #[arg(long, value_delimiter = ',', value_parser = parse_from_str::<TestMethod>)]
    pub tests: Option<Vec<TestMethod>>,
    /// Net benefit intervals: wald, mover-wilson, mover-ac.
    #[arg(long, value_delimiter = ',', value_parser = parse_from_str::<NbMethod>)]
    pub nb_methods: Option<Vec<NbMethod>>,
    /// Win ratio intervals: pocock, wald, wald-log, fieller, mover-wilson, mover-ac.
    #[arg(long, value_delimiter = ',', value_parser = parse_from_str::<WrMethod>)]
    pub wr_methods: Option<Vec<WrMethod>>,
}

impl Methods {
    /// All methods when none is named; otherwise only the named ones.
    fn request(&self, counts: PairCounts, alpha: Alpha) -> AnalysisRequest {
        if self.tests.is_none() && self.nb_methods.is_none() && self.wr_methods.is_none() {
            return AnalysisRequest::all(counts, alpha);
        }
        AnalysisRequest {
            counts,
            alpha,
            tests: self.tests.clone().unwrap_or_default(),
            nb_methods: self.nb_methods.clone().unwrap_or_default(),
            wr_methods: self.wr_methods.clone().unwrap_or_default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Counts as wins,losses,ties.
    #[arg(long, value_parser = parse_counts)]
    pub counts: PairCounts,
    #[command(flatten)]
    pub methods: Methods,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Matched-pair CSV (two rows per pair_id).
    #[arg(
        long,
        conflicts_with = "subjects",
        required_unless_present = "subjects"
    )]
    pub pairs: Option<PathBuf>,
    /// Unpaired subject CSV with risk_score; matched greedily before comparison.
    #[arg(long)]
    pub subjects: Option<PathBuf>,
    /// Outcome hierarchy (TOML).
    #[arg(long)]
    pub hierarchy: PathBuf,
    #[command(flatten)]
    pub methods: Methods,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Target net benefit (with --pwl).
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["wr", "pw", "pl"], requires = "pwl")]
    pub nb: Option<f64>,
    /// Target win ratio (with --pwl).
    #[arg(long, conflicts_with_all = ["pw", "pl"], requires = "pwl")]
    pub wr: Option<f64>,
    /// Probability that a pair is decided, pi_w + pi_l.
    #[arg(long)]
    pub pwl: Option<f64>,
    /// Win probability (with --pl).
    #[arg(long, requires = "pl")]
    pub pw: Option<f64>,
    /// Loss probability (with --pw).
    #[arg(long, requires = "pw")]
    pub pl: Option<f64>,
    /// Target power.
    #[arg(long, default_value_t = 0.8)]
    pub power: f64,
    /// Report the power at this many pairs instead of solving for N.
    #[arg(long)]
    pub n: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Grid config (TOML).
    pub config: PathBuf,
    /// Override the number of replicates.
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write <OUT>.csv and <OUT>.json instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output format when printing to stdout.
    #[arg(long, env = FORMAT_ENV, default_value = "csv", value_parser = parse_format)]
    pub format: OutputFormat,
}

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    parse_from_str(s)
}

fn parse_counts(s: &str) -> std::result::Result<PairCounts, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected wins,losses,ties, got '{s}'"));
    }
    let mut v = [0u64; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| format!("'{p}' is not a non-negative integer"))?;
    }
    Ok(PairCounts::new(v[0], v[1], v[2]))
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<String> {
    let req = a.methods.request(a.counts, a.common.alpha()?);
    Ok(analyze(&req)?.render(a.common.format))
}

fn cmd_compare(a: &CompareArgs) -> Result<String> {
    let alpha = a.common.alpha()?;
    let hierarchy = read_hierarchy(&a.hierarchy)?;
    let pairs = match (&a.pairs, &a.subjects) {
        (Some(p), _) => read_pairs(p, &hierarchy)?,
        (None, Some(s)) => {
            let (t, c) = read_subjects(s, &hierarchy)?;
            greedy_match(&t, &c)?
        }
        (None, None) => return Err(Error::invalid("give --pairs or --subjects")),
    };
    if pairs.is_empty() {
        return Err(Error::EmptyData);
    }
    let verdicts = compare_pairs(&pairs, &hierarchy)?;
    let counts = tally(&verdicts);
    let report = CompareReport {
        counts,
        attribution: attribute(&verdicts, &hierarchy),
        analysis: Some(analyze(&a.methods.request(counts, alpha))?),
    };
    Ok(report.render(a.common.format))
}

fn cmd_design(a: &DesignArgs) -> Result<String> {
    let alpha = a.common.alpha()?;
    let need_pwl = || {
        a.pwl
            .ok_or_else(|| Error::invalid("--pwl is required with --nb or --wr"))
    };
    let target = match (a.nb, a.wr, a.pw, a.pl) {
        (Some(delta), None, None, None) => DesignTarget::NetBenefit {
            delta,
            pi_decided: need_pwl()?,
        },
        (None, Some(ratio), None, None) => DesignTarget::WinRatio {
            ratio,
            pi_decided: need_pwl()?,
        },
        (None, None, Some(pi_win), Some(pi_loss)) => DesignTarget::Raw { pi_win, pi_loss },
        _ => {
            return Err(Error::invalid(
                "give one of --nb/--pwl, --wr/--pwl or --pw/--pl",
            ))
        }
    };
    let (pi_win, pi_loss) = target.probabilities()?;
    let (n_pairs, target_power) = match a.n {
        Some(n) => (n, None),
        None => (sample_size(&target, &alpha, a.power)?, Some(a.power)),
    };
    let report = DesignReport {
        target,
        pi_win,
        pi_loss,
        alpha: alpha.value(),
        z: alpha.z(),
        target_power,
        n_pairs,
        power: power(n_pairs, &target, &alpha)?,
    };
    Ok(report.render(a.common.format))
}

fn write_file(path: PathBuf, text: &str) -> Result<()> {
    std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<String> {
    let mut cfg = GridConfig::read(&a.config)?;
    let config_err = |m: String| Error::Config {
        path: a.config.clone(),
        message: m,
    };
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if cfg.replicates == 0 {
        return Err(config_err("replicates: must be at least 1".into()));
    }
    let scenarios = cfg.scenarios().map_err(|e| config_err(e.to_string()))?;
    let threads = a.threads.unwrap_or_else(rayon::current_num_threads);
    let report = run_grid_with_threads(&scenarios, threads)?;
    match &a.out {
        Some(prefix) => {
            let csv = prefix.with_extension("csv");
            let json = prefix.with_extension("json");
            write_file(csv.clone(), &report.to_csv())?;
            write_file(json.clone(), &to_json(&report))?;
            Ok(format!(
                "{} scenarios; wrote {} and {}\n",
                report.scenarios.len(),
                csv.display(),
                json.display()
            ))
        }
        None => Ok(match a.format {
            OutputFormat::Json => to_json(&report),
            _ => report.to_csv(),
        }),
    }
}

/// Execute a parsed command and return its rendered output.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Design(a) => cmd_design(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

/// Full CLI entry point: parse, run, print, map errors to exit codes
/// (0 success, 2 input error, 1 internal error).
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = std::panic::catch_unwind(|| execute(&cli));
    match outcome {
        Ok(Ok(text)) => {
            let mut out = std::io::stdout().lock();
            if out
                .write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(1)
        }
    }
}
