//! `cmc`: exact concordant monotone correlation from the command line.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 numerical failure,
//! 3 property violation reported by `verify`.

mod instance;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cmc_core::engine::symmetric_grid;
use cmc_core::harness::{run_suite, SuiteParams};
use cmc_core::oracle::{grid_oracle, OracleConfig};
use cmc_core::{cmc_exact, CmcMode, CmcOptions};
use serde_json::Value;

use instance::{read_samples, InstanceFile};

#[derive(Debug, Parser)]
#[command(name = "cmc", version, about = "Concordant monotone correlation of finite joint distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    PaperFaithful,
    Extended,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Measure {
    Cmc,
    CmcPlus,
    CmcXrev,
    Maxcorr,
    Pearson,
    Spearman,
    Kendall,
    All,
}

impl Measure {
    fn name(self) -> &'static str {
        match self {
            Measure::Cmc => "cmc",
            Measure::CmcPlus => "cmc_plus",
            Measure::CmcXrev => "cmc_xrev",
            Measure::Maxcorr => "maxcorr",
            Measure::Pearson => "pearson",
            Measure::Spearman => "spearman",
            Measure::Kendall => "kendall",
            Measure::All => "all",
        }
    }
}

#[derive(Debug, clap::Args)]
struct EngineArgs {
    #[arg(long, value_enum, default_value = "extended")]
    mode: Mode,
    /// Override the cap on strict relations enumerated by the exact engine.
    #[arg(long)]
    cap: Option<usize>,
}

impl EngineArgs {
    fn options(&self) -> CmcOptions {
        let mut opts = CmcOptions {
            mode: match self.mode {
                Mode::PaperFaithful => CmcMode::PaperFaithful,
                Mode::Extended => CmcMode::Extended,
            },
            ..CmcOptions::default()
        };
        if let Some(cap) = self.cap {
            eprintln!(
                "cmc: enumeration cap set to {cap} strict relations (default {}); cost grows exponentially with it",
                opts.relation_cap
            );
            opts.relation_cap = cap;
        }
        opts
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute correlation measures of an instance file.
    Compute {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        measure: Measure,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the exact engine against the brute-force grid oracle.
    Oracle {
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 50)]
        refine_iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite.
    Verify {
        /// One of sandwich, rank-dominance, tensorization, fkg, mgf, independence, balanced-disagreement.
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Cube dimension for the fkg suite.
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Comma-separated magnitudes m; the mgf suite uses the grid {±m}².
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2")]
        grid: Vec<f64>,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a totally ordered instance file from x,y samples.
    FromSamples {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// An error with its exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<cmc_core::Error> for Failure {
    fn from(e: cmc_core::Error) -> Self {
        Failure {
            code: if e.is_numeric() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

/// Writes the document to `out` atomically, or to stdout.
fn emit(doc: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Failure::input(e.to_string()))?;
    text.push('\n');
    let io = |e: std::io::Error| Failure::input(format!("writing output: {e}"));
    match out {
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io),
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(text.as_bytes()).map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Compute {
            input,
            measure,
            engine,
            out,
        } => {
            let inst = InstanceFile::read(&input)?.resolve()?;
            let doc = report::compute_document(&inst, measure.name(), &engine.options())?;
            emit(&doc, out.as_deref())?;
            Ok(0)
        }
        Command::Oracle {
            input,
            step,
            refine_iters,
            seed,
            engine,
            out,
        } => {
            let inst = InstanceFile::read(&input)?.resolve()?;
            let cfg = OracleConfig {
                grid_step: step,
                refine_iters,
                seed,
                ..OracleConfig::default()
            };
            let outcome = grid_oracle(&inst.pmf, &inst.x_order, &inst.y_order, &cfg)?;
            let exact = cmc_exact(&inst.pmf, &inst.x_order, &inst.y_order, &engine.options())?;
            emit(&report::oracle_document(&inst, &outcome, &exact, step, refine_iters), out.as_deref())?;
            Ok(0)
        }
        Command::Verify {
            suite,
            seed,
            trials,
            n,
            grid,
            engine,
            out,
        } => {
            let params = SuiteParams {
                seed,
                trials,
                n,
                grid: symmetric_grid(&grid),
                options: engine.options(),
            };
            let report = run_suite(&suite, &params)?;
            emit(&serde_json::json!(report), out.as_deref())?;
            if report.pass {
                Ok(0)
            } else {
                eprintln!(
                    "cmc: suite {suite} violated: max violation {:e} exceeds tolerance {:e}",
                    report.max_violation, report.tolerance
                );
                Ok(3)
            }
        }
        Command::FromSamples { csv, out } => {
            let pmf = read_samples(&csv)?;
            let doc = serde_json::to_value(InstanceFile::from_pmf(&pmf)).map_err(|e| Failure::input(e.to_string()))?;
            emit(&doc, out.as_deref())?;
            Ok(0)
        }
    }
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
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("cmc: error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
