use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use prodline::commitment::{commitment_schedule, first_best_schedule};
use prodline::limited_commitment::{limited_schedule, monotonicity_check, reprice};
use prodline::oracle::run_oracle;
use prodline::plot::{plot_data, render_svg};
use prodline::sweep::{failure_region, sweep, threads_from_env, write_csv, SweepRange};
use prodline::verifier::{verify, VerifyOptions};
use prodline::{ModelParams, Schedule, ScheduleRegime, TieBreak};

const EXIT_VALIDATION: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_ORACLE: u8 = 4;
const EXIT_IO: u8 = 5;

/// Product-line design with limited commitment.
#[derive(Parser)]
#[command(name = "prodline", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the schedule of a regime as JSON.
    Solve {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "limited")]
        regime: RegimeArg,
        /// Tie rule at the indifference mean; defaults to the firm-preferred one.
        #[arg(long, value_enum)]
        tie: Option<TieArg>,
    },
    /// Run IC, IR, Bayes-plausibility, sequential-rationality, revenue and monotonicity checks.
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "limited")]
        regime: RegimeArg,
        #[arg(long, value_enum)]
        tie: Option<TieArg>,
        /// Type and report grid size for the IC check.
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        /// Largest tolerated gain from misreporting.
        #[arg(long, default_value_t = 1e-6)]
        ic_tol: f64,
        /// Also check sequential rationality of commitment schedules.
        #[arg(long)]
        check_seqrat: bool,
    },
    /// Compare the closed form with the LP optimum and the partition search.
    Oracle {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 2001)]
        grid: usize,
        /// Largest tolerated |LP - closed form|; defaults to 4/(grid - 1).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sweep (mu_bar, c) and write CSV.
    Sweep {
        /// mu_bar range as lo:hi:n.
        #[arg(long)]
        mu_range: String,
        /// c range as lo:hi:n; lo <= 0 excludes the left end.
        #[arg(long)]
        c_range: String,
        #[arg(long, default_value_t = 1.0)]
        vh: f64,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a JSON summary of the monotonicity-failure region here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Draw quality schedules as SVG, with a JSON sidecar of the segments.
    Plot {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: PathBuf,
        /// Sidecar path; defaults to the SVG path with a .json extension.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "firstbest,commitment,limited")]
        curves: Vec<RegimeArg>,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    vl: f64,
    #[arg(long)]
    vh: f64,
    #[arg(long)]
    c: f64,
}

impl ParamArgs {
    fn validate(&self) -> prodline::Result<ModelParams> {
        ModelParams::new(self.vl, self.vh, self.c)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Firstbest,
    Commitment,
    Limited,
}

impl From<RegimeArg> for ScheduleRegime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Firstbest => ScheduleRegime::FirstBest,
            RegimeArg::Commitment => ScheduleRegime::Commitment,
            RegimeArg::Limited => ScheduleRegime::Limited,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Low,
    High,
}

impl From<TieArg> for TieBreak {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::Low => TieBreak::FavorLow,
            TieArg::High => TieBreak::FavorHigh,
        }
    }
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn validation(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_VALIDATION,
        error: e.into(),
    }
}

fn io_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_IO,
        error: e.into(),
    }
}

fn build_schedule(params: &ModelParams, regime: RegimeArg, tie: Option<TieArg>) -> Result<Schedule> {
    let schedule = match regime {
        RegimeArg::Firstbest => first_best_schedule(params)?,
        RegimeArg::Commitment => commitment_schedule(params)?,
        RegimeArg::Limited => limited_schedule(params)?,
    };
    Ok(match (regime, tie) {
        (RegimeArg::Limited, Some(t)) if TieBreak::from(t) != schedule.tie => reprice(&schedule, t.into())?,
        _ => schedule,
    })
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(io_failure)?;
    let mut out = io::stdout().lock();
    writeln!(out, "{text}").map_err(io_failure)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(io_failure)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Solve { params, regime, tie } => {
            let p = params.validate().map_err(validation)?;
            let schedule = build_schedule(&p, regime, tie).map_err(validation)?;
            print_json(&schedule)?;
            Ok(0)
        }
        Command::Verify {
            params,
            regime,
            tie,
            grid,
            ic_tol,
            check_seqrat,
        } => {
            let p = params.validate().map_err(validation)?;
            let schedule = build_schedule(&p, regime, tie).map_err(validation)?;
            let opts = VerifyOptions {
                types: grid,
                reports: grid,
                ic_tol,
                check_seq_rat: check_seqrat.then_some(true),
            };
            let report = verify(&schedule, &opts).map_err(validation)?;
            let mono = match regime {
                RegimeArg::Limited => Some(monotonicity_check(&p).map_err(validation)?),
                _ => None,
            };
            let mut value = serde_json::to_value(&report).map_err(io_failure)?;
            value["monotonicity"] = serde_json::to_value(&mono).map_err(io_failure)?;
            print_json(&value)?;
            let mono_ok = mono.as_ref().is_none_or(|m| m.numeric_ok);
            Ok(if report.passed && mono_ok { 0 } else { EXIT_VERIFY })
        }
        Command::Oracle { params, grid, tol } => {
            let p = params.validate().map_err(validation)?;
            if grid < prodline::oracle::MIN_GRID {
                eprintln!(
                    "warning: grid {grid} is below the minimum of {}",
                    prodline::oracle::MIN_GRID
                );
            }
            let report = run_oracle(&p, grid).map_err(validation)?;
            print_json(&report)?;
            let tol = tol.unwrap_or(4.0 / (grid as f64 - 1.0));
            let ok = report.gaps.lp_minus_closed.abs() <= tol && report.certificate_check.passed;
            Ok(if ok { 0 } else { EXIT_ORACLE })
        }
        Command::Sweep {
            mu_range,
            c_range,
            vh,
            out,
            summary,
        } => {
            let mu = SweepRange::parse(&mu_range).map_err(validation)?;
            let c = SweepRange::parse(&c_range).map_err(validation)?;
            let rows = sweep(&mu, &c, vh, threads_from_env()).map_err(validation)?;
            match out {
                Some(path) => {
                    let file = fs::File::create(&path)
                        .with_context(|| format!("cannot create {}", path.display()))
                        .map_err(io_failure)?;
                    write_csv(&rows, file).map_err(io_failure)?;
                }
                None => write_csv(&rows, io::stdout().lock()).map_err(io_failure)?,
            }
            if let Some(path) = summary {
                let region = failure_region(&rows, c.points().len());
                let text = serde_json::to_string_pretty(&region).map_err(io_failure)?;
                write_file(&path, &(text + "\n"))?;
            }
            Ok(0)
        }
        Command::Plot {
            params,
            out,
            sidecar,
            curves,
        } => {
            let p = params.validate().map_err(validation)?;
            let regimes: Vec<ScheduleRegime> = curves.into_iter().map(Into::into).collect();
            let data = plot_data(&p, &regimes).map_err(validation)?;
            write_file(&out, &render_svg(&data))?;
            let sidecar = sidecar.unwrap_or_else(|| out.with_extension("json"));
            let text = serde_json::to_string_pretty(&data).map_err(io_failure)?;
            write_file(&sidecar, &(text + "\n"))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
