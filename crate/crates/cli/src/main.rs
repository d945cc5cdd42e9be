//! `polychain`: generate truncated apartments and trees, verify the
//! contraction and its estimates, and emit JSON reports with CSV plot data.

mod config;
mod export;
mod report;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{parse_list, parse_q, resolve_budget, CliError, CliResult, Target, EXIT_CHECK_FAILED};
use report::{write_atomic, Csv, Report};
use suites::{CounterexampleOptions, NormsOptions, Selection};

#[derive(Parser)]
#[command(name = "polychain", version, about = "Contractions of truncated apartments and trees, with exact checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct TargetArgs {
    /// Root system such as A2, A1^2 or A2xA1.
    #[arg(long)]
    system: Option<String>,
    /// Ball radius (integer, decimal or p/q), at least 1.
    #[arg(long)]
    radius: Option<String>,
    /// Tree branching: every vertex has branching + 1 neighbours.
    #[arg(long)]
    tree: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
}

impl TargetArgs {
    fn target(&self) -> CliResult<Target> {
        Target::from_flags(self.system.as_deref(), self.radius.as_deref(), self.tree, self.depth)
    }

    fn given(&self) -> bool {
        self.system.is_some() || self.tree.is_some()
    }
}

#[derive(Args, Clone)]
struct Output {
    /// Report path; the report goes to stdout when absent.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Plot data path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Cell budget; overrides the environment variable POLYCHAIN_CELL_BUDGET.
    #[arg(long)]
    budget: Option<usize>,
    /// Acknowledge a --budget above the default.
    #[arg(long)]
    allow_large_budget: bool,
    /// Leave the wall time out of the report.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build a complex (or export a shipped finite model) as JSON.
    Generate {
        #[command(flatten)]
        target: TargetArgs,
        /// Include the contraction table.
        #[arg(long)]
        contraction: bool,
        /// Export a shipped finite model instead of a complex.
        #[arg(long)]
        model: Option<String>,
        /// Where to write the complex or model.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Run the verification suite on a complex or a finite model.
    Verify {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        homotopy: bool,
        #[arg(long)]
        hull: bool,
        #[arg(long)]
        diameter: bool,
        #[arg(long)]
        acyclicity: bool,
        /// Shipped finite model: sign-line, tree-filtration, tree-star, cyclic, path-bump.
        #[arg(long)]
        model: Option<String>,
        /// Finite model in JSON, on the complex given by the target flags.
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Write the contraction table here.
        #[arg(long)]
        dump_contraction: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Certify the norm constants and test the continuity estimate.
    NormsBound {
        #[command(flatten)]
        target: TargetArgs,
        /// Comma-separated norm indices.
        #[arg(long, default_value = "0,1,2")]
        m: String,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Radius of the complex used to count orbits.
        #[arg(long, default_value = "12")]
        counting_radius: String,
        /// Half-width of the auxiliary index window; 0 for a single index.
        #[arg(long, default_value_t = 0)]
        window: i64,
        #[command(flatten)]
        output: Output,
    },
    /// Solve the convolution witness on windows and test decay.
    Counterexample {
        /// dyadic, delta, power2..power4 or indicatorR.
        #[arg(long, default_value = "dyadic")]
        profile: String,
        #[arg(long)]
        radius: i64,
        /// Smallest window of the sweep.
        #[arg(long)]
        min_radius: Option<i64>,
        #[arg(long, default_value = "0,1,2")]
        norms: String,
        /// Support radius of the finitely supported control.
        #[arg(long, default_value_t = 2)]
        control_radius: i64,
        /// Depth of the line used to count orbits.
        #[arg(long, default_value_t = 40)]
        counting_depth: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Summarize stored reports.
    Report {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
}

/// Writes the report to `--json`, or to stdout when `stdout_free`.
fn emit(mut report: Report, csv: Option<Csv>, output: &Output, started: Instant, stdout_free: bool) -> CliResult<ExitCode> {
    if !output.no_timing {
        report.wall_time_s = Some((started.elapsed().as_secs_f64() * 1000.0).round() / 1000.0);
    }
    eprint!("{}", report.summary());
    match &output.json {
        Some(p) => write_atomic(p, report.to_json().as_bytes())?,
        None if stdout_free => print!("{}", report.to_json()),
        None => {}
    }
    if let (Some(p), Some(c)) = (&output.csv, csv) {
        write_atomic(p, c.render().as_bytes())?;
    }
    Ok(if report.failed() { ExitCode::from(EXIT_CHECK_FAILED) } else { ExitCode::SUCCESS })
}

fn write_json(path: &Path, v: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).expect("JSON value serializes") + "\n";
    write_atomic(path, text.as_bytes())
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    let started = Instant::now();
    match cli.command {
        Command::Generate { target, contraction, model, out, output } => {
            let budget = resolve_budget(output.budget, output.allow_large_budget)?;
            if let Some(name) = model {
                let t = if target.given() { Some(target.target()?) } else { None };
                let v = suites::export_model(&name, t.as_ref(), budget)?;
                let mut report = Report::new("generate", json!({ "model": name, "target": t, "budget": budget }));
                report.push(report::Check::new(
                    "model_export",
                    "shipped finite model in the interchange format",
                    report::Status::ReportOnly,
                    json!({ "order": v["group"]["order"], "dim": v["module"]["dim"] }),
                ));
                match &out {
                    Some(p) => write_json(p, &v)?,
                    None => println!("{}", serde_json::to_string_pretty(&v).expect("JSON value serializes")),
                }
                return emit(report, None, &output, started, out.is_some());
            }
            let t = target.target()?;
            let (report, v) = suites::generate(&t, budget, contraction)?;
            match &out {
                Some(p) => write_json(p, &v)?,
                None => println!("{}", serde_json::to_string(&v).expect("JSON value serializes")),
            }
            emit(report, None, &output, started, out.is_some())
        }
        Command::Verify {
            target,
            all,
            homotopy,
            hull,
            diameter,
            acyclicity,
            model,
            model_file,
            dump_contraction,
            output,
        } => {
            let budget = resolve_budget(output.budget, output.allow_large_budget)?;
            if model.is_some() && model_file.is_some() {
                return Err(CliError::Config("give either --model or --model-file".into()));
            }
            if let Some(name) = model {
                let t = if target.given() { Some(target.target()?) } else { None };
                let (c, m) = suites::shipped_model(&name, t.as_ref(), budget)?;
                let report = suites::verify_model(&c, &m, json!({ "model": name, "target": t, "budget": budget }))?;
                return emit(report, None, &output, started, true);
            }
            if let Some(path) = model_file {
                let t = target.target()?;
                let (c, m) = suites::load_model(&path, &t, budget)?;
                let report = suites::verify_model(
                    &c,
                    &m,
                    json!({ "model_file": path.display().to_string(), "target": t, "budget": budget }),
                )?;
                return emit(report, None, &output, started, true);
            }
            let t = target.target()?;
            let mut sel = Selection { homotopy, hull, diameter, acyclicity };
            if all || sel.is_empty() {
                sel = Selection::all();
            }
            let out = suites::verify(&t, sel, budget, dump_contraction.is_some())?;
            if let (Some(p), Some(v)) = (&dump_contraction, &out.contraction) {
                write_json(p, v)?;
            }
            emit(out.report, Some(out.csv), &output, started, true)
        }
        Command::NormsBound { target, m, trials, seed, counting_radius, window, output } => {
            let t = target.target()?;
            let seed = seed.ok_or_else(|| CliError::Config("--seed is required for randomized runs".into()))?;
            if window < 0 {
                return Err(CliError::Config("--window must be nonnegative".into()));
            }
            let opts = NormsOptions {
                m_list: parse_list(&m)?,
                trials,
                seed,
                counting_radius: parse_q(&counting_radius).map_err(CliError::Config)?,
                window,
            };
            let budget = resolve_budget(output.budget, output.allow_large_budget)?;
            let (report, csv) = suites::norms_bound(&t, &opts, budget)?;
            emit(report, Some(csv), &output, started, true)
        }
        Command::Counterexample { profile, radius, min_radius, norms, control_radius, counting_depth, output } => {
            let budget = resolve_budget(output.budget, output.allow_large_budget)?;
            let opts = CounterexampleOptions {
                profile,
                radius,
                min_radius: min_radius.unwrap_or(radius.min(5)),
                norms: parse_list(&norms)?,
                control_radius,
                counting_depth,
            };
            let (report, csv) = suites::counterexample(&opts, budget)?;
            emit(report, Some(csv), &output, started, true)
        }
        Command::Report { inputs, output } => {
            let report = suites::summarize(&inputs)?;
            emit(report, None, &output, started, true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { config::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
