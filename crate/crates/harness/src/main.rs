use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lsmdual::dual::{self, EtaChoice};
use lsmdual::report::table_csv;
use lsmdual::run::{output_dir, run_file, stream_id, RunOptions};
use lsmdual::scenario::{Kind, Mode, Scenario};
use lsmdual::{run_suite, HarnessError, RunReport, Verdict};
use lsmdual_core::model::{Config, Kernel, ModelSpec, Variant};
use lsmdual_core::rng::Seed;
use lsmdual_core::stochastic::{simulate_jump_process, simulate_srw, simulate_ssm};

#[derive(Parser)]
#[command(name = "lsmdual", version, about = "Duality and thinning checks for Lloyd-Sudbury particle systems")]
struct Cli {
    /// Arithmetic for exact checks; overrides the scenario file.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scenarios run in parallel by `suite`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; reports go beside each scenario when unset.
    #[arg(long, global = true, env = "LSMDUAL_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dual rates of a constant-rate model.
    Dual {
        /// e.g. `cvp:1,3,2` or `lsm:0,1,0,1,0`.
        #[arg(long)]
        model: String,
        #[arg(long, conflicts_with = "eta_scan", allow_hyphen_values = true)]
        eta: Option<String>,
        /// `lo:hi:step`
        #[arg(long, allow_hyphen_values = true)]
        eta_scan: Option<String>,
    },
    /// Run a VERIFY_EXACT or THINNING_EXACT scenario.
    VerifyExact { file: PathBuf },
    /// Run a VERIFY_MC scenario.
    VerifyMc { file: PathBuf },
    /// Run a MEANFIELD_CV or MEANFIELD_SRW scenario.
    Meanfield { file: PathBuf },
    /// Run an ORACLE scenario.
    Oracle { file: PathBuf },
    /// Run a POISSON_CHECK scenario.
    PoissonCheck { file: PathBuf },
    /// Run any scenario file.
    Run { file: PathBuf },
    /// Sample one path and print it as CSV.
    Simulate {
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "single")]
        kernel: String,
        /// Comma-separated initial state.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long)]
        t: f64,
        /// Step size for diffusions.
        #[arg(long)]
        dt: Option<f64>,
        /// Comma-separated recording times.
        #[arg(long)]
        times: Option<String>,
    },
    /// Run every `*.scn` file in a directory.
    Suite { dir: PathBuf },
}

fn options(cli: &Cli) -> RunOptions {
    RunOptions { mode: cli.mode, seed: cli.seed, out_dir: cli.out.clone(), write: true }
}

fn print_report(report: &RunReport, files: &[PathBuf]) {
    let s = &report.scenario;
    println!("scenario {} ({}, {} mode)", s.name, s.kind, s.mode);
    for line in &report.log {
        println!("  log: {line}");
    }
    for c in &report.checks {
        println!("  [{}] {} = {} (threshold {}, {:?})", c.verdict, c.name, c.value, c.threshold, c.rule);
    }
    let flag = if report.unresolved { "  UNRESOLVED" } else { "" };
    println!("verdict: {} (raw {}, expect {:?}){flag}", report.verdict, report.raw_verdict, s.expect);
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn scenario_command(cli: &Cli, file: &Path, allowed: &[Kind]) -> Result<i32, HarnessError> {
    if !allowed.is_empty() {
        let s = Scenario::load(file)?;
        if !allowed.contains(&s.kind) {
            let names: Vec<&str> = allowed.iter().map(|k| k.name()).collect();
            return Err(HarnessError::Usage(format!(
                "{} is a {} scenario; this subcommand runs {}",
                file.display(),
                s.kind,
                names.join(" or ")
            )));
        }
    }
    let (report, files) = run_file(file, &options(cli))?;
    print_report(&report, &files);
    Ok(report.verdict.exit_code())
}

fn parse_list(text: &str) -> Result<Vec<f64>, HarnessError> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| HarnessError::Usage(format!("`{v}` is not a number"))))
        .collect()
}

fn simulate(cli: &Cli, model: &str, kernel: &str, x0: &str, t: f64, dt: Option<f64>, times: Option<&str>) -> Result<i32, HarnessError> {
    let spec = ModelSpec::from_shorthand(model)?;
    let q = Kernel::<f64>::preset(kernel)?;
    let values = parse_list(x0)?;
    let times = times.map(parse_list).transpose()?.unwrap_or_default();
    let seed = Seed::with_stream(cli.seed.unwrap_or(0), stream_id("simulate"));
    let need_dt = || dt.ok_or_else(|| HarnessError::Usage("--dt is required for diffusions".into()));
    let (times, states) = match &spec {
        ModelSpec::Ssm { .. } => {
            let tr = simulate_ssm(&spec.ssm_params()?, &q, &Config::unit_real(values)?, t, need_dt()?, &times, seed)?;
            (tr.times, tr.states)
        }
        ModelSpec::Srw { .. } => {
            let tr = simulate_srw(&spec.srw_params()?, &q, &Config::nonneg_real(values)?, t, need_dt()?, &times, seed)?;
            (tr.times, tr.states)
        }
        _ => {
            if values.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
                return Err(HarnessError::Usage("jump models need integer initial states".into()));
            }
            let ints: Vec<u32> = values.iter().map(|v| *v as u32).collect();
            let x = match spec.local_generator::<f64>(&q, true)?.variant() {
                Variant::Spin => Config::spin(ints)?,
                _ => Config::count(ints),
            };
            let tr = simulate_jump_process(&spec, &q, &x, t, &times, seed)?;
            (tr.times, tr.states)
        }
    };
    let n = q.n_sites();
    let mut table = lsmdual::report::Table::new(std::iter::once("time".to_string()).chain((0..n).map(|i| format!("site{i}"))));
    for (time, state) in times.iter().zip(&states) {
        table.push(std::iter::once(time.to_string()).chain(state.as_f64_vec().iter().map(|v| v.to_string())));
    }
    let csv = table_csv(&table);
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
            let path = dir.join("trajectory.csv");
            std::fs::write(&path, csv).map_err(|e| HarnessError::io(&path, e))?;
            println!("wrote {}", path.display());
        }
        None => {
            std::io::stdout().write_all(csv.as_bytes()).map_err(|e| HarnessError::io("stdout", e))?;
        }
    }
    Ok(0)
}

fn suite(cli: &Cli, dir: &Path) -> Result<i32, HarnessError> {
    let report = run_suite(dir, &options(cli), cli.jobs)?;
    let summary = report.summary_csv();
    print!("{summary}");
    println!(
        "{} scenarios: {} pass, {} fail, {} unresolved, {} errors",
        report.entries.len(),
        report.count(Verdict::Pass),
        report.count(Verdict::Fail),
        report.count(Verdict::Unresolved),
        report.entries.iter().filter(|e| e.verdict.is_none()).count()
    );
    let out = output_dir(&dir.join("suite"), &options(cli));
    std::fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
    let path = out.join("suite-summary.csv");
    std::fs::write(&path, summary).map_err(|e| HarnessError::io(&path, e))?;
    Ok(report.exit_code())
}

fn dispatch(cli: &Cli) -> Result<i32, HarnessError> {
    match &cli.command {
        Command::Dual { model, eta, eta_scan } => {
            let choice = match (eta, eta_scan) {
                (Some(e), _) => EtaChoice::One(e.clone()),
                (None, Some(s)) => EtaChoice::Scan(s.clone()),
                (None, None) => return Err(HarnessError::Usage("give --eta or --eta-scan".into())),
            };
            print!("{}", dual::render(model, &choice, cli.mode.unwrap_or_default())?);
            Ok(0)
        }
        Command::VerifyExact { file } => scenario_command(cli, file, &[Kind::VerifyExact, Kind::ThinningExact]),
        Command::VerifyMc { file } => scenario_command(cli, file, &[Kind::VerifyMc]),
        Command::Meanfield { file } => scenario_command(cli, file, &[Kind::MeanfieldCv, Kind::MeanfieldSrw]),
        Command::Oracle { file } => scenario_command(cli, file, &[Kind::Oracle]),
        Command::PoissonCheck { file } => scenario_command(cli, file, &[Kind::PoissonCheck]),
        Command::Run { file } => scenario_command(cli, file, &[]),
        Command::Simulate { model, kernel, x0, t, dt, times } => simulate(cli, model, kernel, x0, *t, *dt, times.as_deref()),
        Command::Suite { dir } => suite(cli, dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
