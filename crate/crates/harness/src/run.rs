//! Running one scenario and persisting its report.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use lsmdual_core::rng::{Seed, RNG_FAMILY};

use crate::error::Result;
use crate::kinds::{self, Ctx};
use crate::report::{recompute_verdict, Metadata, Provenance, RunReport, Verdict};
use crate::scenario::{Mode, Params, Scenario};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    /// Where reports go; beside the scenario file when unset.
    pub out_dir: Option<PathBuf>,
    pub write: bool,
}

/// 64-bit FNV-1a, used to give every scenario its own random stream.
pub fn stream_id(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn build_id() -> String {
    format!("lsmdual {} / lsmdual-core {}", env!("CARGO_PKG_VERSION"), lsmdual_core::VERSION)
}

pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport> {
    let mut s = scenario.clone();
    if let Some(m) = opts.mode {
        s.mode = m;
    }
    if opts.seed.is_some() {
        s.seed = opts.seed;
    }
    let stream = s.seed.map(|_| stream_id(&s.name));
    let seed = s.seed.zip(stream).map(|(v, st)| Seed::with_stream(v, st));
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let ctx = Ctx { path: &s.path, mode: s.mode, seed, thresholds: &s.thresholds };
    let out = match &s.params {
        Params::Exact(p) => kinds::exact::run_exact(&ctx, p)?,
        Params::Thinning(p) => kinds::exact::run_thinning(&ctx, p)?,
        Params::Mc(p) => kinds::mc::run(&ctx, p)?,
        Params::MeanfieldCv(p) => kinds::meanfield::run_cv(&ctx, p)?,
        Params::MeanfieldSrw(p) => kinds::meanfield::run_srw(&ctx, p)?,
        Params::Oracle(p) => kinds::oracle::run(&ctx, p)?,
        Params::Poisson(p) => kinds::poisson::run(&ctx, p)?,
    };
    let (raw_verdict, verdict) = recompute_verdict(&out.checks, s.expect);
    let provenance =
        Provenance { rng_family: RNG_FAMILY.to_string(), build: build_id(), mode: s.mode, seed: s.seed, stream };
    Ok(RunReport {
        unresolved: raw_verdict == Verdict::Unresolved,
        checks: out.checks,
        raw_verdict,
        verdict,
        log: out.log,
        data: out.data,
        table: out.table,
        provenance,
        metadata: Metadata { started_unix_s: started, wall_seconds: clock.elapsed().as_secs_f64() },
        scenario: s,
    })
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string()
}

pub fn output_dir(scenario_path: &Path, opts: &RunOptions) -> PathBuf {
    match &opts.out_dir {
        Some(d) => d.clone(),
        None => scenario_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    }
}

/// Loads, runs and (if `opts.write`) persists one scenario file.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<(RunReport, Vec<PathBuf>)> {
    let scenario = Scenario::load(path)?;
    let report = run_scenario(&scenario, opts)?;
    let files = if opts.write { report.write(&output_dir(path, opts), &file_stem(path))? } else { Vec::new() };
    Ok((report, files))
}
