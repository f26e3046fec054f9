//! Running every scenario in a directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::report::{table_csv, Table, Verdict};
use crate::run::{run_file, RunOptions};

pub const EXTENSION: &str = "scn";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub file: PathBuf,
    pub name: String,
    /// `None` when the scenario could not be run.
    pub verdict: Option<Verdict>,
    pub unresolved: bool,
    pub error: Option<String>,
    pub key_check: String,
    pub key_value: f64,
    pub wall_seconds: f64,
}

impl SuiteEntry {
    pub fn exit_code(&self) -> i32 {
        self.verdict.map_or(2, Verdict::exit_code)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
}

impl SuiteReport {
    /// 0 when everything passes, 2 if any scenario had a configuration
    /// error, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        self.entries.iter().map(SuiteEntry::exit_code).max().unwrap_or(0)
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.entries.iter().filter(|e| e.verdict == Some(v)).count()
    }

    pub fn summary(&self) -> Table {
        let mut t = Table::new(["scenario", "verdict", "key_check", "key_value", "wall_seconds"]);
        for e in &self.entries {
            let verdict = match (e.verdict, e.unresolved) {
                (Some(v), true) => format!("{v} (unresolved)"),
                (Some(v), false) => v.to_string(),
                (None, _) => "error".to_string(),
            };
            let key = e.error.clone().unwrap_or_else(|| e.key_check.clone());
            t.push([e.name.clone(), verdict, key, e.key_value.to_string(), format!("{:.3}", e.wall_seconds)]);
        }
        t
    }

    pub fn summary_csv(&self) -> String {
        table_csv(&self.summary())
    }
}

/// Scenario files of `dir`, sorted by name.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| HarnessError::io(dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == EXTENSION) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

fn run_one(path: &Path, opts: &RunOptions) -> SuiteEntry {
    let name = crate::run::file_stem(path);
    match run_file(path, opts) {
        Ok((report, _)) => {
            let (key_check, key_value) = report.key_check().map(|c| (c.name.clone(), c.value)).unwrap_or_default();
            SuiteEntry {
                file: path.to_path_buf(),
                name: report.scenario.name.clone(),
                verdict: Some(report.verdict),
                unresolved: report.unresolved,
                error: None,
                key_check,
                key_value,
                wall_seconds: report.metadata.wall_seconds,
            }
        }
        Err(e) => SuiteEntry {
            file: path.to_path_buf(),
            name,
            verdict: None,
            unresolved: false,
            error: Some(e.to_string()),
            key_check: String::new(),
            key_value: f64::NAN,
            wall_seconds: 0.0,
        },
    }
}

/// Runs every `*.scn` file in `dir`, `jobs` at a time (all cores when
/// `None`). A scenario that errors is recorded and the rest still run.
pub fn run_suite(dir: &Path, opts: &RunOptions, jobs: Option<usize>) -> Result<SuiteReport> {
    let files = scenario_files(dir)?;
    let go = || files.par_iter().map(|f| run_one(f, opts)).collect::<Vec<_>>();
    let entries = match jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| HarnessError::Usage(format!("cannot start {k} workers: {e}")))?
            .install(go),
        None => go(),
    };
    Ok(SuiteReport { entries })
}
