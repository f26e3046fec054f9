//! Checks, verdicts and the persisted run report.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::scenario::{Expect, Mode, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Unresolved,
    Fail,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Unresolved | Verdict::Fail => 1,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Unresolved => "unresolved",
            Verdict::Fail => "fail",
        })
    }
}

/// How a check turns its value into a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `value < threshold`
    Lt,
    /// `value <= threshold`
    Le,
    /// `value > threshold`
    Gt,
    /// `flag` records an exact zero; `value` is informational.
    ExactZero,
    /// `flag` records a yes/no outcome; a missing flag is unresolved.
    Holds,
}

/// Non-finite floats are written as strings so reports stay valid JSON.
mod finite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "finite")]
    pub value: f64,
    #[serde(with = "finite")]
    pub threshold: f64,
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<bool>,
    pub verdict: Verdict,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, threshold: f64, rule: Rule, flag: Option<bool>) -> Self {
        let mut c = Check { name: name.into(), value, threshold, rule, flag, verdict: Verdict::Fail };
        c.verdict = c.evaluate();
        c
    }

    pub fn lt(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, threshold, Rule::Lt, None)
    }

    pub fn le(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, threshold, Rule::Le, None)
    }

    pub fn gt(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, threshold, Rule::Gt, None)
    }

    pub fn exact_zero(name: impl Into<String>, max_abs: f64, is_zero: bool) -> Self {
        Self::new(name, max_abs, 0.0, Rule::ExactZero, Some(is_zero))
    }

    pub fn holds(name: impl Into<String>, outcome: Option<bool>) -> Self {
        let value = match outcome {
            Some(true) => 1.0,
            Some(false) => 0.0,
            None => f64::NAN,
        };
        Self::new(name, value, 1.0, Rule::Holds, outcome)
    }

    /// The verdict implied by `value`, `threshold`, `rule` and `flag` alone.
    pub fn evaluate(&self) -> Verdict {
        let ok = match self.rule {
            Rule::Lt => self.value < self.threshold,
            Rule::Le => self.value <= self.threshold,
            Rule::Gt => self.value > self.threshold,
            Rule::ExactZero | Rule::Holds => match self.flag {
                Some(b) => b,
                None => return Verdict::Unresolved,
            },
        };
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// `(raw, final)`: the worst check verdict, then the verdict after applying
/// `expect`. No checks at all is a failure.
pub fn recompute_verdict(checks: &[Check], expect: Expect) -> (Verdict, Verdict) {
    let raw = if checks.is_empty() {
        Verdict::Fail
    } else {
        checks.iter().map(Check::evaluate).max().unwrap_or(Verdict::Pass)
    };
    let fin = match (expect, raw) {
        (Expect::Pass, v) => v,
        (Expect::Fail, Verdict::Pass) => Verdict::Fail,
        (Expect::Fail, Verdict::Fail) => Verdict::Pass,
        (Expect::Fail, Verdict::Unresolved) => Verdict::Unresolved,
    };
    (raw, fin)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub rng_family: String,
    pub build: String,
    pub mode: Mode,
    pub seed: Option<u64>,
    /// Stream id derived from the scenario name.
    pub stream: Option<u64>,
}

/// Everything that legitimately differs between two identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub started_unix_s: u64,
    pub wall_seconds: f64,
}

/// Free-form tabular detail, written as CSV.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub checks: Vec<Check>,
    pub raw_verdict: Verdict,
    pub verdict: Verdict,
    /// Set when some check could not be decided (a flat oracle residual).
    pub unresolved: bool,
    pub log: Vec<String>,
    pub data: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    pub provenance: Provenance,
    pub metadata: Metadata,
}

impl RunReport {
    /// The check deciding the verdict: the first failing or unresolved one,
    /// otherwise the first.
    pub fn key_check(&self) -> Option<&Check> {
        self.checks.iter().find(|c| c.verdict != Verdict::Pass).or(self.checks.first())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn checks_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["scenario", "check", "value", "threshold", "rule", "flag", "verdict"]).unwrap();
        for c in &self.checks {
            let rule = serde_json::to_value(c.rule).unwrap();
            let flag = c.flag.map(|b| b.to_string()).unwrap_or_default();
            w.write_record([
                self.scenario.name.as_str(),
                &c.name,
                &c.value.to_string(),
                &c.threshold.to_string(),
                rule.as_str().unwrap(),
                &flag,
                &c.verdict.to_string(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    pub fn table_csv(&self) -> Option<String> {
        self.table.as_ref().map(table_csv)
    }

    /// Writes `<stem>.report.json`, `<stem>.checks.csv` and, when there is
    /// tabular detail, `<stem>.table.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let mut files = vec![
            (dir.join(format!("{stem}.report.json")), self.to_json()),
            (dir.join(format!("{stem}.checks.csv")), self.checks_csv()),
        ];
        if let Some(t) = self.table_csv() {
            files.push((dir.join(format!("{stem}.table.csv")), t));
        }
        for (p, body) in &files {
            std::fs::write(p, body).map_err(|e| HarnessError::io(p, e))?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

pub fn table_csv(t: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.headers).unwrap();
    for r in &t.rows {
        w.write_record(r).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        assert_eq!(Check::lt("a", 1.0, 2.0).verdict, Verdict::Pass);
        assert_eq!(Check::lt("a", 2.0, 2.0).verdict, Verdict::Fail);
        assert_eq!(Check::le("a", 2.0, 2.0).verdict, Verdict::Pass);
        assert_eq!(Check::gt("a", 2.0, 2.0).verdict, Verdict::Fail);
        assert_eq!(Check::lt("a", f64::NAN, 2.0).verdict, Verdict::Fail);
        assert_eq!(Check::exact_zero("a", 0.0, false).verdict, Verdict::Fail);
        assert_eq!(Check::holds("a", None).verdict, Verdict::Unresolved);
    }

    #[test]
    fn expected_failures_invert() {
        let pass = [Check::lt("a", 0.0, 1.0)];
        let fail = [Check::lt("a", 0.0, 1.0), Check::gt("b", 0.0, 1.0)];
        let open = [Check::lt("a", 0.0, 1.0), Check::holds("c", None)];
        assert_eq!(recompute_verdict(&pass, Expect::Fail), (Verdict::Pass, Verdict::Fail));
        assert_eq!(recompute_verdict(&fail, Expect::Fail), (Verdict::Fail, Verdict::Pass));
        assert_eq!(recompute_verdict(&open, Expect::Pass).1, Verdict::Unresolved);
        assert_eq!(recompute_verdict(&open, Expect::Fail).1, Verdict::Unresolved);
        assert_eq!(recompute_verdict(&[], Expect::Pass).1, Verdict::Fail);
    }

    #[test]
    fn non_finite_values_round_trip() {
        let c = Check::holds("c", None);
        let json = serde_json::to_string(&c).unwrap();
        let back: Check = serde_json::from_str(&json).unwrap();
        assert!(back.value.is_nan());
        assert_eq!(back.evaluate(), Verdict::Unresolved);
        let inf = Check::lt("z", f64::INFINITY, 3.0);
        let back: Check = serde_json::from_str(&serde_json::to_string(&inf).unwrap()).unwrap();
        assert_eq!(back.value, f64::INFINITY);
    }
}
