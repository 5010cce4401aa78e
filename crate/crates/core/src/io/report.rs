//! JSON experiment reports and their CSV views.
//!
//! A report is an object with exactly the keys `experiment` (string),
//! `params` (object), `checks` (array of `{name, value, threshold, pass}`
//! plus an optional `note`), `series` (`{t, relE, D, gronwall_bound}`, equal
//! length number arrays), `slopes` (object of numbers, nulls or rate
//! tables) and `verdict` (`"PASS"` or `"FAIL"`). Non-finite numbers are
//! written as `null`. The series may be empty only in a rate report, one
//! whose `slopes` hold at least one table.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::relenergy::{CertificateReport, Check, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCheck {
    pub name: String,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl From<&Check> for ReportCheck {
    fn from(c: &Check) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self { name: c.name.clone(), value: finite(c.value), threshold: finite(c.threshold), pass: c.pass, note: c.note.clone() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSeries {
    pub t: Vec<f64>,
    #[serde(rename = "relE")]
    pub rel_e: Vec<f64>,
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    pub gronwall_bound: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub experiment: String,
    pub params: Map<String, Value>,
    pub checks: Vec<ReportCheck>,
    pub series: ReportSeries,
    pub slopes: Map<String, Value>,
    pub verdict: String,
}

impl Report {
    /// Errors on a certificate without series, which has nothing to plot.
    pub fn from_certificate(experiment: &str, params: Map<String, Value>, cert: &CertificateReport) -> Result<Self> {
        let s = &cert.series;
        if s.t.is_empty() {
            let why = cert.first_failure().map(|c| format!(" ({}: {})", c.name, c.note)).unwrap_or_default();
            return Err(Error::InsufficientData(format!("certificate has an empty series{why}")));
        }
        let mut slopes = Map::new();
        if let Some(r5) = &cert.r5 {
            for t in &r5.trends {
                slopes.insert(format!("r5_{}", t.name), number(t.ratio));
            }
        }
        slopes.insert("integral_d".into(), number(cert.integral_d));
        Ok(Self {
            experiment: experiment.into(),
            params,
            checks: cert.checks.iter().map(ReportCheck::from).collect(),
            series: ReportSeries { t: s.t.clone(), rel_e: s.rel_energy.clone(), d: s.d.clone(), gronwall_bound: s.gronwall_bound.clone() },
            slopes,
            verdict: match cert.verdict {
                Verdict::Pass => "PASS".into(),
                Verdict::Fail => "FAIL".into(),
            },
        })
    }

    /// A rate report: checks and a slope table, no time series.
    pub fn rate(experiment: &str, params: Map<String, Value>, checks: Vec<ReportCheck>, slopes: Map<String, Value>) -> Result<Self> {
        if !slopes.values().any(Value::is_object) {
            return Err(Error::InsufficientData("rate report without a slope table".into()));
        }
        let verdict = if !checks.is_empty() && checks.iter().all(|c| c.pass) { "PASS" } else { "FAIL" };
        Ok(Self { experiment: experiment.into(), params, checks, series: ReportSeries::default(), slopes, verdict: verdict.into() })
    }

    pub fn passed(&self) -> bool {
        self.verdict == "PASS"
    }

    pub fn first_failure(&self) -> Option<&ReportCheck> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        if let Err(problems) = validate_report(&value) {
            return Err(Error::Domain(format!("invalid report: {}", problems.join("; "))));
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// `t,relE,D,gronwall_bound` rows.
    pub fn series_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "relE", "D", "gronwall_bound"]).map_err(csv_error)?;
        let s = &self.series;
        for k in 0..s.t.len() {
            w.write_record([s.t[k], s.rel_e[k], s.d[k], s.gronwall_bound[k]].map(|v| format!("{v:e}"))).map_err(csv_error)?;
        }
        finish(w)
    }
}

/// `null` for non-finite values.
pub fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// One row per check of every report: `experiment,verdict,check,value,threshold,pass`.
pub fn summary_csv(reports: &[Report]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["experiment", "verdict", "check", "value", "threshold", "pass"]).map_err(csv_error)?;
    let num = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in reports {
        for c in &r.checks {
            w.write_record([r.experiment.clone(), r.verdict.clone(), c.name.clone(), num(c.value), num(c.threshold), c.pass.to_string()])
                .map_err(csv_error)?;
        }
    }
    finish(w)
}

const KEYS: [&str; 6] = ["experiment", "params", "checks", "series", "slopes", "verdict"];
const SERIES_KEYS: [&str; 4] = ["t", "relE", "D", "gronwall_bound"];

fn number_or_null(v: &Value) -> bool {
    v.is_number() || v.is_null()
}

/// Every schema violation in a report value.
pub fn validate_report(v: &Value) -> std::result::Result<(), Vec<String>> {
    let mut problems = Vec::new();
    let Some(obj) = v.as_object() else {
        return Err(vec!["report is not an object".into()]);
    };
    for k in KEYS {
        if !obj.contains_key(k) {
            problems.push(format!("missing key `{k}`"));
        }
    }
    for k in obj.keys() {
        if !KEYS.contains(&k.as_str()) {
            problems.push(format!("unknown key `{k}`"));
        }
    }
    if obj.get("experiment").is_some_and(|e| !e.as_str().is_some_and(|s| !s.is_empty())) {
        problems.push("`experiment` must be a nonempty string".into());
    }
    if obj.get("params").is_some_and(|p| !p.is_object()) {
        problems.push("`params` must be an object".into());
    }
    let verdict = obj.get("verdict").and_then(Value::as_str);
    if obj.contains_key("verdict") && !matches!(verdict, Some("PASS" | "FAIL")) {
        problems.push("`verdict` must be \"PASS\" or \"FAIL\"".into());
    }
    if let Some(checks) = obj.get("checks") {
        match checks.as_array() {
            None => problems.push("`checks` must be an array".into()),
            Some(list) => {
                let mut all_pass = true;
                for (i, c) in list.iter().enumerate() {
                    let Some(c) = c.as_object() else {
                        problems.push(format!("check {i} is not an object"));
                        continue;
                    };
                    if !c.get("name").is_some_and(Value::is_string) {
                        problems.push(format!("check {i}: `name` must be a string"));
                    }
                    for k in ["value", "threshold"] {
                        if !c.get(k).is_some_and(number_or_null) {
                            problems.push(format!("check {i}: `{k}` must be a number or null"));
                        }
                    }
                    match c.get("pass").and_then(Value::as_bool) {
                        Some(p) => all_pass &= p,
                        None => problems.push(format!("check {i}: `pass` must be a boolean")),
                    }
                    if c.get("note").is_some_and(|n| !n.is_string()) {
                        problems.push(format!("check {i}: `note` must be a string"));
                    }
                    for k in c.keys() {
                        if !["name", "value", "threshold", "pass", "note"].contains(&k.as_str()) {
                            problems.push(format!("check {i}: unknown key `{k}`"));
                        }
                    }
                }
                let expected = if all_pass && !list.is_empty() { "PASS" } else { "FAIL" };
                if verdict.is_some_and(|v| v != expected) {
                    problems.push(format!("verdict {} contradicts the checks", verdict.unwrap_or("")));
                }
            }
        }
    }
    if let Some(series) = obj.get("series") {
        match series.as_object() {
            None => problems.push("`series` must be an object".into()),
            Some(s) => {
                let mut lengths = Vec::new();
                for k in SERIES_KEYS {
                    match s.get(k).and_then(Value::as_array) {
                        None => problems.push(format!("series `{k}` must be an array")),
                        Some(a) => {
                            if a.iter().any(|x| !x.is_number()) {
                                problems.push(format!("series `{k}` must hold finite numbers"));
                            }
                            lengths.push(a.len());
                        }
                    }
                }
                for k in s.keys() {
                    if !SERIES_KEYS.contains(&k.as_str()) {
                        problems.push(format!("series: unknown key `{k}`"));
                    }
                }
                if lengths.windows(2).any(|w| w[0] != w[1]) {
                    problems.push(format!("series lengths differ: {lengths:?}"));
                }
                let rate_table = obj.get("slopes").and_then(Value::as_object).is_some_and(|m| m.values().any(Value::is_object));
                if lengths.first() == Some(&0) && !rate_table {
                    problems.push("empty series outside a rate report".into());
                }
                if let Some(t) = s.get("t").and_then(Value::as_array) {
                    let ts: Vec<f64> = t.iter().filter_map(Value::as_f64).collect();
                    if ts.windows(2).any(|w| !(w[1] > w[0])) {
                        problems.push("series `t` must increase strictly".into());
                    }
                }
            }
        }
    }
    if let Some(slopes) = obj.get("slopes") {
        match slopes.as_object() {
            None => problems.push("`slopes` must be an object".into()),
            Some(m) => {
                for (k, v) in m {
                    if !(number_or_null(v) || v.is_object()) {
                        problems.push(format!("slope `{k}` must be a number, null or a table"));
                    }
                }
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Report {
        Report {
            experiment: "A".into(),
            params: json!({"cells": 256, "gamma": 2.0}).as_object().unwrap().clone(),
            checks: vec![
                ReportCheck { name: "bounds".into(), value: Some(-0.1), threshold: Some(0.0), pass: true, note: String::new() },
                ReportCheck { name: "gronwall".into(), value: Some(0.3), threshold: Some(1.0), pass: true, note: "ok".into() },
            ],
            series: ReportSeries { t: vec![0.05, 0.1], rel_e: vec![1e-4, 2e-4], d: vec![1.9, 1.95], gronwall_bound: vec![2e-4, 3e-4] },
            slopes: json!({"integral_d": 0.3, "r5_time": null}).as_object().unwrap().clone(),
            verdict: "PASS".into(),
        }
    }

    #[test]
    fn round_trip_and_validation() {
        let r = sample();
        let text = r.to_json().unwrap();
        assert_eq!(Report::from_json(&text).unwrap(), r);
        assert_eq!(Report::from_json(&text).unwrap().to_json().unwrap(), text);
    }

    #[test]
    fn schema_violations_are_listed() {
        let mut v = serde_json::to_value(sample()).unwrap();
        v["verdict"] = json!("FAIL");
        v["series"]["D"] = json!([1.0]);
        v["extra"] = json!(1);
        let problems = validate_report(&v).unwrap_err();
        assert_eq!(problems.len(), 3, "{problems:?}");
        assert!(validate_report(&json!([])).is_err());
        let mut v = serde_json::to_value(sample()).unwrap();
        v["series"] = json!({"t": [], "relE": [], "D": [], "gronwall_bound": []});
        assert!(validate_report(&v).is_err());
        v["slopes"]["commutator"] = json!({"slope": 0.2, "band": [0.1, 0.3], "eps": [0.125, 0.0625]});
        assert!(validate_report(&v).is_ok());
        assert!(Report::rate("rate", Map::new(), Vec::new(), Map::new()).is_err());
    }

    #[test]
    fn csv_views() {
        let r = sample();
        let s = r.series_csv().unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("t,relE,D,gronwall_bound\n"));
        let sum = summary_csv(&[r.clone(), r]).unwrap();
        assert_eq!(sum.lines().count(), 5);
        assert!(sum.lines().nth(1).unwrap().starts_with("A,PASS,bounds,"));
    }
}
