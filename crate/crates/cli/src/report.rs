//! Consolidated report over the outputs of several runs.

use std::path::{Path, PathBuf};

use pdolab::suites::Verdict;
use pdolab::SweepReport;
use serde::{Deserialize, Serialize};

use crate::manifest::Manifest;
use crate::{fmt_f64, read_file, CliError, CliResult, Product};

/// Sweeps sharing a key are merged into one table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableKey {
    pub suite: String,
    pub s: Option<f64>,
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub h: Option<f64>,
}

impl TableKey {
    fn of(rep: &SweepReport) -> Self {
        let m = &rep.meta;
        Self { suite: m.label.clone(), s: m.s, p: m.p, r: m.r, h: m.h }
    }

    fn same(&self, other: &Self) -> bool {
        let bits = |v: Option<f64>| v.map(f64::to_bits);
        self.suite == other.suite
            && bits(self.s) == bits(other.s)
            && bits(self.p) == bits(other.p)
            && bits(self.r) == bits(other.r)
            && bits(self.h) == bits(other.h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run_id: String,
    pub eps: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub key: TableKey,
    pub rows: Vec<ReportRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub run_id: String,
    pub name: String,
    pub measured: f64,
    pub bound: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub pass: bool,
    pub runs: Vec<String>,
    pub tables: Vec<ReportTable>,
    pub violations: Vec<Violation>,
}

#[derive(Deserialize)]
struct RunResult {
    #[serde(default)]
    sweeps: Vec<SweepReport>,
    #[serde(default)]
    verdicts: Vec<Verdict>,
}

fn result_path(manifest_path: &Path, m: &Manifest) -> CliResult<PathBuf> {
    let name = m
        .outputs
        .first()
        .ok_or_else(|| CliError::Invalid(format!("{}: manifest lists no outputs", manifest_path.display())))?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    Ok(dir.join(name))
}

/// Merges the sweeps and verdicts of the runs behind `manifests`.
pub fn build_report(manifests: &[PathBuf]) -> CliResult<Report> {
    let mut report = Report { schema: 1, pass: true, runs: Vec::new(), tables: Vec::new(), violations: Vec::new() };
    for path in manifests {
        let m = Manifest::read(path)?;
        let rp = result_path(path, &m)?;
        let text = read_file(&rp)?;
        let res: RunResult = serde_json::from_str(&text).map_err(|source| CliError::Json { path: rp.clone(), source })?;
        report.pass &= m.pass;
        for rep in &res.sweeps {
            let key = TableKey::of(rep);
            let rows = rep.eps.iter().zip(&rep.values).map(|(&eps, &value)| ReportRow { run_id: m.run_id.clone(), eps, value });
            match report.tables.iter_mut().find(|t| t.key.same(&key)) {
                Some(t) => t.rows.extend(rows),
                None => report.tables.push(ReportTable { key, rows: rows.collect() }),
            }
        }
        for v in res.verdicts.iter().filter(|v| !v.pass) {
            report.pass = false;
            report.violations.push(Violation { run_id: m.run_id.clone(), name: v.name.clone(), measured: v.measured, bound: v.bound.clone() });
        }
        report.runs.push(m.run_id);
    }
    Ok(report)
}

/// `run_id,suite,s,p,r,h,eps,value`, one line per row; absent parameters are empty.
pub fn report_csv(report: &Report) -> String {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut out = String::from("run_id,suite,s,p,r,h,eps,value\n");
    for t in &report.tables {
        let k = &t.key;
        for row in &t.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.run_id,
                csv_field(&k.suite),
                opt(k.s),
                opt(k.p),
                opt(k.r),
                opt(k.h),
                fmt_f64(row.eps),
                fmt_f64(row.value)
            ));
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub(crate) fn report(manifests: &[PathBuf]) -> CliResult<Product> {
    let r = build_report(manifests)?;
    let csv = report_csv(&r);
    Ok(Product { result: serde_json::to_value(&r).expect("report serialises"), csv: Some(csv), extra_files: Vec::new(), pass: true })
}
