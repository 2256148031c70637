use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

/// One evaluated case of a check.
#[derive(Debug, Clone, Serialize)]
pub struct CaseRow {
    pub label: String,
    pub resolution: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Outcome of one check: per-case rows plus a summary.
///
/// For checks with a stated constant, `pass` is `max_ratio <= constant * (1 + tolerance)`.
/// Stability checks have no constant and decide `pass` from `metrics`.
/// `pass` is `None` when the check only reports.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub id: String,
    pub params: BTreeMap<String, String>,
    #[serde(skip)]
    pub cases: Vec<CaseRow>,
    pub case_count: usize,
    pub max_ratio: f64,
    pub constant: Option<f64>,
    pub tolerance: f64,
    pub metrics: BTreeMap<String, f64>,
    pub pass: Option<bool>,
    pub runtime_s: f64,
}

impl InequalityReport {
    pub(crate) fn new(id: &str) -> ReportBuilder {
        ReportBuilder {
            report: InequalityReport {
                id: id.to_string(),
                params: BTreeMap::new(),
                cases: Vec::new(),
                case_count: 0,
                max_ratio: f64::NAN,
                constant: None,
                tolerance: 0.0,
                metrics: BTreeMap::new(),
                pass: None,
                runtime_s: 0.0,
            },
            start: Instant::now(),
        }
    }

    pub fn passed(&self) -> bool {
        self.pass != Some(false)
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    /// Per-case CSV: `label,resolution,lhs,rhs,ratio`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Precondition(format!("csv: {e}"));
        out.write_record(["label", "resolution", "lhs", "rhs", "ratio"]).map_err(err)?;
        for c in &self.cases {
            out.write_record([
                c.label.clone(),
                c.resolution.to_string(),
                c.lhs.to_string(),
                c.rhs.to_string(),
                c.ratio.to_string(),
            ])
            .map_err(err)?;
        }
        out.flush().map_err(|e| Error::Precondition(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Precondition(format!("json: {e}")))
    }
}

pub(crate) struct ReportBuilder {
    report: InequalityReport,
    start: Instant,
}

impl ReportBuilder {
    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.report.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn case(&mut self, label: &str, resolution: usize, lhs: f64, rhs: f64) -> f64 {
        let ratio = lhs / rhs;
        self.report.cases.push(CaseRow {
            label: label.to_string(),
            resolution,
            lhs,
            rhs,
            ratio,
        });
        ratio
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.report.metrics.insert(key.to_string(), value);
        self
    }

    pub fn max_ratio(&self) -> f64 {
        self.report
            .cases
            .iter()
            .map(|c| c.ratio)
            .filter(|r| !r.is_nan())
            .fold(f64::NAN, f64::max)
    }

    /// Close with a stated constant: pass iff every ratio is within it.
    pub fn finish_bounded(mut self, constant: f64, tolerance: f64) -> InequalityReport {
        let max = self.max_ratio();
        self.report.constant = Some(constant);
        self.report.tolerance = tolerance;
        let pass = self.report.cases.iter().all(|c| c.ratio.is_nan() || c.ratio <= constant * (1.0 + tolerance));
        self.finish(Some(pass), max)
    }

    /// Close with an externally decided verdict.
    pub fn finish_with(mut self, tolerance: f64, pass: Option<bool>) -> InequalityReport {
        let max = self.max_ratio();
        self.report.tolerance = tolerance;
        self.finish(pass, max)
    }

    fn finish(mut self, pass: Option<bool>, max: f64) -> InequalityReport {
        self.report.pass = pass;
        self.report.max_ratio = max;
        self.report.case_count = self.report.cases.len();
        self.report.runtime_s = self.start.elapsed().as_secs_f64();
        self.report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_verdict_uses_tolerance() {
        let mut b = InequalityReport::new("t");
        b.case("a", 8, 1.01, 1.0);
        b.case("b", 8, 0.5, 1.0);
        let rep = b.finish_bounded(1.0, 0.02);
        assert_eq!(rep.pass, Some(true));
        assert!((rep.max_ratio - 1.01).abs() < 1e-15);
        assert_eq!(rep.case_count, 2);

        let mut b = InequalityReport::new("t");
        b.case("a", 8, 1.03, 1.0);
        assert_eq!(b.finish_bounded(1.0, 0.02).pass, Some(false));
    }

    #[test]
    fn nan_ratios_are_skipped() {
        let mut b = InequalityReport::new("t");
        b.case("zero", 8, 0.0, 0.0);
        b.case("a", 8, 0.3, 1.0);
        let rep = b.finish_bounded(1.0, 0.0);
        assert_eq!(rep.max_ratio, 0.3);
        assert!(rep.passed());
    }

    #[test]
    fn report_only_counts_as_passed() {
        let rep = InequalityReport::new("t").finish_with(0.5, None);
        assert!(rep.passed());
        assert!(rep.max_ratio.is_nan());
    }
}
