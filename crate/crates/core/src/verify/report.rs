use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::spectral::ExponentFit;

pub const SCHEMA_VERSION: &str = "flagkernel-report/1";

/// Where a target value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Asserted by the theory under test.
    Stated,
    /// Immediate from the definitions.
    Trivial,
    /// Computed independently (closed form, exact arithmetic or an oracle).
    Derived,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// `|value - target| <= tol`.
    Abs { target: f64, tol: f64 },
    /// `|value / target - 1| <= tol`.
    Rel { target: f64, tol: f64 },
    AtMost { bound: f64 },
    AtLeast { bound: f64 },
    /// Boolean quantity (`1` true, `0` false) that must equal `expected`.
    Holds { expected: bool },
    /// Recorded without a target.
    Info,
}

impl Rule {
    fn passes(&self, v: f64) -> bool {
        match *self {
            Rule::Abs { target, tol } => (v - target).abs() <= tol,
            Rule::Rel { target, tol } => (v / target - 1.0).abs() <= tol,
            Rule::AtMost { bound } => v <= bound,
            Rule::AtLeast { bound } => v >= bound,
            Rule::Holds { expected } => (v != 0.0) == expected,
            Rule::Info => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(flatten)]
    pub rule: Rule,
    pub provenance: Provenance,
    /// Convergence diagnostics fail as inconclusive rather than as violations.
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub diagnostic: bool,
    pub pass: bool,
}

impl Quantity {
    pub fn new(name: impl Into<String>, value: f64, rule: Rule, provenance: Provenance) -> Self {
        Quantity {
            name: name.into(),
            value,
            std_error: None,
            pass: value.is_finite() && rule.passes(value) || matches!(rule, Rule::Info),
            rule,
            provenance,
            diagnostic: false,
        }
    }

    pub fn abs(name: impl Into<String>, value: f64, target: f64, tol: f64, p: Provenance) -> Self {
        Self::new(name, value, Rule::Abs { target, tol }, p)
    }

    pub fn rel(name: impl Into<String>, value: f64, target: f64, tol: f64, p: Provenance) -> Self {
        Self::new(name, value, Rule::Rel { target, tol }, p)
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, p: Provenance) -> Self {
        Self::new(name, value, Rule::AtMost { bound }, p)
    }

    pub fn holds(name: impl Into<String>, value: bool, expected: bool, p: Provenance) -> Self {
        Self::new(name, if value { 1.0 } else { 0.0 }, Rule::Holds { expected }, p)
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, Rule::Info, Provenance::Derived)
    }

    pub fn with_error(mut self, e: f64) -> Self {
        self.std_error = Some(e);
        self
    }

    pub fn diagnostic(mut self) -> Self {
        self.diagnostic = true;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    ViolatesBound,
    /// Only convergence diagnostics failed.
    InconclusiveFail,
}

/// Exponent regression as recorded in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub name: String,
    pub targets: Vec<f64>,
    #[serde(flatten)]
    pub fit: ExponentFit,
}

/// Two-column series emitted as plot data.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: [String; 2],
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_id: String,
    pub kind: String,
    /// Kernel ids with their claimed classes, or algebra names.
    pub subjects: Vec<String>,
    pub params: serde_json::Value,
    pub seeds: Vec<u64>,
    pub fits: Vec<FitRecord>,
    pub quantities: Vec<Quantity>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
    #[serde(skip)]
    pub runtime: Duration,
    #[serde(skip)]
    pub series: Vec<Series>,
}

impl VerificationReport {
    pub fn new(check_id: &str, kind: &str, params: serde_json::Value) -> Self {
        VerificationReport {
            check_id: check_id.to_string(),
            kind: kind.to_string(),
            subjects: Vec::new(),
            params,
            seeds: Vec::new(),
            fits: Vec::new(),
            quantities: Vec::new(),
            notes: Vec::new(),
            verdict: Verdict::Pass,
            runtime: Duration::ZERO,
            series: Vec::new(),
        }
    }

    pub fn push(&mut self, q: Quantity) {
        self.quantities.push(q);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn fit(&mut self, name: impl Into<String>, fit: ExponentFit, targets: Vec<f64>) {
        self.fits.push(FitRecord {
            name: name.into(),
            targets,
            fit,
        });
    }

    pub fn series(&mut self, name: impl Into<String>, columns: [&str; 2], points: Vec<(f64, f64)>) {
        self.series.push(Series {
            name: name.into(),
            columns: columns.map(String::from),
            points,
        });
    }

    /// Sets the verdict from the quantities.
    pub fn finish(mut self) -> Self {
        let failed: Vec<&Quantity> = self.quantities.iter().filter(|q| !q.pass).collect();
        self.verdict = if failed.is_empty() {
            Verdict::Pass
        } else if failed.iter().all(|q| q.diagnostic) {
            Verdict::InconclusiveFail
        } else {
            Verdict::ViolatesBound
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_follows_quantities() {
        let mut r = VerificationReport::new("x", "size", serde_json::Value::Null);
        r.push(Quantity::abs("e", -0.51, -0.5, 0.02, Provenance::Trivial));
        assert_eq!(r.clone().finish().verdict, Verdict::Pass);
        r.push(Quantity::holds("monotone", false, true, Provenance::Stated).diagnostic());
        assert_eq!(r.clone().finish().verdict, Verdict::InconclusiveFail);
        r.push(Quantity::rel("c", 1.1, 1.0, 0.03, Provenance::Derived));
        assert_eq!(r.finish().verdict, Verdict::ViolatesBound);
    }

    #[test]
    fn non_finite_values_fail() {
        assert!(!Quantity::at_most("r", f64::NAN, 20.0, Provenance::Stated).pass);
        assert!(Quantity::info("r", f64::NAN).pass);
    }

    #[test]
    fn runtime_stays_out_of_json() {
        let mut r = VerificationReport::new("x", "size", serde_json::json!({"n": 1}));
        r.runtime = Duration::from_secs(3);
        let s = serde_json::to_string(&r).unwrap();
        assert!(!s.contains("runtime"));
        assert!(s.contains("\"verdict\":\"pass\""));
    }
}
