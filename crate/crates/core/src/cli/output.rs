//! Report emission: one JSON document per run, a CSV exponent table and
//! two-column plot files. Every file is written to a temporary name and
//! renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::verify::{Verdict, VerificationReport, SCHEMA_VERSION};

#[derive(Clone, Debug, Serialize)]
pub struct RunInfo {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub tol_scale: f64,
}

impl RunInfo {
    pub fn new(command: &str, seed: u64, tol_scale: f64) -> Self {
        RunInfo {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            tol_scale,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub violates_bound: usize,
    pub inconclusive_fail: usize,
}

impl Summary {
    pub fn of(reports: &[VerificationReport]) -> Self {
        let count = |v| reports.iter().filter(|r| r.verdict == v).count();
        Summary {
            total: reports.len(),
            pass: count(Verdict::Pass),
            violates_bound: count(Verdict::ViolatesBound),
            inconclusive_fail: count(Verdict::InconclusiveFail),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.pass == self.total
    }
}

#[derive(Debug, Serialize)]
pub struct SuiteDocument<'a, C: Serialize> {
    pub schema_version: &'static str,
    pub provenance: RunInfo,
    /// Configuration with every default filled in.
    pub config: &'a C,
    pub summary: Summary,
    pub reports: &'a [VerificationReport],
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn suite_json<C: Serialize>(info: RunInfo, config: &C, reports: &[VerificationReport]) -> Result<String> {
    let doc = SuiteDocument {
        schema_version: SCHEMA_VERSION,
        provenance: info,
        config,
        summary: Summary::of(reports),
        reports,
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| crate::Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per fitted layer across all reports.
pub fn exponent_csv(reports: &[VerificationReport]) -> String {
    let mut s = String::from("check_id,fit,layer,exponent,std_error,target,prefactor,residual_rms,samples\n");
    for r in reports {
        for f in &r.fits {
            for (k, e) in f.fit.exponents.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    r.check_id,
                    f.name,
                    k + 1,
                    e,
                    opt(f.fit.std_errors.get(k).copied()),
                    opt(f.targets.get(k).copied()),
                    f.fit.prefactor,
                    f.fit.residual_rms,
                    f.fit.samples
                );
            }
        }
    }
    s
}

pub fn plot_text(columns: &[String; 2], points: &[(f64, f64)]) -> String {
    let mut s = format!("# {} {}\n", columns[0], columns[1]);
    for (x, y) in points {
        let _ = writeln!(s, "{x} {y}");
    }
    s
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes `report.json`, optionally `exponents.csv` and `plots/*.dat`; returns the paths written.
pub fn write_outputs<C: Serialize>(dir: &Path, info: RunInfo, config: &C, reports: &[VerificationReport], csv: bool, plots: bool) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let json = dir.join("report.json");
    write_atomic(&json, suite_json(info, config, reports)?.as_bytes())?;
    written.push(json);
    if csv {
        let p = dir.join("exponents.csv");
        write_atomic(&p, exponent_csv(reports).as_bytes())?;
        written.push(p);
    }
    if plots {
        for r in reports {
            for s in &r.series {
                let p = dir.join("plots").join(format!("{}.{}.dat", file_stem(&r.check_id), file_stem(&s.name)));
                write_atomic(&p, plot_text(&s.columns, &s.points).as_bytes())?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{Provenance, Quantity};

    fn report() -> VerificationReport {
        let mut r = VerificationReport::new("a/b", "size", serde_json::json!({}));
        r.push(Quantity::abs("e", -0.5, -0.5, 0.1, Provenance::Stated));
        r.series("s", ["x", "y"], vec![(1.0, 2.0), (3.0, 4.5)]);
        r.finish()
    }

    #[test]
    fn writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = write_outputs(dir.path(), RunInfo::new("verify", 1, 1.0), &serde_json::json!({}), &[report()], true, true).unwrap();
        assert_eq!(files.len(), 3);
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(json["schema_version"], SCHEMA_VERSION);
        assert_eq!(json["summary"]["pass"], 1);
        assert_eq!(fs::read_to_string(&files[2]).unwrap(), "# x y\n1 2\n3 4.5\n");
        assert!(files[2].ends_with("plots/a_b.s.dat"));
        assert!(fs::read_dir(dir.path()).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
    }
}
