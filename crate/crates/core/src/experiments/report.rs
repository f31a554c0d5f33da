//! Run reports: per-check outcomes, artifacts and their on-disk form.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, Table, REPORT_HEADER, VERSION_LINE};

use super::config::ExperimentKind;

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Holds by construction or by an algebraic identity.
    Exact,
    /// A closed form evaluated independently of the code under test.
    Oracle,
    /// A published estimate or rate.
    Literature,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Oracle => "oracle",
            Self::Literature => "literature",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `|measured − expected| ≤ tolerance`.
    Within,
    /// `measured ≤ expected + tolerance`.
    AtMost,
    /// `measured ≥ expected − tolerance`.
    AtLeast,
}

impl Relation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Within => "within",
            Self::AtMost => "at_most",
            Self::AtLeast => "at_least",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub expected: f64,
    pub tolerance: f64,
    pub provenance: Provenance,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: &str,
        measured: f64,
        relation: Relation,
        expected: f64,
        tolerance: f64,
        provenance: Provenance,
    ) -> Self {
        let pass = match relation {
            Relation::Within => (measured - expected).abs() <= tolerance,
            Relation::AtMost => measured <= expected + tolerance,
            Relation::AtLeast => measured >= expected - tolerance,
        };
        Self {
            name: name.to_string(),
            measured,
            relation,
            expected,
            tolerance,
            provenance,
            pass,
        }
    }

    pub fn within(name: &str, measured: f64, expected: f64, tol: f64, prov: Provenance) -> Self {
        Self::new(name, measured, Relation::Within, expected, tol, prov)
    }

    pub fn at_most(name: &str, measured: f64, bound: f64, prov: Provenance) -> Self {
        Self::new(name, measured, Relation::AtMost, bound, 0.0, prov)
    }

    pub fn at_least(name: &str, measured: f64, bound: f64, prov: Provenance) -> Self {
        Self::new(name, measured, Relation::AtLeast, bound, 0.0, prov)
    }

    /// A yes/no outcome recorded as `1` against an expected `1`.
    pub fn flag(name: &str, ok: bool, prov: Provenance) -> Self {
        Self::within(name, if ok { 1.0 } else { 0.0 }, 1.0, 0.0, prov)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub experiment: ExperimentKind,
    pub version: &'static str,
    pub seed: u64,
    pub config_echo: String,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<(String, Table)>,
    pub runtime: Duration,
}

impl RunReport {
    /// True when there is at least one check and every check passed.
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn checks_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let _ = w.write_record(REPORT_HEADER);
        for c in &self.checks {
            let _ = w.write_record([
                c.name.clone(),
                fmt_f64(c.measured),
                c.relation.as_str().to_string(),
                fmt_f64(c.expected),
                fmt_f64(c.tolerance),
                c.provenance.as_str().to_string(),
                c.pass.to_string(),
            ]);
        }
        let body = w
            .into_inner()
            .map(|b| String::from_utf8_lossy(&b).into_owned())
            .unwrap_or_default();
        format!("{VERSION_LINE}\n{body}")
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "branchlab {} -- {} ({})",
            self.version,
            self.name,
            self.experiment.name()
        );
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "runtime: {:.3} s", self.runtime.as_secs_f64());
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        let _ = writeln!(s);
        for c in &self.checks {
            let rel = match c.relation {
                Relation::Within => format!("= {} ± {}", fmt_f64(c.expected), fmt_f64(c.tolerance)),
                Relation::AtMost => format!("<= {}", fmt_f64(c.expected + c.tolerance)),
                Relation::AtLeast => format!(">= {}", fmt_f64(c.expected - c.tolerance)),
            };
            let _ = writeln!(
                s,
                "[{}] {}: {} (expected {rel}, {})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                fmt_f64(c.measured),
                c.provenance.as_str()
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{}: {}/{} checks passed",
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len()
        );
        let _ = writeln!(s, "\n[config]\n{}", self.config_echo.trim_end());
        s
    }

    /// Write `report.txt`, `report.csv` and every artifact into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let put = |name: &str, body: &str| {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
        };
        put("report.txt", &self.text())?;
        put("report.csv", &self.checks_csv())?;
        for (name, t) in &self.artifacts {
            t.write_path(&dir.join(name))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(Check::within("a", 1.0 + 1e-9, 1.0, 1e-8, Provenance::Oracle).pass);
        assert!(!Check::within("a", 1.1, 1.0, 1e-8, Provenance::Oracle).pass);
        assert!(Check::at_most("b", 0.05, 0.1, Provenance::Literature).pass);
        assert!(!Check::at_least("c", 1.6, 1.7, Provenance::Literature).pass);
        assert!(!Check::within("nan", f64::NAN, 1.0, 1.0, Provenance::Exact).pass);
        assert!(!Check::flag("f", false, Provenance::Exact).pass);
    }

    #[test]
    fn checks_csv_validates() {
        let r = RunReport {
            name: "t".into(),
            experiment: ExperimentKind::Gap,
            version: "0",
            seed: 0,
            config_echo: String::new(),
            notes: vec![],
            checks: vec![Check::within("x, with comma", 1.0, 1.0, 0.0, Provenance::Exact)],
            artifacts: vec![],
            runtime: Duration::ZERO,
        };
        let dir = tempfile::tempdir().unwrap();
        r.write(dir.path()).unwrap();
        let v = crate::io::validate(&dir.path().join("report.csv")).unwrap();
        assert_eq!(v.schema, crate::io::Schema::Report);
        assert_eq!(v.rows, 1);
        assert!(r.passed());
    }
}
