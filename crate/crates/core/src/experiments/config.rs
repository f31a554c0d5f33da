//! TOML experiment configurations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Frequency,
    Monotonicity,
    Decay,
    Residuals,
    Variation,
    Monodromy,
    Dimension,
    Gap,
    Poincare,
}

impl ExperimentKind {
    pub const ALL: [Self; 9] = [
        Self::Frequency,
        Self::Monotonicity,
        Self::Decay,
        Self::Residuals,
        Self::Variation,
        Self::Monodromy,
        Self::Dimension,
        Self::Gap,
        Self::Poincare,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Frequency => "frequency",
            Self::Monotonicity => "monotonicity",
            Self::Decay => "decay",
            Self::Residuals => "residuals",
            Self::Variation => "variation",
            Self::Monodromy => "monodromy",
            Self::Dimension => "dimension",
            Self::Gap => "gap",
            Self::Poincare => "poincare",
        }
    }
}

/// A built-in example with numeric parameters, or a CSV file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl SourceSpec {
    pub fn builtin(name: &str) -> Self {
        Self {
            builtin: Some(name.to_string()),
            ..Self::default()
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn validate(&self, what: &str) -> Result<()> {
        match (&self.builtin, &self.csv) {
            (Some(_), None) => Ok(()),
            (None, Some(_)) if self.params.is_empty() => Ok(()),
            (None, Some(_)) => Err(Error::InvalidInput(format!("{what}: params apply to builtins only"))),
            _ => Err(Error::InvalidInput(format!(
                "{what}: give exactly one of `builtin` and `csv`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    pub half_width: f64,
    /// Cells per half width on the coarsest level.
    pub cells: usize,
    /// Refinement levels, each halving the spacing.
    pub levels: usize,
    /// Excluded radius about the branch point; `3 h` of the coarsest level
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclude: Option<f64>,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            half_width: 1.0,
            cells: 32,
            levels: 3,
            exclude: None,
        }
    }
}

impl GridParams {
    pub fn coarse_h(&self) -> f64 {
        self.half_width / self.cells as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiiSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
    /// Explicit radii; overrides the range when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for RadiiSpec {
    fn default() -> Self {
        Self {
            start: 0.1,
            stop: 1.0,
            count: 20,
            spacing: Spacing::Linear,
            values: None,
        }
    }
}

impl RadiiSpec {
    pub fn values(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let n = self.count.max(1);
        if n == 1 {
            return vec![self.stop];
        }
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Geometric => self.start * (self.stop / self.start).powf(t),
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let v = self.values();
        if v.is_empty() || v.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidInput("radii must be positive and finite".into()));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("radii must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Pass/fail tolerances. `--tol-scale` multiplies every entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Agreement of computed values with closed forms.
    pub value: f64,
    /// Allowed drop of `N` between consecutive radii, on top of the
    /// profile's own error estimate.
    pub monotonicity: f64,
    /// Allowed negative slack in the growth bounds.
    pub growth: f64,
    /// Slack of the growth bounds for homogeneous fields, which are tight.
    pub equality: f64,
    /// Fitted log-log slopes against their targets.
    pub slope: f64,
    /// Log-log slope of second derivatives, which carry finite-difference
    /// error near the branch point.
    pub second_slope: f64,
    /// Per-annulus growth exponent of `|D²v|` against `1/2`.
    pub annulus_growth: f64,
    /// Shortfall of the affine-approximation decay exponent below 2.
    pub quadratic_decay: f64,
    /// Shortfall of the first-variation refinement slope below 1.
    pub variation_slope: f64,
    /// Relative residual of the modified-frequency identities.
    pub identity: f64,
    /// Observed convergence order may fall this far below the target.
    pub order: f64,
    /// Coefficient-algebra identities.
    pub algebra: f64,
    /// Upper bound on the box-counting dimension of the branch set.
    pub dimension: f64,
    /// Shortfall of the antiperiodic Poincaré ratio below 1.
    pub poincare: f64,
    /// Constant `c` of the coincidence tolerances `c h^{3/2}`, `c h^{1/2}`.
    pub coincidence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            value: 1e-8,
            monotonicity: 1e-10,
            growth: 1e-8,
            equality: 1e-9,
            slope: 0.02,
            second_slope: 0.05,
            annulus_growth: 0.15,
            quadratic_decay: 0.1,
            variation_slope: 0.1,
            identity: 1e-6,
            order: 0.3,
            algebra: 1e-10,
            dimension: 0.1,
            poincare: 1e-10,
            coincidence: 5.0,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 15] {
        [
            ("value", self.value),
            ("monotonicity", self.monotonicity),
            ("growth", self.growth),
            ("equality", self.equality),
            ("slope", self.slope),
            ("second_slope", self.second_slope),
            ("annulus_growth", self.annulus_growth),
            ("quadratic_decay", self.quadratic_decay),
            ("variation_slope", self.variation_slope),
            ("identity", self.identity),
            ("order", self.order),
            ("algebra", self.algebra),
            ("dimension", self.dimension),
            ("poincare", self.poincare),
            ("coincidence", self.coincidence),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.entries() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "tolerance `{name}` must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self {
            value: self.value * f,
            monotonicity: self.monotonicity * f,
            growth: self.growth * f,
            equality: self.equality * f,
            slope: self.slope * f,
            second_slope: self.second_slope * f,
            annulus_growth: self.annulus_growth * f,
            quadratic_decay: self.quadratic_decay * f,
            variation_slope: self.variation_slope * f,
            identity: self.identity * f,
            order: self.order * f,
            algebra: self.algebra * f,
            dimension: self.dimension * f,
            poincare: self.poincare * f,
            coincidence: self.coincidence * f,
        }
    }
}

fn default_samples() -> usize {
    100
}

fn default_cutoff() -> u32 {
    9
}

fn default_gamma() -> f64 {
    1.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Output subdirectory; the config file stem when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<SourceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<SourceSpec>,
    #[serde(default)]
    pub center: [f64; 2],
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub radii: RadiiSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Highest odd mode used by random draws.
    #[serde(default = "default_cutoff")]
    pub mode_cutoff: u32,
    /// Growth exponent of the dichotomy check.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Number of random draws (fields, loops or polynomials).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Frequency windows for the gap experiment.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intervals: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            name: None,
            field: None,
            coefficients: None,
            center: [0.0, 0.0],
            grid: GridParams::default(),
            radii: RadiiSpec::default(),
            tolerances: Tolerances::default(),
            mode_cutoff: default_cutoff(),
            gamma: default_gamma(),
            samples: default_samples(),
            intervals: Vec::new(),
            output: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read and validate a config file. Relative CSV paths are resolved
    /// against the file's directory; the name defaults to the file stem.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for spec in [cfg.field.as_mut(), cfg.coefficients.as_mut()].into_iter().flatten() {
            if let Some(p) = spec.csv.as_mut() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        self.radii.validate()?;
        if let Some(f) = &self.field {
            f.validate("field")?;
        }
        if let Some(c) = &self.coefficients {
            c.validate("coefficients")?;
        }
        let g = &self.grid;
        if !(g.half_width > 0.0) || g.cells < 4 || g.levels == 0 {
            return Err(Error::InvalidInput(
                "grid needs half_width > 0, cells >= 4 and levels >= 1".into(),
            ));
        }
        if g.exclude.is_some_and(|e| !(e > 0.0)) {
            return Err(Error::InvalidInput("grid.exclude must be positive".into()));
        }
        if self.mode_cutoff == 0 || self.mode_cutoff % 2 == 0 {
            return Err(Error::InvalidInput("mode_cutoff must be odd and positive".into()));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidInput("gamma must be positive and finite".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("samples must be positive".into()));
        }
        if self.intervals.iter().any(|[a, b]| !(a < b)) {
            return Err(Error::InvalidInput("intervals must satisfy lo < hi".into()));
        }
        Ok(())
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# config could not be echoed: {e}\n"))
    }
}

const TOLERANCE_DOCS: [(&str, &str); 15] = [
    ("value", "agreement of computed values with closed forms"),
    (
        "monotonicity",
        "allowed drop of N between radii beyond the propagated error",
    ),
    ("growth", "allowed negative slack in the growth bounds"),
    ("equality", "slack of the growth bounds for homogeneous fields"),
    ("slope", "fitted log-log slopes of |v| and |Dv|"),
    ("second_slope", "fitted log-log slope of |D2v|"),
    ("annulus_growth", "per-annulus growth exponent of |D2v| about 1/2"),
    (
        "quadratic_decay",
        "shortfall of the tangent-plane decay exponent below 2",
    ),
    (
        "variation_slope",
        "shortfall of the first-variation refinement slope below 1",
    ),
    ("identity", "residual of the modified-frequency identities"),
    ("order", "shortfall of observed residual orders below 2"),
    ("algebra", "coefficient-algebra identities"),
    ("dimension", "upper bound on the box-counting dimension"),
    ("poincare", "shortfall of the antiperiodic Poincare ratio below 1"),
    (
        "coincidence",
        "constant c in the coincidence thresholds c h^1.5 and c h^0.5",
    ),
];

/// Markdown reference of every config key, its default and the builtin catalog.
pub fn reference_page() -> String {
    use std::fmt::Write as _;
    let d = ExperimentConfig::new(ExperimentKind::Frequency);
    let mut s = String::from("# branchlab configuration reference\n\n");
    s.push_str("Generated by `branchlab list --reference`.\n\n## Top level\n\n");
    s.push_str("| key | default | meaning |\n|---|---|---|\n");
    let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
    let rows = [
        (
            "experiment",
            "required".to_string(),
            format!("one of {}", names.join(", ")),
        ),
        ("name", "file stem".into(), "output subdirectory".into()),
        (
            "center",
            format!("{:?}", d.center),
            "branch point or frequency center".into(),
        ),
        (
            "mode_cutoff",
            d.mode_cutoff.to_string(),
            "highest odd mode in random draws".into(),
        ),
        (
            "gamma",
            d.gamma.to_string(),
            "growth exponent of the dichotomy check (monotonicity)".into(),
        ),
        (
            "samples",
            d.samples.to_string(),
            "random draws: fields, loops, polynomials or (p, q) pairs".into(),
        ),
        (
            "intervals",
            "[[1, 1.49], [1.51, 2.49]]".into(),
            "frequency windows of the gap experiment".into(),
        ),
        (
            "output",
            "--out/<name>".into(),
            "report directory when --out is not given".into(),
        ),
    ];
    for (k, v, m) in rows {
        let _ = writeln!(s, "| `{k}` | {v} | {m} |");
    }
    s.push_str("\n## [field] and [coefficients]\n\n");
    s.push_str("Exactly one of `builtin = \"name\"` and `csv = \"path\"`; `[field.params]` sets builtin parameters. ");
    s.push_str("CSV paths are relative to the config file.\n\n");
    s.push_str("| builtin | kind | parameters (default) | description |\n|---|---|---|---|\n");
    for b in super::builtins::list_builtins() {
        let params: Vec<String> = b
            .params
            .iter()
            .map(|p| format!("{} ({}): {}", p.name, p.default, p.doc))
            .collect();
        let _ = writeln!(
            s,
            "| `{}` | {} | {} | {} |",
            b.name,
            b.kind.label(),
            params.join("; "),
            b.summary
        );
    }
    s.push_str("\n## [grid]\n\n| key | default | meaning |\n|---|---|---|\n");
    let g = &d.grid;
    let _ = writeln!(
        s,
        "| `half_width` | {} | square [-w, w]^2 about the origin |",
        g.half_width
    );
    let _ = writeln!(
        s,
        "| `cells` | {} | cells per half width on the coarsest level |",
        g.cells
    );
    let _ = writeln!(s, "| `levels` | {} | refinement levels, each halving h |", g.levels);
    let _ = writeln!(
        s,
        "| `exclude` | 3h of the coarsest level | radius excluded about the branch point |"
    );
    s.push_str("\n## [radii]\n\n| key | default | meaning |\n|---|---|---|\n");
    let r = &d.radii;
    let _ = writeln!(s, "| `start` | {} | first radius |", r.start);
    let _ = writeln!(s, "| `stop` | {} | last radius |", r.stop);
    let _ = writeln!(s, "| `count` | {} | number of radii |", r.count);
    let _ = writeln!(s, "| `spacing` | linear | linear or geometric |");
    let _ = writeln!(s, "| `values` | none | explicit increasing radii |");
    s.push_str("\n## [tolerances]\n\nAll positive; `--tol-scale F` multiplies each.\n\n");
    s.push_str("| key | default | meaning |\n|---|---|---|\n");
    for ((k, v), (_, m)) in d.tolerances.entries().iter().zip(TOLERANCE_DOCS) {
        let _ = writeln!(s, "| `{k}` | {v:e} | {m} |");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ExperimentConfig::from_toml_str("experiment = \"frequency\"\n").unwrap();
        assert_eq!(c.experiment, ExperimentKind::Frequency);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.radii.values().len(), 20);
    }

    #[test]
    fn unknown_experiment_is_rejected_with_line() {
        let e = ExperimentConfig::from_toml_str("# comment\nexperiment = \"nope\"\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        assert!(ExperimentConfig::from_toml_str("experiment = \"gap\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn tolerances_must_be_positive() {
        let text = "experiment = \"gap\"\n[tolerances]\nvalue = 0.0\n";
        assert!(matches!(
            ExperimentConfig::from_toml_str(text),
            Err(Error::InvalidInput(_))
        ));
        let t = Tolerances::default().scaled(2.0);
        assert_eq!(t.value, 2e-8);
    }

    #[test]
    fn source_needs_exactly_one_origin() {
        let text = "experiment = \"dimension\"\n[field]\nbuiltin = \"mode\"\ncsv = \"a.csv\"\n";
        assert!(ExperimentConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = ExperimentConfig::new(ExperimentKind::Decay);
        c.field = Some(SourceSpec::builtin("mode").with("m", 5.0));
        c.radii.spacing = Spacing::Geometric;
        let back = ExperimentConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn geometric_radii_span_the_range() {
        let r = RadiiSpec {
            start: 0.05,
            stop: 0.5,
            count: 5,
            spacing: Spacing::Geometric,
            values: None,
        };
        let v = r.values();
        assert!((v[0] - 0.05).abs() < 1e-15 && (v[4] - 0.5).abs() < 1e-15);
        assert!((v[1] / v[0] - v[4] / v[3]).abs() < 1e-12);
    }
}
