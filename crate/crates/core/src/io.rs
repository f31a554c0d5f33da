//! Versioned CSV exchange formats.
//!
//! Every file starts with the comment line `# branchlab v1` followed by a
//! header row. Floats are written in their shortest round-trip form.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::gl::{ModifiedFrequencyProfile, SampledMatrixField};
use crate::harmonic::{FrequencyProfile, HalfIntegerFourier};
use crate::twoval::coincidence::CoincidenceSet;
use crate::twoval::field::TwoValuedField;
use crate::twoval::grid::{Grid, PolarGrid, RectGrid};

pub const FORMAT_VERSION: u32 = 1;
pub const VERSION_LINE: &str = "# branchlab v1";

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// A versioned table with unparsed cells and their 1-based line numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<(usize, Vec<String>)>,
}

impl RawTable {
    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let first = lines.next().ok_or(Error::Empty("csv input"))?;
        let first = first.map_err(|e| Error::Io(e.to_string()))?;
        let version = first
            .trim()
            .strip_prefix("# branchlab v")
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("expected version line `{VERSION_LINE}`"),
            })?;
        if version != FORMAT_VERSION {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported format version {version}"),
            });
        }
        let rest: String = lines
            .map(|l| {
                l.map(|mut s| {
                    s.push('\n');
                    s
                })
            })
            .collect::<std::io::Result<String>>()
            .map_err(|e| Error::Io(e.to_string()))?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(rest.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse {
                line: 2,
                message: e.to_string(),
            })?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().any(|h| h.is_empty()) {
            return Err(Error::Parse {
                line: 2,
                message: "empty column name".into(),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 3;
            let rec = rec.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            rows.push((line, rec.iter().map(str::to_string).collect()));
        }
        Ok(Self { header, rows })
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::read(f).map_err(|e| with_path(e, path))
    }
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// A header plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{VERSION_LINE}");
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    /// Parse a versioned table. Errors carry 1-based line numbers.
    pub fn read<R: Read>(r: R) -> Result<Self> {
        Self::from_raw(RawTable::read(r)?)
    }

    pub fn from_raw(raw: RawTable) -> Result<Self> {
        let mut rows = Vec::with_capacity(raw.rows.len());
        for (line, rec) in &raw.rows {
            let row = rec
                .iter()
                .map(|c| {
                    c.parse::<f64>().map_err(|_| Error::Parse {
                        line: *line,
                        message: format!("`{c}` is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self {
            header: raw.header,
            rows,
        })
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::read(f).map_err(|e| with_path(e, path))
    }
}

fn value_header(first: [&str; 2], k: usize) -> Vec<String> {
    let mut h: Vec<String> = first.iter().map(|s| s.to_string()).collect();
    for sheet in 1..=2 {
        for c in 1..=k {
            h.push(format!("u{sheet}_{c}"));
        }
    }
    h
}

pub fn field_table(u: &TwoValuedField) -> Table {
    let names = match u.grid {
        Grid::Rect(_) => ["x", "y"],
        Grid::Polar(_) => ["r", "theta"],
    };
    let mut t = Table::new(&value_header(names, u.k));
    for idx in 0..u.grid.len() {
        let coords = match &u.grid {
            Grid::Rect(g) => g.point(idx),
            Grid::Polar(g) => {
                let (r, th) = g.polar(idx);
                [r, th]
            }
        };
        let mut row = coords.to_vec();
        row.extend_from_slice(u.first_at(idx));
        row.extend_from_slice(u.second_at(idx));
        t.push(row);
    }
    t
}

fn uniform_axis(values: &[f64], what: &str) -> Result<(f64, f64, usize)> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    if v.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{what} axis has fewer than 2 distinct values"
        )));
    }
    let h = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    for (i, x) in v.iter().enumerate() {
        if (x - (v[0] + h * i as f64)).abs() > 1e-6 * h {
            return Err(Error::InvalidInput(format!("{what} axis is not uniformly spaced")));
        }
    }
    Ok((v[0], h, v.len()))
}

/// Rebuild a field from its CSV table. Rows may appear in any order.
pub fn field_from_table(t: &Table) -> Result<TwoValuedField> {
    let cols = t.header.len();
    if cols < 4 || (cols - 2) % 2 != 0 {
        return Err(Error::InvalidInput(
            "field tables need x,y (or r,theta) and 2k value columns".into(),
        ));
    }
    let k = (cols - 2) / 2;
    let polar = match (t.header[0].as_str(), t.header[1].as_str()) {
        ("x", "y") => false,
        ("r", "theta") => true,
        _ => return Err(Error::InvalidInput("first columns must be x,y or r,theta".into())),
    };
    if t.header != value_header(if polar { ["r", "theta"] } else { ["x", "y"] }, k) {
        return Err(Error::InvalidInput(
            "value columns must be u1_1..u1_k,u2_1..u2_k".into(),
        ));
    }
    let a: Vec<f64> = t.rows.iter().map(|r| r[0]).collect();
    let b: Vec<f64> = t.rows.iter().map(|r| r[1]).collect();
    let (a0, ha, na) = uniform_axis(&a, &t.header[0])?;
    let (b0, hb, nb) = uniform_axis(&b, &t.header[1])?;
    if na * nb != t.rows.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} rows for a {na} x {nb} grid, found {}",
            na * nb,
            t.rows.len()
        )));
    }
    let grid = if polar {
        let g = PolarGrid::new(a0, a0 + ha * (na - 1) as f64, na, nb)?;
        if (g.dtheta() - hb).abs() > 1e-9 || b0.abs() > 1e-12 {
            return Err(Error::InvalidInput("theta must cover [0, 4π) uniformly".into()));
        }
        Grid::Polar(g)
    } else {
        if (ha - hb).abs() > 1e-9 * ha {
            return Err(Error::InvalidInput("x and y spacings differ".into()));
        }
        Grid::Rect(RectGrid::new([a0, b0], ha, na, nb)?)
    };
    let mut first = vec![f64::NAN; grid.len() * k];
    let mut second = vec![f64::NAN; grid.len() * k];
    let mut seen = vec![false; grid.len()];
    for r in &t.rows {
        let i = ((r[0] - a0) / ha).round() as usize;
        let j = ((r[1] - b0) / hb).round() as usize;
        let idx = match &grid {
            Grid::Rect(g) => g.index(i, j),
            Grid::Polar(g) => g.index(i, j),
        };
        if seen[idx] {
            return Err(Error::InvalidInput(format!("duplicate node ({}, {})", r[0], r[1])));
        }
        seen[idx] = true;
        first[idx * k..(idx + 1) * k].copy_from_slice(&r[2..2 + k]);
        second[idx * k..(idx + 1) * k].copy_from_slice(&r[2 + k..2 + 2 * k]);
    }
    TwoValuedField::new(grid, k, first, second)
}

pub fn profile_table(p: &FrequencyProfile) -> Table {
    let mut t = Table::new(&["rho", "H", "D", "N", "err"]);
    for i in 0..p.radii.len() {
        t.push(vec![p.radii[i], p.h[i], p.d[i], p.n[i], p.err[i]]);
    }
    t
}

pub fn modified_profile_table(p: &ModifiedFrequencyProfile) -> Table {
    let mut t = Table::new(&["rho", "I", "Hmu", "Nhat", "err"]);
    for i in 0..p.radii.len() {
        t.push(vec![p.radii[i], p.i[i], p.h_mu[i], p.n_hat[i], p.err[i]]);
    }
    t
}

pub fn fourier_table(f: &HalfIntegerFourier) -> Table {
    let mut t = Table::new(&["m", "a", "b"]);
    for (m, (a, b)) in &f.modes {
        t.push(vec![*m as f64, *a, *b]);
    }
    t
}

pub fn coincidence_table(k: &CoincidenceSet) -> Table {
    let mut t = Table::new(&["x", "y"]);
    for p in &k.points {
        t.push(p.to_vec());
    }
    t
}

pub fn coefficient_table(a: &SampledMatrixField) -> Table {
    let mut t = Table::new(&["x", "y", "A_11", "A_12", "A_21", "A_22"]);
    for (idx, m) in a.values.iter().enumerate() {
        let p = a.grid.point(idx);
        t.push(vec![p[0], p[1], m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]);
    }
    t
}

pub fn coefficients_from_table(t: &Table) -> Result<SampledMatrixField> {
    if t.header != ["x", "y", "A_11", "A_12", "A_21", "A_22"] {
        return Err(Error::InvalidInput(
            "coefficient tables use x,y,A_11,A_12,A_21,A_22".into(),
        ));
    }
    let xs: Vec<f64> = t.rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = t.rows.iter().map(|r| r[1]).collect();
    let (x0, h, nx) = uniform_axis(&xs, "x")?;
    let (y0, _, ny) = uniform_axis(&ys, "y")?;
    if nx * ny != t.rows.len() {
        return Err(Error::InvalidInput("coefficient table is not a full grid".into()));
    }
    let grid = RectGrid::new([x0, y0], h, nx, ny)?;
    let mut values = vec![Matrix2::zeros(); nx * ny];
    for r in &t.rows {
        let i = ((r[0] - x0) / h).round() as usize;
        let j = ((r[1] - y0) / h).round() as usize;
        values[grid.index(i, j)] = Matrix2::new(r[2], r[3], r[4], r[5]);
    }
    SampledMatrixField::new(grid, values)
}

/// Known table layouts, recognized by their header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    RectField {
        k: usize,
    },
    PolarField {
        k: usize,
    },
    Frequency,
    ModifiedFrequency,
    Fourier,
    Coefficients,
    Points,
    /// Per-check rows of a run report.
    Report,
    Other,
}

pub const REPORT_HEADER: [&str; 7] = [
    "check",
    "measured",
    "relation",
    "expected",
    "tolerance",
    "provenance",
    "pass",
];
pub const RELATIONS: [&str; 3] = ["within", "at_most", "at_least"];
pub const PROVENANCES: [&str; 3] = ["exact", "oracle", "literature"];

fn validate_report(raw: &RawTable) -> Result<()> {
    for (line, r) in &raw.rows {
        let bad = |message: String| Error::Parse { line: *line, message };
        if r.len() != REPORT_HEADER.len() {
            return Err(bad(format!(
                "expected {} columns, found {}",
                REPORT_HEADER.len(),
                r.len()
            )));
        }
        for c in [1, 3, 4] {
            r[c].parse::<f64>()
                .map_err(|_| bad(format!("`{}` is not a number", r[c])))?;
        }
        if !RELATIONS.contains(&r[2].as_str()) {
            return Err(bad(format!("unknown relation `{}`", r[2])));
        }
        if !PROVENANCES.contains(&r[5].as_str()) {
            return Err(bad(format!("unknown provenance `{}`", r[5])));
        }
        if r[6] != "true" && r[6] != "false" {
            return Err(bad(format!("pass must be true or false, found `{}`", r[6])));
        }
    }
    Ok(())
}

pub fn detect_schema(header: &[String]) -> Schema {
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    match h.as_slice() {
        ["rho", "H", "D", "N", "err"] => Schema::Frequency,
        ["rho", "I", "Hmu", "Nhat", "err"] => Schema::ModifiedFrequency,
        ["m", "a", "b"] => Schema::Fourier,
        ["x", "y", "A_11", "A_12", "A_21", "A_22"] => Schema::Coefficients,
        ["x", "y"] => Schema::Points,
        _ if h.len() >= 4 && h.len() % 2 == 0 => {
            let k = (h.len() - 2) / 2;
            if header == value_header(["x", "y"], k).as_slice() {
                Schema::RectField { k }
            } else if header == value_header(["r", "theta"], k).as_slice() {
                Schema::PolarField { k }
            } else {
                Schema::Other
            }
        }
        _ => Schema::Other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub schema: Schema,
    pub rows: usize,
    pub columns: usize,
}

/// Parse a CSV file and check it against the schema its header names.
pub fn validate(path: &Path) -> Result<Validation> {
    let raw = RawTable::read_path(path)?;
    if raw.header == REPORT_HEADER {
        validate_report(&raw).map_err(|e| with_path(e, path))?;
        return Ok(Validation {
            schema: Schema::Report,
            rows: raw.rows.len(),
            columns: raw.header.len(),
        });
    }
    let t = Table::from_raw(raw).map_err(|e| with_path(e, path))?;
    let schema = detect_schema(&t.header);
    for (i, r) in t.rows.iter().enumerate() {
        if r.len() != t.header.len() {
            return Err(Error::Parse {
                line: i + 3,
                message: format!("expected {} columns, found {}", t.header.len(), r.len()),
            });
        }
    }
    match schema {
        Schema::RectField { .. } | Schema::PolarField { .. } => {
            field_from_table(&t)?;
        }
        Schema::Coefficients => {
            coefficients_from_table(&t)?;
        }
        Schema::Frequency | Schema::ModifiedFrequency => {
            let rho = t.column("rho").unwrap_or_default();
            if rho.windows(2).any(|w| w[1] <= w[0]) || rho.first().is_some_and(|r| *r <= 0.0) {
                return Err(Error::InvalidInput("rho must be positive and increasing".into()));
            }
        }
        Schema::Fourier => {
            if t.rows
                .iter()
                .any(|r| r[0] < 1.0 || r[0].fract() != 0.0 || (r[0] as i64) % 2 == 0)
            {
                return Err(Error::InvalidInput("mode indices must be odd positive integers".into()));
            }
        }
        Schema::Points | Schema::Report | Schema::Other => {}
    }
    Ok(Validation {
        schema,
        rows: t.rows.len(),
        columns: t.header.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoval::value::TwoValue;

    #[test]
    fn float_format_round_trips() {
        for v in [0.0, 1.5, -2.25e-7, 1e300, 3.141592653589793, 1e-4, 123456.789] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn rect_field_round_trip() {
        let g = RectGrid::centered(1.0, 3);
        let u = TwoValuedField::from_fn(Grid::Rect(g), 2, |p| {
            TwoValue::new(vec![p[0], p[1] * 0.1], vec![-p[0], 1.0 / 3.0]).unwrap()
        })
        .unwrap();
        let s = field_table(&u).to_csv_string();
        assert!(s.starts_with("# branchlab v1\nx,y,u1_1,u1_2,u2_1,u2_2\n"));
        let back = field_from_table(&Table::read(s.as_bytes()).unwrap()).unwrap();
        assert_eq!(back.first, u.first);
        assert_eq!(back.second, u.second);
    }

    #[test]
    fn polar_field_round_trip() {
        let g = PolarGrid::new(0.2, 1.0, 5, 16).unwrap();
        let u = TwoValuedField::from_fn(Grid::Polar(g), 1, |p| TwoValue::symmetric(vec![p[0] + 2.0 * p[1]])).unwrap();
        let s = field_table(&u).to_csv_string();
        let back = field_from_table(&Table::read(s.as_bytes()).unwrap()).unwrap();
        assert_eq!(back.first, u.first);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let bad = "# branchlab v1\nx,y\n1,2\n3,oops\n";
        match Table::read(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Table::read("x,y\n1,2\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(Table::read("# branchlab v2\nx,y\n".as_bytes()).is_err());
    }

    #[test]
    fn schema_detection() {
        let h = |s: &str| s.split(',').map(String::from).collect::<Vec<_>>();
        assert_eq!(detect_schema(&h("rho,H,D,N,err")), Schema::Frequency);
        assert_eq!(detect_schema(&h("x,y,u1_1,u2_1")), Schema::RectField { k: 1 });
        assert_eq!(
            detect_schema(&h("r,theta,u1_1,u1_2,u2_1,u2_2")),
            Schema::PolarField { k: 2 }
        );
        assert_eq!(detect_schema(&h("a,b,c")), Schema::Other);
    }
}
