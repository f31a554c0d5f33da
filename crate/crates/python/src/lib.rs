use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use branchlab::experiments::{list_builtins as catalog, run, ExperimentConfig, RunContext};
use branchlab::harmonic::{
    antiperiodic_poincare, frequency_profile, gap_spectrum_check, homogeneous_mode, FrequencyOptions, ModeSum,
    VectorModes,
};
use branchlab::twoval::{pair_distance as distance, TwoValue};

fn err(e: branchlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Frequency `N(ρ)` of mode(m, a, b) about the origin at each radius.
#[pyfunction]
#[pyo3(signature = (m, a, b, radii))]
fn frequency(m: i64, a: f64, b: f64, radii: Vec<f64>) -> PyResult<Vec<f64>> {
    let v = VectorModes {
        components: vec![ModeSum::new(vec![homogeneous_mode(m, a, b).map_err(err)?])],
    };
    let p = frequency_profile(&v, [0.0, 0.0], &radii, &FrequencyOptions::default()).map_err(err)?;
    Ok(p.n)
}

/// Admissible homogeneity degrees strictly inside `(lo, hi)`.
#[pyfunction]
fn gap_spectrum(lo: f64, hi: f64) -> PyResult<Vec<f64>> {
    gap_spectrum_check(lo, hi).map_err(err)
}

/// `(ratio, equality)` of the antiperiodic Poincaré inequality for uniform
/// samples on `[0, 4π)`.
#[pyfunction]
#[pyo3(signature = (samples, tol = 1e-10))]
fn poincare(samples: Vec<f64>, tol: f64) -> PyResult<(f64, bool)> {
    let r = antiperiodic_poincare(&samples, tol).map_err(err)?;
    Ok((r.ratio(), r.equality))
}

/// Distance between the unordered pairs `{a1, a2}` and `{b1, b2}`.
#[pyfunction]
fn pair_distance(a1: Vec<f64>, a2: Vec<f64>, b1: Vec<f64>, b2: Vec<f64>) -> PyResult<f64> {
    let u = TwoValue::new(a1, a2).map_err(err)?;
    let v = TwoValue::new(b1, b2).map_err(err)?;
    distance(&u, &v).map_err(err)
}

/// `(name, kind, [(param, default)])` for every builtin.
#[pyfunction]
fn list_builtins() -> Vec<(String, String, Vec<(String, f64)>)> {
    catalog()
        .iter()
        .map(|b| {
            let params = b.params.iter().map(|p| (p.name.to_string(), p.default)).collect();
            (b.name.to_string(), b.kind.label().to_string(), params)
        })
        .collect()
}

/// Run a config file; returns `(passed, [(check, measured, pass)])`. With
/// `out`, the report is also written there.
#[pyfunction]
#[pyo3(signature = (path, seed = 0, tol_scale = 1.0, out = None))]
fn run_config(path: &str, seed: u64, tol_scale: f64, out: Option<&str>) -> PyResult<(bool, Vec<(String, f64, bool)>)> {
    let cfg = ExperimentConfig::load(Path::new(path)).map_err(err)?;
    let report = run(&cfg, &RunContext { seed, tol_scale }).map_err(err)?;
    if let Some(dir) = out {
        report.write(Path::new(dir)).map_err(err)?;
    }
    let checks = report
        .checks
        .iter()
        .map(|c| (c.name.clone(), c.measured, c.pass))
        .collect();
    Ok((report.passed(), checks))
}

/// `(schema, rows, columns)` of a CSV file.
#[pyfunction]
fn validate_csv(path: &str) -> PyResult<(String, usize, usize)> {
    let v = branchlab::io::validate(Path::new(path)).map_err(err)?;
    Ok((format!("{:?}", v.schema), v.rows, v.columns))
}

#[pymodule]
fn branchlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(frequency, m)?)?;
    m.add_function(wrap_pyfunction!(gap_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(poincare, m)?)?;
    m.add_function(wrap_pyfunction!(pair_distance, m)?)?;
    m.add_function(wrap_pyfunction!(list_builtins, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(validate_csv, m)?)?;
    Ok(())
}
