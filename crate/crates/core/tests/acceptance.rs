//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! thresholds are pinned here rather than taken from the shipped configs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use branchlab::experiments::{run, ExperimentConfig, RunContext, RunReport};
use branchlab::harmonic::{
    frequency_profile, growth_bounds_check, FrequencyOptions, HomogeneousMode, ModeSum, VectorModes,
};
use branchlab::minimal::metric::algebra_defects;
use branchlab::quadrature::GaussLegendre;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn report(name: &str) -> RunReport {
    let cfg = ExperimentConfig::load(&configs_dir().join(format!("{name}.toml"))).expect(name);
    run(&cfg, &RunContext::default()).expect(name)
}

fn measured(r: &RunReport, check: &str) -> f64 {
    r.checks
        .iter()
        .find(|c| c.name == check)
        .unwrap_or_else(|| panic!("{}: no check `{check}`", r.name))
        .measured
}

fn has(r: &RunReport, check: &str) -> bool {
    r.checks.iter().any(|c| c.name == check)
}

fn single_mode(m: u32, a: f64, b: f64) -> VectorModes {
    VectorModes {
        components: vec![ModeSum::new(vec![HomogeneousMode { m, a, b }])],
    }
}

fn radii() -> Vec<f64> {
    (0..20).map(|i| 0.1 + 0.9 * i as f64 / 19.0).collect()
}

fn frequency_exactness() -> (bool, String) {
    let mut worst = 0.0f64;
    for m in [1, 3, 5, 7] {
        for (a, b) in [(0.0, 1.0), (1.0, 0.0), (0.6, -0.8)] {
            let p = frequency_profile(
                &single_mode(m, a, b),
                [0.0, 0.0],
                &radii(),
                &FrequencyOptions::default(),
            )
            .unwrap();
            for n in &p.n {
                worst = worst.max((n - 0.5 * m as f64).abs());
            }
        }
    }
    (
        worst < 1e-8,
        format!("max |N - m/2| = {worst:.2e} over m in {{1,3,5,7}}, 20 radii (< 1e-8)"),
    )
}

fn monotonicity(r: &RunReport) -> (bool, String) {
    let v = measured(r, "monotonicity violations");
    (v == 0.0, format!("{v} violations over 100 random odd-mode sums"))
}

fn growth_bounds(r: &RunReport) -> (bool, String) {
    let slack = measured(r, "growth bound slack");
    let mut pure = 0.0f64;
    for m in [1, 3, 5, 7, 9] {
        let p = frequency_profile(
            &single_mode(m, 0.3, 0.7),
            [0.0, 0.0],
            &radii(),
            &FrequencyOptions::default(),
        )
        .unwrap();
        pure = pure.max(growth_bounds_check(&p, 1e-8).unwrap().worst_slack.abs());
    }
    (
        slack >= -1e-8 && pure <= 1e-9,
        format!("worst slack {slack:.2e} (>= -1e-8); pure-mode |slack| {pure:.2e} (<= 1e-9)"),
    )
}

fn coefficient_algebra() -> (bool, String) {
    let gl = GaussLegendre::new(16);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = [0.0f64; 5];
    for _ in 0..10_000 {
        let mut draw = || nalgebra::DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-0.5..0.5));
        let (p, q) = (draw(), draw());
        let d = algebra_defects(&p, &q, &gl);
        for (w, x) in worst
            .iter_mut()
            .zip([d.a_parity, d.e_parity, d.e_at_zero_p, d.dq_a_at_zero, d.contraction])
        {
            *w = w.max(x);
        }
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    (
        max < 1e-10,
        format!(
            "10^4 draws: A parity {:.1e}, E parity {:.1e}, E(0,q) {:.1e}, DqA(p,0) {:.1e}, contraction {:.1e} (< 1e-10)",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn order_or_zero(r: &RunReport, system: &str) -> (bool, String) {
    let name = format!("{system} observed order");
    if has(r, &name) {
        let o = measured(r, &name);
        (o >= 1.7, format!("{o:.2}"))
    } else {
        let zero = measured(r, &format!("{system} residual vanishes")) == 1.0;
        (zero, "identically 0".into())
    }
}

fn stationarity(var: &RunReport, res: &RunReport, rot: &RunReport, seconds: f64) -> (bool, String) {
    let slope = measured(var, "first variation refinement slope");
    let mut ok = slope >= 0.9 && seconds <= 300.0;
    let mut parts = vec![format!("variation slope {slope:.2} (>= 0.9)")];
    for (label, r) in [("canonical", res), ("rotated", rot)] {
        let mut s = Vec::new();
        for sys in ["difference system", "sum system", "weak sum system"] {
            let (pass, text) = order_or_zero(r, sys);
            ok &= pass;
            s.push(format!("{} {text}", sys.trim_end_matches(" system")));
        }
        parts.push(format!("{label} orders: {} (>= 1.7)", s.join(", ")));
    }
    parts.push(format!("{seconds:.1} s"));
    (ok, parts.join("; "))
}

fn c1_half_rates(r: &RunReport) -> (bool, String) {
    let v = measured(r, "|v| annulus slope");
    let dv = measured(r, "|Dv| annulus slope");
    let d2v = measured(r, "|D2v| annulus slope");
    (
        (v - 1.5).abs() <= 0.02 && (dv - 0.5).abs() <= 0.02 && (d2v + 0.5).abs() <= 0.05,
        format!("slopes |v| {v:.4}, |Dv| {dv:.4}, |D2v| {d2v:.4} (1.5±0.02, 0.5±0.02, -0.5±0.05)"),
    )
}

fn c11_average(r: &RunReport) -> (bool, String) {
    let spread = measured(r, "|D2u_a| annulus spread");
    let growth = measured(r, "|D2v| growth per annulus minus 1/2");
    let q = measured(r, "tangent-plane decay exponent");
    (
        spread < 2.0 && growth <= 0.15 && q >= 1.9,
        format!("|D2u_a| spread {spread:.3} (< 2), |D2v| growth exponent off 1/2 by {growth:.3} (<= 0.15), decay {q:.3} (>= 1.9)"),
    )
}

fn dimension(dim: &RunReport, loops: &RunReport) -> (bool, String) {
    let d = measured(dim, "box-counting dimension of the branch set");
    let swaps = measured(loops, "loops around the branch point swap sheets");
    let stray = measured(loops, "loops avoiding the branch point swap sheets");
    (
        d <= 0.1 && swaps == 50.0 && stray == 0.0,
        format!("dimension {d:.3} (<= 0.1); {swaps}/50 enclosing loops swap, {stray}/50 others swap"),
    )
}

fn poincare(r: &RunReport) -> (bool, String) {
    let ratio = measured(r, "smallest Poincare ratio");
    let mismatch = measured(r, "equality flag mismatches");
    (
        ratio >= 1.0 - 1e-10 && mismatch == 0.0,
        format!("min ratio {ratio:.12} over 1000 draws (>= 1 - 1e-10); {mismatch} equality-flag mismatches"),
    )
}

fn gap(r: &RunReport) -> (bool, String) {
    let a = measured(r, "degrees in (1, 1.49)");
    let b = measured(r, "degrees in (1.51, 2.49)");
    (
        a == 0.0 && b == 0.0,
        format!("{a} degrees in (1, 1.49), {b} in (1.51, 2.49)"),
    )
}

fn modified_frequency(identity: &RunReport, radial: &RunReport, ladder: &RunReport) -> (bool, String) {
    let agree = measured(identity, "identity coefficients reproduce N");
    let lambda = measured(ladder, "fitted rate against 10 eps");
    let ratio = measured(ladder, "rate ratio under halving eps");
    let finite = [identity, radial, ladder]
        .iter()
        .all(|r| measured(r, "comparability constant is finite") == 1.0);
    (
        agree <= 1e-12 && lambda <= 10.0 * 0.1 && (0.3..=0.8).contains(&ratio) && finite,
        format!(
            "identity agreement {agree:.1e} (<= 1e-12); rate {lambda:.4} (<= 10 eps = 1); halving ratio {ratio:.3} (in [0.3, 0.8]); comparability finite: {finite}"
        ),
    )
}

fn csv_outputs(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> (bool, String) {
    let mut configs: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    configs.sort();
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "4"].into_iter().enumerate() {
        let dir = tmp.path().join(format!("run{i}"));
        let status = Command::new(env!("CARGO_BIN_EXE_branchlab"))
            .env("BRANCHLAB_SEED", "20261015")
            .arg("--out")
            .arg(&dir)
            .args(["--jobs", jobs, "run"])
            .args(&configs)
            .output()
            .unwrap();
        if !status.status.success() {
            return (false, format!("suite run {i} exited with {}", status.status));
        }
        outputs.push(csv_outputs(&dir));
    }
    let same = outputs[0] == outputs[1];
    (
        same && !outputs[0].is_empty(),
        format!(
            "{} CSV files from {} configs, sequential vs --jobs 4, byte-identical: {same}",
            outputs[0].len(),
            configs.len()
        ),
    )
}

fn main() -> ExitCode {
    let t = Instant::now();
    let var = report("variation");
    let res = report("residuals");
    let stationarity_seconds = t.elapsed().as_secs_f64();
    let rot = report("residuals_rotated");
    let mono = report("monotonicity");

    let results: Vec<(&str, (bool, String))> = vec![
        ("frequency exactness", frequency_exactness()),
        ("monotonicity", monotonicity(&mono)),
        ("growth bounds", growth_bounds(&mono)),
        ("coefficient algebra", coefficient_algebra()),
        (
            "stationarity of the canonical example",
            stationarity(&var, &res, &rot, stationarity_seconds),
        ),
        ("C^{1,1/2} rates", c1_half_rates(&report("decay_canonical"))),
        (
            "C^{1,1} average and quadratic decay",
            c11_average(&report("decay_rotated")),
        ),
        (
            "branch set dimension and monodromy",
            dimension(&report("dimension"), &report("monodromy")),
        ),
        ("antiperiodic Poincare", poincare(&report("poincare"))),
        ("gap spectra", gap(&report("gap"))),
        (
            "modified frequency",
            modified_frequency(
                &report("frequency_identity_coeffs"),
                &report("frequency_radial_coeffs"),
                &report("monotonicity_radial_coeffs"),
            ),
        ),
        ("determinism", determinism()),
    ];
    let mut all = true;
    for (i, (name, (pass, detail))) in results.iter().enumerate() {
        println!("{} {:>2} {name}: {detail}", if *pass { "PASS" } else { "FAIL" }, i + 1);
        all &= pass;
    }
    println!(
        "{}/{} criteria passed",
        results.iter().filter(|r| r.1 .0).count(),
        results.len()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
