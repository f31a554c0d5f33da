use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use branchlab::experiments::{
    list_builtins, run, BuiltinKind, ExperimentConfig, ExperimentKind, RunContext, SourceSpec,
};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_branchlab"));
    c.env_remove("BRANCHLAB_SEED");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_is_stable_and_names_every_builtin() {
    let a = bin().arg("list").output().unwrap();
    let b = bin().arg("list").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let names = [
        "mode",
        "superposition",
        "canonical_branch",
        "rotated_branch",
        "holomorphic_square",
        "radial_conformal_coeffs",
    ];
    let positions: Vec<usize> = names.iter().map(|n| text.find(&format!("{n} ")).expect(n)).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn shipped_reference_page_is_current() {
    let o = bin().args(["list", "--reference"]).output().unwrap();
    let shipped =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/config_reference.md")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), shipped);
}

#[test]
fn every_builtin_runs_at_defaults() {
    for b in list_builtins() {
        let mut cfg = match b.kind {
            BuiltinKind::Symmetric => ExperimentConfig::new(ExperimentKind::Frequency),
            BuiltinKind::Graph => ExperimentConfig::new(ExperimentKind::Decay),
            BuiltinKind::Coefficients => ExperimentConfig::new(ExperimentKind::Frequency),
        };
        match b.kind {
            BuiltinKind::Coefficients => cfg.coefficients = Some(SourceSpec::builtin(b.name)),
            _ => cfg.field = Some(SourceSpec::builtin(b.name)),
        }
        cfg.grid.levels = 2;
        let r = run(&cfg, &RunContext::default()).unwrap_or_else(|e| panic!("{}: {e}", b.name));
        assert!(r.passed(), "{}\n{}", b.name, r.text());
    }
}

#[test]
fn run_writes_reports_that_validate() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("--out")
        .arg(dir.path())
        .arg("run")
        .arg(configs().join("frequency_mode.toml"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("frequency_mode");
    for f in ["report.txt", "report.csv", "profile.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let text = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(text.contains("[PASS] frequency matches closed form"));
    let csv = std::fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(csv.starts_with("# branchlab v"));
    let v = bin()
        .arg("validate")
        .arg(out.join("report.csv"))
        .arg(out.join("profile.csv"))
        .output()
        .unwrap();
    assert!(v.status.success(), "{}", stderr(&v));
}

#[test]
fn unknown_experiment_is_a_parse_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "# first line\nexperiment = \"flux\"\n").unwrap();
    let o = bin()
        .arg("--out")
        .arg(dir.path())
        .arg("run")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 2") && e.contains("bad.toml"), "{e}");
}

#[test]
fn failing_checks_give_exit_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("--out")
        .arg(dir.path())
        .args(["--tol-scale", "1e-12", "run"])
        .arg(configs().join("frequency_superposition.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL"));
}

#[test]
fn bad_seed_and_bad_scale_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let gap = configs().join("gap.toml");
    let o = bin()
        .env("BRANCHLAB_SEED", "-3")
        .arg("--out")
        .arg(dir.path())
        .arg("run")
        .arg(&gap)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .arg("--out")
        .arg(dir.path())
        .args(["--tol-scale", "0", "run"])
        .arg(&gap)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_changes_random_draws_only_when_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("monotonicity.toml");
    let mut csv = Vec::new();
    for (i, seed) in ["1", "1", "2"].into_iter().enumerate() {
        let out = dir.path().join(i.to_string());
        let o = bin()
            .env("BRANCHLAB_SEED", seed)
            .arg("--out")
            .arg(&out)
            .arg("run")
            .arg(&cfg)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        csv.push(std::fs::read(out.join("monotonicity/monotonicity.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    assert_ne!(csv[0], csv[2]);
}

#[test]
fn validate_reports_the_bad_line() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("profile.csv");
    std::fs::write(&f, "# branchlab v1\nrho,H,D,N,err\n0.1,1,1,1,0\n0.2,1,oops,1,0\n").unwrap();
    let o = bin().arg("validate").arg(&f).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn csv_field_input_runs_the_decay_experiment() {
    // sample the canonical example on a grid, write it, then read it back
    use branchlab::io::field_table;
    use branchlab::minimal::branched::{sample_field, BranchedExample};
    use branchlab::twoval::{Grid, RectGrid};
    let dir = tempfile::tempdir().unwrap();
    let u = sample_field(&BranchedExample::identity(), Grid::Rect(RectGrid::centered(1.0, 128))).unwrap();
    let csv = dir.path().join("field.csv");
    field_table(&u).write_path(&csv).unwrap();
    let cfg = dir.path().join("decay_csv.toml");
    std::fs::write(&cfg, "experiment = \"decay\"\n[field]\ncsv = \"field.csv\"\n").unwrap();
    let o = bin()
        .arg("--out")
        .arg(dir.path().join("out"))
        .arg("run")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(
        o.status.success(),
        "{}\n{}",
        String::from_utf8_lossy(&o.stdout),
        stderr(&o)
    );
}
