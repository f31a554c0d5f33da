use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use branchlab::experiments::{list_builtins, reference_page, run, ExperimentConfig, RunContext, RunReport};
use branchlab::io::validate;
use branchlab::Error;

#[derive(Parser)]
#[command(
    name = "branchlab",
    version,
    about = "Numerical experiments on two-valued harmonic functions and branched minimal graphs"
)]
struct Cli {
    /// Base directory for reports; each config writes to DIR/<name>.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run up to N configs in parallel.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    jobs: usize,
    /// Multiply every tolerance by F.
    #[arg(long, global = true, value_name = "F", default_value_t = 1.0)]
    tol_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiment configs and write their reports.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// List the built-in fields and coefficient families.
    List {
        /// Print the configuration reference page instead.
        #[arg(long)]
        reference: bool,
    },
    /// Check CSV files against the schema named by their header.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { configs } => run_all(&cli, configs),
        Command::List { reference } => {
            if *reference {
                print!("{}", reference_page());
            } else {
                list();
            }
            ExitCode::SUCCESS
        }
        Command::Validate { files } => validate_all(files),
    }
}

fn list() {
    for b in list_builtins() {
        println!("{:<24} {:<12} {}", b.name, b.kind.label(), b.summary);
        for p in b.params {
            println!("    {:<8} = {:<6} {}", p.name, p.default, p.doc);
        }
    }
}

fn located(path: &Path, e: Error) -> String {
    match e {
        // these already name the file
        Error::Parse { .. } | Error::Io(_) => e.to_string(),
        other => format!("{}: {other}", path.display()),
    }
}

fn run_one(path: &Path, out: Option<&Path>, ctx: &RunContext) -> Result<(RunReport, PathBuf), String> {
    let cfg = ExperimentConfig::load(path).map_err(|e| located(path, e))?;
    let dir = match (out, &cfg.output) {
        (Some(base), _) => base.join(cfg.display_name()),
        (None, Some(dir)) => dir.clone(),
        (None, None) => Path::new("out").join(cfg.display_name()),
    };
    let report = run(&cfg, ctx).map_err(|e| located(path, e))?;
    report.write(&dir).map_err(|e| located(path, e))?;
    Ok((report, dir))
}

fn run_all(cli: &Cli, configs: &[PathBuf]) -> ExitCode {
    let ctx = match RunContext::from_env() {
        Ok(c) => RunContext {
            tol_scale: cli.tol_scale,
            ..c
        },
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    if !(cli.tol_scale > 0.0) || !cli.tol_scale.is_finite() {
        eprintln!("error: --tol-scale must be positive and finite");
        return ExitCode::from(EXIT_ERROR);
    }
    let out = cli.out.as_deref();
    let results: Vec<_> = if cli.jobs > 1 {
        let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_ERROR);
            }
        };
        pool.install(|| configs.par_iter().map(|p| run_one(p, out, &ctx)).collect())
    } else {
        configs.iter().map(|p| run_one(p, out, &ctx)).collect()
    };

    let (mut failed, mut errored) = (false, false);
    for r in results {
        match r {
            Ok((report, dir)) => {
                let passed = report.checks.iter().filter(|c| c.pass).count();
                println!(
                    "{} {} ({}/{} checks) -> {}",
                    if report.passed() { "PASS" } else { "FAIL" },
                    report.name,
                    passed,
                    report.checks.len(),
                    dir.display()
                );
                for c in report.failures() {
                    println!("    FAIL {}: measured {}", c.name, c.measured);
                }
                failed |= !report.passed();
            }
            Err(msg) => {
                eprintln!("error: {msg}");
                errored = true;
            }
        }
    }
    if errored {
        ExitCode::from(EXIT_ERROR)
    } else if failed {
        ExitCode::from(EXIT_FAIL)
    } else {
        ExitCode::SUCCESS
    }
}

fn validate_all(files: &[PathBuf]) -> ExitCode {
    let mut ok = true;
    for f in files {
        match validate(f) {
            Ok(v) => println!(
                "ok {}: {:?}, {} rows, {} columns",
                f.display(),
                v.schema,
                v.rows,
                v.columns
            ),
            Err(e) => {
                eprintln!("error: {}", located(f, e));
                ok = false;
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ERROR)
    }
}
