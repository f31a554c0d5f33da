//! Experiment dispatch.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fit::loglog_slope;
use crate::gl::{
    almost_monotonicity_fit, gl_identity_residuals, modified_frequency, poincare_ratio, symmetric_decay_fit,
    two_point_bound, ModifiedOptions, WeightedRadialMode,
};
use crate::harmonic::{
    antiperiodic_poincare, frequency_profile, gap_spectrum_check, growth_bounds_check, growth_dichotomy,
    FrequencyOptions, HomogeneousMode, ModeSum, SymmetricFn, VectorModes,
};
use crate::io::{coincidence_table, modified_profile_table, profile_table, Table};
use crate::minimal::branched::sample_field;
use crate::minimal::metric::{algebra_defects, AlgebraDefects};
use crate::minimal::residual::Bump;
use crate::minimal::study::{
    affine_defect, converged_orders, dyadic_annulus_maxima, residual_study, split_norms_of, sup_in_ball,
    variation_study,
};
use crate::minimal::variation::BumpField;
use crate::quadrature::GaussLegendre;
use crate::twoval::coincidence::{box_counting_dimension, default_tolerances, detect_coincidence};
use crate::twoval::field::{decompose, TwoValuedField};
use crate::twoval::grid::{Grid, RectGrid};
use crate::twoval::sheets::{circle_loop, monodromy};

use super::builtins::{build_coefficients, build_field, Coefficients, Field};
use super::config::{ExperimentConfig, ExperimentKind, SourceSpec, Tolerances};
use super::report::{Check, Provenance, Relation, RunReport};

pub const SEED_ENV: &str = "BRANCHLAB_SEED";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunContext {
    pub seed: u64,
    pub tol_scale: f64,
}

impl Default for RunContext {
    fn default() -> Self {
        Self {
            seed: 0,
            tol_scale: 1.0,
        }
    }
}

impl RunContext {
    /// Seed from `BRANCHLAB_SEED` (default 0).
    pub fn from_env() -> Result<Self> {
        let seed = match std::env::var(SEED_ENV) {
            Ok(s) => s
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidInput(format!("{SEED_ENV} must be a non-negative integer, got `{s}`")))?,
            Err(_) => 0,
        };
        Ok(Self {
            seed,
            ..Self::default()
        })
    }
}

#[derive(Default)]
struct Outcome {
    checks: Vec<Check>,
    artifacts: Vec<(String, Table)>,
    notes: Vec<String>,
}

struct Env<'a> {
    cfg: &'a ExperimentConfig,
    tol: Tolerances,
    rng: ChaCha8Rng,
}

impl Env<'_> {
    fn field(&mut self, default: SourceSpec) -> Result<Field> {
        let spec = self.cfg.field.clone().unwrap_or(default);
        build_field(&spec, &mut self.rng)
    }

    fn at_origin(&self) -> bool {
        self.cfg.center == [0.0, 0.0]
    }
}

pub fn run(cfg: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport> {
    cfg.validate()?;
    if !(ctx.tol_scale > 0.0) || !ctx.tol_scale.is_finite() {
        return Err(Error::InvalidInput("tolerance scale must be positive".into()));
    }
    let start = Instant::now();
    let mut env = Env {
        cfg,
        tol: cfg.tolerances.scaled(ctx.tol_scale),
        rng: ChaCha8Rng::seed_from_u64(ctx.seed),
    };
    let out = match cfg.experiment {
        ExperimentKind::Frequency => frequency(&mut env)?,
        ExperimentKind::Monotonicity => monotonicity(&mut env)?,
        ExperimentKind::Decay => decay(&mut env)?,
        ExperimentKind::Residuals => residuals(&mut env)?,
        ExperimentKind::Variation => variation(&mut env)?,
        ExperimentKind::Monodromy => monodromy_loops(&mut env)?,
        ExperimentKind::Dimension => dimension(&mut env)?,
        ExperimentKind::Gap => gap(&mut env)?,
        ExperimentKind::Poincare => poincare(&mut env)?,
    };
    Ok(RunReport {
        name: cfg.display_name(),
        experiment: cfg.experiment,
        version: VERSION,
        seed: ctx.seed,
        config_echo: cfg.to_toml(),
        notes: out.notes,
        checks: out.checks,
        artifacts: out.artifacts,
        runtime: start.elapsed(),
    })
}

/// `N(ρ)` of a sum of homogeneous modes about the origin: modes of
/// different degree are orthogonal on circles, so
/// `N = Σ (m/2) c_m² ρ^m / Σ c_m² ρ^m`.
pub fn closed_form_frequency(v: &VectorModes, rho: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for c in &v.components {
        for t in &c.terms {
            let w = (t.a * t.a + t.b * t.b) * rho.powi(t.m as i32);
            num += 0.5 * t.m as f64 * w;
            den += w;
        }
    }
    num / den
}

/// The single homogeneity degree of `v`, if it has one.
fn homogeneous_degree(v: &VectorModes) -> Option<f64> {
    let mut degrees = v
        .components
        .iter()
        .flat_map(|c| c.terms.iter().filter(|t| t.a != 0.0 || t.b != 0.0).map(|t| t.m));
    let first = degrees.next()?;
    degrees.all(|m| m == first).then_some(0.5 * first as f64)
}

fn degree_range(v: &VectorModes) -> (f64, f64) {
    v.components
        .iter()
        .flat_map(|c| c.terms.iter().filter(|t| t.a != 0.0 || t.b != 0.0))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), t| {
            (lo.min(0.5 * t.m as f64), hi.max(0.5 * t.m as f64))
        })
}

fn indexed(base: &str, i: usize, n: usize) -> String {
    if n == 1 {
        format!("{base}.csv")
    } else {
        format!("{base}_{i:03}.csv")
    }
}

fn need_modes(f: &Field, what: &str) -> Result<()> {
    if f.modes.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{what} needs a closed-form symmetric field (mode, superposition or canonical_branch), got {}",
            f.label
        )));
    }
    Ok(())
}

fn frequency(env: &mut Env) -> Result<Outcome> {
    if let Some(spec) = env.cfg.coefficients.clone() {
        let c = build_coefficients(&spec)?;
        return modified(env, &c);
    }
    let f = env.field(SourceSpec::builtin("mode"))?;
    need_modes(&f, "the frequency experiment")?;
    let radii = env.cfg.radii.values();
    let mut out = Outcome::default();
    let (mut worst_closed, mut worst_identity) = (0.0f64, 0.0f64);
    for (i, v) in f.modes.iter().enumerate() {
        let p = frequency_profile(v, env.cfg.center, &radii, &FrequencyOptions::default())?;
        for (j, &r) in radii.iter().enumerate() {
            worst_identity = worst_identity.max((p.d[j] - p.d_identity[j]).abs() / p.h[j]);
            if env.at_origin() {
                worst_closed = worst_closed.max((p.n[j] - closed_form_frequency(v, r)).abs());
            }
        }
        out.artifacts
            .push((indexed("profile", i, f.modes.len()), profile_table(&p)));
    }
    if env.at_origin() {
        out.checks.push(Check::within(
            "frequency matches closed form",
            worst_closed,
            0.0,
            env.tol.value,
            Provenance::Oracle,
        ));
    } else {
        out.notes
            .push("center is off the origin; closed-form frequency not compared".into());
    }
    out.checks.push(Check::within(
        "D = rho H'/2",
        worst_identity,
        0.0,
        env.tol.value,
        Provenance::Literature,
    ));
    out.notes.push(format!("field: {}", f.label));
    Ok(out)
}

/// The field used with a coefficient family: a single mode paired with the
/// radial family becomes the exact weighted solution with its angular data.
fn weighted_field(f: &Field, c: &Coefficients, eps: Option<f64>) -> Result<(Box<dyn SymmetricFn>, bool)> {
    need_modes(f, "the modified frequency")?;
    let single = f.modes[0]
        .components
        .first()
        .filter(|_| f.modes[0].components.len() == 1)
        .and_then(|c| (c.terms.len() == 1).then(|| c.terms[0]));
    match (eps.or(c.eps), single) {
        (Some(e), Some(t)) => Ok((Box::new(WeightedRadialMode::new(t.m, t.a, t.b, e)?), true)),
        _ => Ok((Box::new(f.modes[0].clone()), false)),
    }
}

fn modified(env: &mut Env, c: &Coefficients) -> Result<Outcome> {
    let f = env.field(SourceSpec::builtin("mode"))?;
    let (v, exact) = weighted_field(&f, c, None)?;
    let radii = env.cfg.radii.values();
    let opts = ModifiedOptions::default();
    let p = modified_frequency(v.as_ref(), c.field.as_ref(), env.cfg.center, &radii, &opts)?;
    let mut out = Outcome::default();
    if exact && env.at_origin() {
        let w = WeightedRadialMode::new(f.modes[0].components[0].terms[0].m, 0.0, 1.0, c.eps.unwrap_or(0.0))?;
        let worst = radii
            .iter()
            .zip(&p.n_hat)
            .map(|(&r, n)| {
                let (fr, dfr) = w.radial(r);
                (n - r * dfr / fr).abs()
            })
            .fold(0.0, f64::max);
        out.checks.push(Check::within(
            "modified frequency matches rho f'/f",
            worst,
            0.0,
            env.tol.value,
            Provenance::Oracle,
        ));
    }
    if c.eps == Some(0.0) {
        let h = frequency_profile(v.as_ref(), env.cfg.center, &radii, &FrequencyOptions::default())?;
        let worst = h.n.iter().zip(&p.n_hat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        out.checks.push(Check::within(
            "identity coefficients reproduce N",
            worst,
            0.0,
            env.tol.value,
            Provenance::Exact,
        ));
    }
    let cmp = p.comparability_constant();
    out.checks.push(Check::flag(
        "comparability constant is finite",
        cmp.is_finite(),
        Provenance::Literature,
    ));
    let rho = *radii.last().unwrap_or(&1.0);
    let ids = gl_identity_residuals(v.as_ref(), c.field.as_ref(), env.cfg.center, rho, &opts)?;
    out.checks.push(Check::at_most(
        "energy identity residual",
        ids.residual_d,
        env.tol.identity,
        Provenance::Literature,
    ));
    out.checks.push(Check::at_most(
        "derivative identity residual",
        ids.residual_d_prime,
        env.tol.identity,
        Provenance::Literature,
    ));
    out.notes.push(format!("field: {}; coefficients: {}", f.label, c.label));
    out.notes.push(format!("comparability constant C = {cmp}"));
    out.artifacts
        .push(("modified_profile.csv".into(), modified_profile_table(&p)));
    Ok(out)
}

fn monotonicity(env: &mut Env) -> Result<Outcome> {
    if let Some(spec) = env.cfg.coefficients.clone() {
        let c = build_coefficients(&spec)?;
        return modified_ladder(env, &c);
    }
    let default = SourceSpec::builtin("superposition")
        .with("draws", env.cfg.samples as f64)
        .with("max_m", env.cfg.mode_cutoff as f64);
    let f = env.field(default)?;
    need_modes(&f, "the monotonicity experiment")?;
    let radii = env.cfg.radii.values();
    let mut table = Table::new(&[
        "draw",
        "violations",
        "max_violation",
        "worst_slack",
        "doubling_ratio",
        "N_min",
        "N_max",
    ]);
    let mut violations = 0usize;
    let mut worst_slack = f64::INFINITY;
    let mut doubling = true;
    let mut pure_slack = 0.0f64;
    let mut pure_constant = true;
    let mut pure = 0usize;
    let (mut triggered, mut dichotomy_failures) = (0usize, 0usize);
    let rho_max = *radii.last().unwrap_or(&1.0);
    for (i, v) in f.modes.iter().enumerate() {
        let d = growth_dichotomy(
            v,
            env.cfg.center,
            rho_max,
            4,
            env.cfg.gamma,
            env.tol.growth,
            &FrequencyOptions::default(),
        )?;
        triggered += d.triggered.len();
        dichotomy_failures += d.violations.len();
        let p = frequency_profile(v, env.cfg.center, &radii, &FrequencyOptions::default())?;
        let m = p.monotonicity(env.tol.monotonicity)?;
        let g = growth_bounds_check(&p, env.tol.growth)?;
        violations += m.violations.len();
        worst_slack = worst_slack.min(g.worst_slack);
        doubling &= g.doubling_holds;
        if homogeneous_degree(v).is_some() {
            pure += 1;
            pure_slack = pure_slack.max(g.worst_slack.abs());
            pure_constant &= m.constant;
        }
        let (lo, hi) =
            p.n.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        table.push(vec![
            i as f64,
            m.violations.len() as f64,
            m.max_violation,
            g.worst_slack,
            g.doubling_worst_ratio,
            lo,
            hi,
        ]);
    }
    let mut out = Outcome::default();
    out.checks.push(Check::at_most(
        "monotonicity violations",
        violations as f64,
        0.0,
        Provenance::Literature,
    ));
    out.checks.push(Check::new(
        "growth bound slack",
        worst_slack,
        Relation::AtLeast,
        0.0,
        env.tol.growth,
        Provenance::Literature,
    ));
    out.checks
        .push(Check::flag("doubling bound", doubling, Provenance::Literature));
    // pure modes above gamma exercise the premise
    for m in (1..=env.cfg.mode_cutoff).step_by(2) {
        let v = VectorModes {
            components: vec![ModeSum::new(vec![HomogeneousMode { m, a: 1.0, b: 0.0 }])],
        };
        let d = growth_dichotomy(
            &v,
            env.cfg.center,
            rho_max,
            4,
            env.cfg.gamma,
            env.tol.growth,
            &FrequencyOptions::default(),
        )?;
        triggered += d.triggered.len();
        dichotomy_failures += d.violations.len();
    }
    out.checks.push(Check::at_most(
        "growth dichotomy violations",
        dichotomy_failures as f64,
        0.0,
        Provenance::Literature,
    ));
    out.notes.push(format!(
        "growth dichotomy with gamma = {}: premise held at {triggered} dyadic radii",
        env.cfg.gamma
    ));
    if pure > 0 {
        out.checks.push(Check::within(
            "growth bounds tight for homogeneous fields",
            pure_slack,
            0.0,
            env.tol.equality,
            Provenance::Oracle,
        ));
        out.checks.push(Check::flag(
            "constant frequency for homogeneous fields",
            pure_constant,
            Provenance::Oracle,
        ));
    }
    out.notes
        .push(format!("field: {} ({} members)", f.label, f.modes.len()));
    out.artifacts.push(("monotonicity.csv".into(), table));
    Ok(out)
}

/// Fitted almost-monotonicity rate over the ladder `ε, ε/2, ε/4`.
fn modified_ladder(env: &mut Env, c: &Coefficients) -> Result<Outcome> {
    let eps = c.eps.ok_or_else(|| {
        Error::InvalidInput("the monotonicity ladder needs the radial_conformal_coeffs family".into())
    })?;
    let f = env.field(SourceSpec::builtin("mode"))?;
    let radii = env.cfg.radii.values();
    let opts = ModifiedOptions::default();
    let mut table = Table::new(&["eps", "lambda", "comparability", "Nhat_min", "Nhat_max"]);
    let mut lambdas = Vec::new();
    let mut finite = true;
    let mut out = Outcome::default();
    for (j, e) in [eps, 0.5 * eps, 0.25 * eps].into_iter().enumerate() {
        let (v, _) = weighted_field(&f, c, Some(e))?;
        let field = crate::gl::RadialConformal { eps: e };
        let p = modified_frequency(v.as_ref(), &field, env.cfg.center, &radii, &opts)?;
        let lambda = almost_monotonicity_fit(&radii, &p.n_hat, 1.0, env.tol.monotonicity)?;
        let cmp = p.comparability_constant();
        finite &= cmp.is_finite();
        let (lo, hi) = p
            .n_hat
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        table.push(vec![e, lambda, cmp, lo, hi]);
        lambdas.push(lambda);
        if j == 0 {
            out.artifacts
                .push(("modified_profile.csv".into(), modified_profile_table(&p)));
            let beta = p.n_hat[p.n_hat.len() - 1] + 0.5;
            let tp = two_point_bound(&p, beta, 1.0)?;
            out.checks
                .push(Check::flag("two-point growth bound", tp.holds, Provenance::Literature));
        }
    }
    out.checks.push(Check::at_most(
        "fitted rate against 10 eps",
        lambdas[0],
        10.0 * eps,
        Provenance::Literature,
    ));
    out.checks.push(Check::within(
        "rate ratio under halving eps",
        lambdas[1] / lambdas[0],
        0.55,
        0.25,
        Provenance::Oracle,
    ));
    out.checks.push(Check::flag(
        "rate decreases along the ladder",
        lambdas.windows(2).all(|w| w[1] <= w[0]),
        Provenance::Oracle,
    ));
    out.checks.push(Check::flag(
        "comparability constant is finite",
        finite,
        Provenance::Literature,
    ));
    out.notes.push(format!("field: {}; coefficients: {}", f.label, c.label));
    out.artifacts.push(("ladder.csv".into(), table));
    Ok(out)
}

fn finest_grid(env: &Env) -> RectGrid {
    let g = &env.cfg.grid;
    RectGrid::centered(g.half_width, g.cells << (g.levels - 1))
}

fn sampled(env: &Env, f: &Field, g: RectGrid) -> Result<TwoValuedField> {
    match (&f.sampled, &f.graph) {
        (Some(s), _) => Ok(s.clone()),
        (None, Some(graph)) => sample_field(graph.as_ref(), Grid::Rect(g)),
        (None, None) => Err(Error::InvalidInput(format!("{} has no samples", f.label))),
    }
    .and_then(|s| {
        if env.cfg.field.as_ref().is_some_and(|s| s.csv.is_some()) {
            s.grid.as_rect()?;
        }
        Ok(s)
    })
}

fn decay(env: &mut Env) -> Result<Outcome> {
    let f = env.field(SourceSpec::builtin("canonical_branch"))?;
    let mut out = Outcome::default();
    let radii = env.cfg.radii.values();
    out.notes.push(format!("field: {}", f.label));
    if let Some(v) = f.modes.first() {
        let fit = symmetric_decay_fit(v, env.cfg.center, &radii, FrequencyOptions::default().angular)?;
        let mut t = Table::new(&["rho", "norm"]);
        for (r, n) in radii.iter().zip(&fit.norms) {
            t.push(vec![*r, *n]);
        }
        out.artifacts.push(("decay.csv".into(), t));
        if env.at_origin() {
            match homogeneous_degree(v) {
                Some(d) => out.checks.push(Check::within(
                    "circle-norm decay slope",
                    fit.slope,
                    d,
                    env.tol.slope,
                    Provenance::Oracle,
                )),
                None => {
                    let (lo, hi) = degree_range(v);
                    out.checks.push(Check::within(
                        "circle-norm slope between extreme degrees",
                        fit.slope,
                        0.5 * (lo + hi),
                        0.5 * (hi - lo) + env.tol.slope,
                        Provenance::Exact,
                    ));
                }
            }
        }
    }
    let graph_like = f.sampled.is_some() || f.modes.is_empty() || f.label == "canonical_branch";
    if graph_like {
        grid_rates(env, &f, &mut out)?;
    }
    Ok(out)
}

/// Dyadic-annulus rates of `v`, `Dv`, `D²v`, `D²u_a` and the decay of
/// `u_a` minus its tangent plane on the finest grid.
fn grid_rates(env: &mut Env, f: &Field, out: &mut Outcome) -> Result<()> {
    let g = finest_grid(env);
    let n = split_norms_of(sampled(env, f, g)?)?;
    let g = n.grid;
    let c = env.cfg.center;
    let scale = env.cfg.grid.half_width;
    let levels = (0..30u32)
        .take_while(|&j| scale * 0.5f64.powi(j as i32 + 1) >= 8.0 * g.h * (1.0 - 1e-12))
        .count() as u32;
    if levels < 3 {
        return Err(Error::InvalidInput(format!(
            "grid too coarse for dyadic rates: {levels} annuli above 8h"
        )));
    }
    let ann = |norms: &[f64]| dyadic_annulus_maxima(&g, c, norms, scale, 0..levels);
    let d: Vec<f64> = ann(&n.v).iter().map(|a| a.d_hi).collect();
    let slope = |norms: &[f64]| {
        let m: Vec<f64> = ann(norms).iter().map(|a| a.max).collect();
        loglog_slope(&d, &m).0
    };
    let mut t = Table::new(&["d_lo", "d_hi", "v", "Dv", "D2v", "D2ua"]);
    let (av, adv, ad2v, ad2a) = (ann(&n.v), ann(&n.dv), ann(&n.d2v), ann(&n.d2_average));
    for j in 0..levels as usize {
        t.push(vec![
            av[j].d_lo,
            av[j].d_hi,
            av[j].max,
            adv[j].max,
            ad2v[j].max,
            ad2a[j].max,
        ]);
    }
    out.artifacts.push(("annuli.csv".into(), t));

    let vmax = n.v.iter().filter(|x| x.is_finite()).fold(0.0f64, |a, &x| a.max(x));
    if vmax == 0.0 {
        out.checks
            .push(Check::flag("sheets coincide everywhere", true, Provenance::Exact));
    } else {
        let lit = Provenance::Literature;
        out.checks
            .push(Check::within("|v| annulus slope", slope(&n.v), 1.5, env.tol.slope, lit));
        out.checks.push(Check::within(
            "|Dv| annulus slope",
            slope(&n.dv),
            0.5,
            env.tol.slope,
            lit,
        ));
        out.checks.push(Check::within(
            "|D2v| annulus slope",
            slope(&n.d2v),
            -0.5,
            env.tol.second_slope,
            lit,
        ));
        let worst_growth = ad2v
            .windows(2)
            .map(|w| ((w[1].max / w[0].max).log2() - 0.5).abs())
            .fold(0.0, f64::max);
        out.checks.push(Check::within(
            "|D2v| growth per annulus minus 1/2",
            worst_growth,
            0.0,
            env.tol.annulus_growth,
            lit,
        ));
    }
    let (lo, hi) = ad2a
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x.max), b.max(x.max)));
    out.checks.push(Check::new(
        "|D2u_a| annulus spread",
        if lo > 0.0 { hi / lo } else { 1.0 },
        Relation::AtMost,
        2.0,
        0.0,
        Provenance::Literature,
    ));

    if let Some(graph) = &f.graph {
        let k = n.field.k;
        let grad = graph.average_gradient(c)?;
        let slope_m = DMatrix::from_fn(k, 2, |a, i| grad[i * k + a]);
        let center_node = g
            .nearest(c)
            .ok_or_else(|| Error::InvalidInput("center lies outside the grid".into()))?;
        let defect = affine_defect(&n.average, center_node, &slope_m)?;
        let radii: Vec<f64> = (0..levels).map(|j| 0.5 * scale * 0.5f64.powi(j as i32)).collect();
        let sups: Vec<f64> = radii.iter().map(|r| sup_in_ball(&g, c, &defect, *r)).collect();
        if sups.iter().all(|s| *s > 1e-13) {
            let q = loglog_slope(&radii, &sups).0;
            out.checks.push(Check::new(
                "tangent-plane decay exponent",
                q,
                Relation::AtLeast,
                2.0,
                env.tol.quadratic_decay,
                Provenance::Literature,
            ));
        } else {
            out.checks
                .push(Check::flag("average is affine", true, Provenance::Exact));
        }
    }
    Ok(())
}

fn need_graph(f: &Field, what: &str) -> Result<()> {
    if f.graph.is_none() {
        return Err(Error::InvalidInput(format!(
            "{what} refines the grid and needs a builtin field, got {}",
            f.label
        )));
    }
    Ok(())
}

fn residuals(env: &mut Env) -> Result<Outcome> {
    let mut out = Outcome::default();
    algebra(env, &mut out);
    let f = env.field(SourceSpec::builtin("canonical_branch"))?;
    need_graph(&f, "the residual study")?;
    let graph = f.graph.as_ref().ok_or(Error::Empty("graph"))?;
    let g = &env.cfg.grid;
    let exclude = g.exclude.unwrap_or(3.0 * g.coarse_h());
    let c = env.cfg.center;
    let hw = g.half_width;
    let bumps = [
        Bump {
            center: c,
            radius: 0.6 * hw,
        },
        Bump {
            center: [c[0] + 0.2 * hw, c[1] - 0.1 * hw],
            radius: 0.5 * hw,
        },
    ];
    let s = residual_study(graph.as_ref(), c, hw, g.cells, g.levels, exclude, &bumps)?;
    let mut t = Table::new(&[
        "h",
        "difference",
        "sum",
        "difference_direct",
        "sum_direct",
        "a_identity",
        "weak",
    ]);
    for l in &s.levels {
        t.push(vec![
            l.h,
            l.difference,
            l.sum,
            l.difference_direct,
            l.sum_direct,
            l.a_identity,
            l.weak,
        ]);
    }
    out.artifacts.push(("residuals.csv".into(), t));
    let cols: [(&str, fn(&crate::minimal::study::ResidualLevel) -> f64); 3] = [
        ("difference system", |l| l.difference),
        ("sum system", |l| l.sum),
        ("weak sum system", |l| l.weak),
    ];
    for (name, col) in cols {
        match converged_orders(&s.column(col), 1e-12) {
            None => out.checks.push(Check::flag(
                &format!("{name} residual vanishes"),
                true,
                Provenance::Exact,
            )),
            Some(o) if o.is_empty() => out.notes.push(format!("{name}: one level, no order")),
            Some(o) => out.checks.push(Check::new(
                &format!("{name} observed order"),
                o.iter().cloned().fold(f64::INFINITY, f64::min),
                Relation::AtLeast,
                2.0,
                env.tol.order,
                Provenance::Literature,
            )),
        }
    }
    let routes = s
        .levels
        .iter()
        .map(|l| {
            (l.difference - l.difference_direct)
                .abs()
                .max((l.sum - l.sum_direct).abs())
        })
        .fold(0.0, f64::max);
    out.checks.push(Check::at_most(
        "coefficient and direct routes agree",
        routes,
        env.tol.algebra,
        Provenance::Exact,
    ));
    out.notes.push(format!("field: {}; excluded radius {exclude}", f.label));
    Ok(out)
}

/// Coefficient identities on `samples` random `(p, q)` with `n = k = 2`.
fn algebra(env: &mut Env, out: &mut Outcome) {
    let gl = GaussLegendre::new(16);
    let mut worst = AlgebraDefects::default();
    for _ in 0..env.cfg.samples {
        let mut draw = || DMatrix::from_fn(2, 2, |_, _| env.rng.gen_range(-0.5..0.5));
        let p = draw();
        let q = draw();
        worst = worst.max(algebra_defects(&p, &q, &gl));
    }
    let tol = env.tol.algebra;
    let lit = Provenance::Literature;
    out.checks.push(Check::at_most("A parity", worst.a_parity, tol, lit));
    out.checks.push(Check::at_most("E parity", worst.e_parity, tol, lit));
    out.checks.push(Check::at_most("E(0,q)", worst.e_at_zero_p, tol, lit));
    out.checks
        .push(Check::at_most("D_q A(p,0)", worst.dq_a_at_zero, tol, lit));
    out.checks.push(Check::at_most(
        "contraction identity",
        worst.contraction,
        tol,
        Provenance::Exact,
    ));
}

fn variation(env: &mut Env) -> Result<Outcome> {
    let f = env.field(SourceSpec::builtin("canonical_branch"))?;
    need_graph(&f, "the variation study")?;
    let graph = f.graph.as_ref().ok_or(Error::Empty("graph"))?;
    let g = &env.cfg.grid;
    let c = env.cfg.center;
    let k = graph.k();
    let mut center = vec![0.0; 2 + k];
    center[..2].copy_from_slice(&c);
    let x = BumpField::radial(center, 0.8 * g.half_width);
    let levels = variation_study(graph.as_ref(), &x, g.half_width, g.cells, g.levels, env.tol.coincidence)?;
    let mut t = Table::new(&["h", "value", "coincidence_cells"]);
    for l in &levels {
        t.push(vec![l.h, l.value, l.coincidence_cells as f64]);
    }
    let mut out = Outcome::default();
    out.artifacts.push(("variation.csv".into(), t));
    let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let v: Vec<f64> = levels.iter().map(|l| l.value.abs()).collect();
    if v.iter().all(|x| *x < 1e-13) {
        out.checks
            .push(Check::flag("first variation vanishes", true, Provenance::Exact));
    } else if levels.len() >= 2 {
        out.checks.push(Check::new(
            "first variation refinement slope",
            loglog_slope(&h, &v).0,
            Relation::AtLeast,
            1.0,
            env.tol.variation_slope,
            Provenance::Literature,
        ));
        out.checks.push(Check::flag(
            "first variation decreases under refinement",
            v.windows(2).all(|w| w[1] < w[0]),
            Provenance::Literature,
        ));
    }
    out.notes.push(format!("field: {}", f.label));
    Ok(out)
}

fn monodromy_loops(env: &mut Env) -> Result<Outcome> {
    let f = env.field(SourceSpec::builtin("canonical_branch"))?;
    let g = RectGrid::centered(env.cfg.grid.half_width, env.cfg.grid.cells);
    let u = sampled(env, &f, g)?;
    let g = *u.grid.as_rect()?;
    let (_, v) = decompose(&u);
    let b = env.cfg.center;
    // largest disc about the branch point inside the grid
    let reach = (b[0] - g.origin[0])
        .min(b[1] - g.origin[1])
        .min(g.origin[0] + g.h * (g.nx - 1) as f64 - b[0])
        .min(g.origin[1] + g.h * (g.ny - 1) as f64 - b[1]);
    if !(reach > 10.0 * g.h) {
        return Err(Error::InvalidInput(
            "branch point is too close to the grid boundary".into(),
        ));
    }
    let mut t = Table::new(&["encloses", "cx", "cy", "radius", "swap"]);
    let (mut enclosing_swaps, mut other_swaps) = (0usize, 0usize);
    for _ in 0..env.cfg.samples {
        let r = env.rng.gen_range(0.3..0.6) * reach;
        let a = env.rng.gen_range(0.0..2.0 * PI);
        let off = env.rng.gen_range(0.0..0.5) * r;
        let cc = [b[0] + off * a.cos(), b[1] + off * a.sin()];
        let swap = monodromy(&v, &circle_loop(&g, cc, r)?)?;
        enclosing_swaps += swap as usize;
        t.push(vec![1.0, cc[0], cc[1], r, swap as u8 as f64]);
    }
    for _ in 0..env.cfg.samples {
        let r = env.rng.gen_range(0.1..0.2) * reach;
        let a = env.rng.gen_range(0.0..2.0 * PI);
        let dist = env.rng.gen_range(r + 0.15 * reach..0.95 * reach - r);
        let cc = [b[0] + dist * a.cos(), b[1] + dist * a.sin()];
        let swap = monodromy(&v, &circle_loop(&g, cc, r)?)?;
        other_swaps += swap as usize;
        t.push(vec![0.0, cc[0], cc[1], r, swap as u8 as f64]);
    }
    let mut out = Outcome::default();
    let n = env.cfg.samples as f64;
    out.checks.push(Check::within(
        "loops around the branch point swap sheets",
        enclosing_swaps as f64,
        n,
        0.0,
        Provenance::Literature,
    ));
    out.checks.push(Check::at_most(
        "loops avoiding the branch point swap sheets",
        other_swaps as f64,
        0.0,
        Provenance::Exact,
    ));
    out.notes.push(format!("field: {}", f.label));
    out.artifacts.push(("loops.csv".into(), t));
    Ok(out)
}

fn dimension(env: &mut Env) -> Result<Outcome> {
    let f = env.field(SourceSpec::builtin("canonical_branch"))?;
    let u = sampled(env, &f, finest_grid(env))?;
    let h = u.grid.spacing();
    let (tv, tg) = default_tolerances(h, env.tol.coincidence);
    let k = detect_coincidence(&u, tv, tg)?;
    if k.is_empty() {
        return Err(Error::Empty("detected coincidence set"));
    }
    let scales: Vec<f64> = (2..7).map(|j| h * f64::from(1u32 << j)).collect();
    let d = box_counting_dimension(&k.points, &scales)?;
    let mut out = Outcome::default();
    out.checks.push(Check::new(
        "box-counting dimension of the branch set",
        d.dimension,
        Relation::AtMost,
        0.0,
        env.tol.dimension,
        Provenance::Literature,
    ));
    out.notes
        .push(format!("field: {}; {} coincidence nodes at h = {h}", f.label, k.len()));
    out.artifacts.push(("coincidence.csv".into(), coincidence_table(&k)));
    let mut t = Table::new(&["scale", "count"]);
    for (s, c) in d.scales.iter().zip(&d.counts) {
        t.push(vec![*s, *c as f64]);
    }
    out.artifacts.push(("boxes.csv".into(), t));
    Ok(out)
}

fn gap(env: &mut Env) -> Result<Outcome> {
    let windows = if env.cfg.intervals.is_empty() {
        vec![[1.0, 1.49], [1.51, 2.49]]
    } else {
        env.cfg.intervals.clone()
    };
    let mut out = Outcome::default();
    for [lo, hi] in windows {
        let found = gap_spectrum_check(lo, hi)?;
        out.checks.push(Check::at_most(
            &format!("degrees in ({lo}, {hi})"),
            found.len() as f64,
            0.0,
            Provenance::Exact,
        ));
    }
    let mut t = Table::new(&["degree"]);
    for d in gap_spectrum_check(0.0, 0.5 * env.cfg.mode_cutoff as f64 + 0.25)? {
        t.push(vec![d]);
    }
    out.artifacts.push(("spectrum.csv".into(), t));
    Ok(out)
}

fn poincare(env: &mut Env) -> Result<Outcome> {
    let cutoff = env.cfg.mode_cutoff;
    let n = (8 * (cutoff as usize + 1)).next_power_of_two();
    let mut worst = f64::INFINITY;
    let mut mismatches = 0usize;
    let mut t = Table::new(&["draw", "ratio", "equality", "lowest_only"]);
    for i in 0..env.cfg.samples {
        // every fourth draw lies in span{cos θ/2, sin θ/2}
        let lowest_only = i % 4 == 0;
        let top = if lowest_only { 1 } else { cutoff.max(3) };
        let mut coeffs: Vec<(u32, f64, f64)> = (1..=top)
            .step_by(2)
            .map(|m| (m, env.rng.gen_range(-1.0..1.0), env.rng.gen_range(-1.0..1.0)))
            .collect();
        if !lowest_only {
            // keep some content above the lowest mode
            if let Some(last) = coeffs.last_mut() {
                last.1 += if last.1 >= 0.0 { 0.5 } else { -0.5 };
            }
        }
        let samples: Vec<f64> = (0..n)
            .map(|j| {
                let th = 4.0 * PI * j as f64 / n as f64;
                coeffs
                    .iter()
                    .map(|(m, a, b)| {
                        let (s, c) = (0.5 * *m as f64 * th).sin_cos();
                        a * c + b * s
                    })
                    .sum()
            })
            .collect();
        let r = antiperiodic_poincare(&samples, env.tol.poincare)?;
        let ratio = r.ratio();
        worst = worst.min(ratio);
        mismatches += (r.equality != lowest_only) as usize;
        t.push(vec![i as f64, ratio, r.equality as u8 as f64, lowest_only as u8 as f64]);
    }
    let mut out = Outcome::default();
    out.checks.push(Check::new(
        "smallest Poincare ratio",
        worst,
        Relation::AtLeast,
        1.0,
        env.tol.poincare,
        Provenance::Literature,
    ));
    out.checks.push(Check::at_most(
        "equality flag mismatches",
        mismatches as f64,
        0.0,
        Provenance::Exact,
    ));
    if env.cfg.field.is_some() {
        let f = env.field(SourceSpec::builtin("mode"))?;
        if let Some(v) = f.modes.first() {
            let rho = *env.cfg.radii.values().last().unwrap_or(&1.0);
            let ratio = poincare_ratio(v, env.cfg.center, rho, &FrequencyOptions::default())?;
            out.notes
                .push(format!("ball Poincare ratio of {} at rho = {rho}: {ratio}", f.label));
        }
    }
    out.artifacts.push(("poincare.csv".into(), t));
    Ok(out)
}
