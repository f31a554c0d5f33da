use std::f64::consts::PI;

use proptest::prelude::*;

use branchlab::experiments::{ExperimentConfig, ExperimentKind};
use branchlab::fit::loglog_slope;
use branchlab::harmonic::{
    antiperiodic_poincare, frequency_profile, gap_spectrum_check, FrequencyOptions, HomogeneousMode, ModeSum,
    VectorModes,
};
use branchlab::minimal::metric::algebra_defects;
use branchlab::quadrature::GaussLegendre;

fn odd_modes(max: usize) -> impl Strategy<Value = Vec<(u32, f64, f64)>> {
    prop::collection::vec((0..=(max as u32 / 2), -1.0..1.0f64, -1.0..1.0f64), 1..5).prop_map(|v| {
        let mut seen = std::collections::BTreeMap::new();
        for (j, a, b) in v {
            seen.entry(2 * j + 1).or_insert((a, b));
        }
        seen.into_iter()
            .filter(|(_, (a, b))| a * a + b * b > 1e-4)
            .map(|(m, (a, b))| (m, a, b))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn superposition_frequency_is_the_weighted_mean_degree(modes in odd_modes(9)) {
        prop_assume!(!modes.is_empty());
        let v = VectorModes {
            components: vec![ModeSum::new(modes.iter().map(|&(m, a, b)| HomogeneousMode { m, a, b }).collect())],
        };
        let radii = [0.2, 0.4, 0.6, 0.8, 1.0];
        let p = frequency_profile(&v, [0.0, 0.0], &radii, &FrequencyOptions::default()).unwrap();
        for (r, n) in radii.iter().zip(&p.n) {
            let w: Vec<f64> = modes.iter().map(|&(m, a, b)| (a * a + b * b) * r.powi(m as i32)).collect();
            let want = modes.iter().zip(&w).map(|(t, w)| 0.5 * t.0 as f64 * w).sum::<f64>() / w.iter().sum::<f64>();
            prop_assert!((n - want).abs() < 1e-8, "N = {n}, want {want}");
        }
        prop_assert!(p.n.windows(2).all(|w| w[1] >= w[0] - 1e-10));
    }

    #[test]
    fn poincare_ratio_matches_parseval(modes in odd_modes(11)) {
        prop_assume!(!modes.is_empty());
        let n = 256;
        let f: Vec<f64> = (0..n)
            .map(|j| {
                let t = 4.0 * PI * j as f64 / n as f64;
                modes.iter().map(|&(m, a, b)| a * (0.5 * m as f64 * t).cos() + b * (0.5 * m as f64 * t).sin()).sum()
            })
            .collect();
        let r = antiperiodic_poincare(&f, 1e-10).unwrap();
        let c: Vec<f64> = modes.iter().map(|&(_, a, b)| a * a + b * b).collect();
        let want = modes.iter().zip(&c).map(|(t, c)| (t.0 * t.0) as f64 * c).sum::<f64>() / c.iter().sum::<f64>();
        prop_assert!((r.ratio() - want).abs() < 1e-9 * want);
        prop_assert!(r.ratio() >= 1.0 - 1e-10);
        prop_assert_eq!(r.equality, modes.iter().all(|t| t.0 == 1));
    }

    #[test]
    fn coefficient_algebra_identities(e in prop::array::uniform8(-0.5..0.5f64)) {
        let p = nalgebra::DMatrix::from_row_slice(2, 2, &e[..4]);
        let q = nalgebra::DMatrix::from_row_slice(2, 2, &e[4..]);
        let d = algebra_defects(&p, &q, &GaussLegendre::new(16));
        prop_assert!(d.worst() < 1e-10, "{d:?}");
    }

    #[test]
    fn gap_windows_list_exactly_the_half_odd_degrees(lo in 0.0..5.0f64, width in 0.01..4.0f64) {
        let hi = lo + width;
        let got = gap_spectrum_check(lo, hi).unwrap();
        let want: Vec<f64> = (0..10).map(|j| j as f64 + 0.5).filter(|d| *d > lo && *d < hi).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn loglog_slope_recovers_power_laws(c in 0.1..10.0f64, s in -3.0..3.0f64) {
        let x: Vec<f64> = (0..8).map(|j| 0.5f64.powi(j)).collect();
        let y: Vec<f64> = x.iter().map(|x| c * x.powf(s)).collect();
        prop_assert!((loglog_slope(&x, &y).0 - s).abs() < 1e-10);
    }

    #[test]
    fn config_echo_round_trips(value in 1e-14..1.0f64, slope in 1e-3..1.0f64, samples in 1usize..500, cutoff in 0u32..6) {
        let mut c = ExperimentConfig::new(ExperimentKind::Monotonicity);
        c.tolerances.value = value;
        c.tolerances.slope = slope;
        c.samples = samples;
        c.mode_cutoff = 2 * cutoff + 1;
        let back = ExperimentConfig::from_toml_str(&c.to_toml()).unwrap();
        prop_assert_eq!(back, c);
    }
}
