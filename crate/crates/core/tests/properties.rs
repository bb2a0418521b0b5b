use proptest::prelude::*;
use rabi_core::exceptional::{
    classify_exceptional, find_judd_points, find_nonjuddean_points, SearchOptions, Verdict, DEFAULT_CLASSIFY_TOL,
    DEFAULT_G_TOL,
};
use rabi_core::gfunction::{g_eval_regularized, g_value, DEFAULT_EPS};
use rabi_core::oracle::{degeneracy_crossing, oracle_spectrum, BASELINE_TOL};
use rabi_core::spectrum::{crosscheck, solve_spectrum, spectral_scan, ScanConfig};
use rabi_core::{ModelParams, Parity};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn census_counts_match_oracle(g in 0.2f64..2.0, delta in 0.1f64..1.5) {
        let params = ModelParams::unit(g, delta);
        let (censuses, _) = spectral_scan(&params, 7, &ScanConfig::default()).unwrap();
        let oracle = oracle_spectrum(&params, params.baseline_energy(7), 1e-11).unwrap();
        for c in &censuses {
            let (lo, hi) = (c.n as f64, c.n as f64 + 1.0);
            let expected = oracle
                .records
                .iter()
                .filter(|r| r.parity == c.parity)
                .filter(|r| {
                    let x = r.x.0;
                    x < hi - BASELINE_TOL && (x > lo + BASELINE_TOL || (c.n < 0 && x <= lo + BASELINE_TOL && x > -delta - 1.0))
                })
                .count();
            prop_assert_eq!(c.count, expected, "n = {} {}", c.n, c.parity);
        }
    }

    #[test]
    fn reported_zeros_change_sign(g in 0.2f64..2.0, delta in 0.1f64..1.5) {
        let params = ModelParams::unit(g, delta);
        let (censuses, _) = spectral_scan(&params, 6, &ScanConfig::default()).unwrap();
        for c in censuses.iter().filter(|c| !c.suspicious) {
            for &x in &c.zeros {
                let a = g_value(c.parity, x - 1e-10, &params).unwrap();
                let b = g_value(c.parity, x + 1e-10, &params).unwrap();
                prop_assert!(a.signum() != b.signum() || a == 0.0 || b == 0.0, "x = {}", x);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn records_ordered_unique_and_complete(g in 0.2f64..1.8, delta in 0.1f64..1.2) {
        let params = ModelParams::unit(g, delta);
        let records = solve_spectrum(&params, 6).unwrap();
        prop_assert!(records.windows(2).all(|w| w[0].energy <= w[1].energy));
        for p in Parity::BOTH {
            let same: Vec<f64> = records.iter().filter(|r| r.parity == p).map(|r| r.energy).collect();
            prop_assert!(same.windows(2).all(|w| w[1] - w[0] > 1e-9));
        }
        let diff = crosscheck(&params, 6, 1e-8).unwrap();
        prop_assert!(diff.unmatched_oracle.is_empty(), "{:?}", diff.unmatched_oracle);
        prop_assert!(diff.pass);
    }
}

#[test]
fn juddean_points_satisfy_all_invariants() {
    let opts = SearchOptions::default();
    let mut seen = 0;
    for delta in [0.3, 0.7, 1.1] {
        for n in 1..=3u32 {
            for p in find_judd_points(n, delta, (0.05, 2.5), DEFAULT_G_TOL, &opts).unwrap().points {
                seen += 1;
                let params = ModelParams::unit(p.g_star, delta);

                let crossing = degeneracy_crossing(n, delta, 1.0, p.g_star - 0.02, p.g_star + 0.02, 1e-12).unwrap();
                assert!((crossing.unwrap() - p.g_star).abs() < 1e-6, "{p:?}");

                let target = params.baseline_energy(n as i64);
                let spec = oracle_spectrum(&params, target + 0.5, 1e-12).unwrap();
                for parity in Parity::BOTH {
                    assert!(spec.records.iter().any(|r| r.parity == parity && (r.energy - target).abs() < 1e-8));
                    let reg = g_eval_regularized(n, parity, &params, DEFAULT_EPS).unwrap();
                    assert!(reg.residue.abs() < 1e-9, "{p:?} {parity}: residue {}", reg.residue);
                }

                let verdict = classify_exceptional(n, &params, DEFAULT_CLASSIFY_TOL).unwrap().verdict;
                assert_eq!(verdict, Verdict::Juddean, "{p:?}");
            }
        }
    }
    assert!(seen >= 6, "only {seen} Judd points");
}

#[test]
fn nonjuddean_points_are_exclusive() {
    let opts = SearchOptions::default();
    let mut seen = 0;
    for delta in [0.3, 0.7] {
        for n in 0..=2u32 {
            for parity in Parity::BOTH {
                for p in find_nonjuddean_points(n, parity, delta, (0.05, 2.5), DEFAULT_G_TOL, &opts).unwrap().points {
                    seen += 1;
                    let params = ModelParams::unit(p.g_star, delta);
                    let target = params.baseline_energy(n as i64);
                    let spec = oracle_spectrum(&params, target + 0.5, 1e-12).unwrap();
                    assert!(spec.records.iter().any(|r| r.parity == parity && (r.energy - target).abs() < 1e-7));
                    let verdict = classify_exceptional(n, &params, DEFAULT_CLASSIFY_TOL).unwrap().verdict;
                    assert_eq!(verdict, Verdict::nonjuddean(parity), "{p:?}");
                }
            }
        }
    }
    assert!(seen > 0);
}
