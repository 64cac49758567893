//! Capacity balance, corner contraction and blow-up clouds.

use gasketlab::blowup::{blowup_cloud, density_grid};
use gasketlab::capacity::{a3_report, A3Config};
use gasketlab::energy::{contraction_check, corner_decay_n, EnergyBasis};
use gasketlab::gasket::{Gasket, GasketSpec, Word};
use gasketlab::scalar::{int, rat};
use gasketlab::{Rational, Scalar};

fn seeded(seed: u64) -> Gasket {
    Gasket::new(GasketSpec::seeded(2, &[(2, 0.5), (3, 0.5)], seed).unwrap()).unwrap()
}

#[test]
fn balance_constants_are_stable_across_depths() {
    let g = seeded(1);
    let n = corner_decay_n(2, &[2, 3], &rat(1, 6), 40).unwrap().n;
    let mut cb = Vec::new();
    let mut cc = Vec::new();
    for depth in 2..=4 {
        let mut cfg = A3Config::new(depth, n);
        cfg.samples = 16;
        cfg.max_words = 6;
        let report = a3_report::<f64>(&g, &cfg).unwrap();
        assert!(report.half_energy_inner_all);
        assert!(report.capacities_non_increasing);
        assert!(report.c_a <= 2.0);
        cb.push(report.c_b);
        cc.push(report.c_c);
    }
    for v in [&cb, &cc] {
        let max = v.iter().cloned().fold(0.0, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0 && max.is_finite() && max <= 2.0 * min, "{v:?}");
    }
}

fn all_sequences(alphabet: &[u32], len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                alphabet.iter().map(move |&l| {
                    let mut t = s.clone();
                    t.push(l);
                    t
                })
            })
            .collect();
    }
    out
}

#[test]
fn corner_contraction_is_uniform_in_the_labels() {
    let u = vec![rat(2, 3), int(-1), rat(1, 4)];
    for i in 0..=2 {
        let bound = contraction_check(2, i, &[2], &u).unwrap().bound_k;
        for len in 1..=6 {
            for tau in all_sequences(&[2, 3], len) {
                let curve = contraction_check(2, i, &tau, &u).unwrap();
                assert!(curve.within_bound, "tau={tau:?} i={i}");
                assert!(curve.theta < 1.0);
                assert!(curve.fitted_k <= bound * (1.0 + 1e-9), "tau={tau:?} i={i}");
            }
        }
    }
}

#[test]
fn blowup_matches_reference_cloud() {
    let g = Gasket::new(GasketSpec::homogeneous(2, 2).unwrap()).unwrap();
    let basis = EnergyBasis::standard(2).unwrap();
    let (b1, b2) = (&basis.vectors()[0], &basis.vectors()[1]);
    let cloud = blowup_cloud::<Rational>(&g, &Word::root(), b1, b2, 8, 4, 1).unwrap();
    assert_eq!(cloud.points.len(), 6561);
    // independent numpy computation of the same cloud
    assert!((cloud.total_mass.to_f64() - 0.8702382653286705).abs() < 1e-12);
    let high = cloud.mass_fraction_above(0.5);
    assert!((high - 0.99122).abs() < 1e-5);
    assert!(high >= 0.9);
    for res in [64, 256] {
        let grid = density_grid(&cloud, res).unwrap();
        assert!((grid.total() - cloud.total_mass.to_f64()).abs() < 1e-12);
    }
}
