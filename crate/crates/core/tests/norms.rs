use proptest::prelude::*;
use psdecay::inequalities::{
    check_gagliardo_nirenberg, check_interpolation, check_power_estimate, check_product_estimate,
    run_inequality_suite, FrequencyRegion, GnExponents, InequalitySuiteConfig, ProductExponents,
};
use psdecay::norms::{equivalence_constants, hom_sobolev_norm, lp_norm, sobolev_norm};
use psdecay::random::BandLimitedSampler;
use psdecay::{Field, Grid};
use std::f64::consts::PI;

fn sampler(seed: u64) -> (Grid, BandLimitedSampler) {
    let g = Grid::new(1, 256, 16.0 * PI).unwrap();
    let s = BandLimitedSampler::new(&g, 64, seed).unwrap();
    (g, s)
}

#[test]
fn interpolation_single_mode_is_equality() {
    let l = 2.0 * PI;
    let g = Grid::new(1, 32, l).unwrap();
    let f = Field::from_fn(&g, |x| (3.0 * x[0]).cos()).forward();
    // cos has the two modes +-3, both at |xi| = 3: a concentrated measure in |xi|
    let r = check_interpolation(&f, 0.5, 2.0, FrequencyRegion::All).unwrap();
    assert!((r.ratio - 1.0).abs() < 1e-12);
    let same = check_interpolation(&f, 1.3, 1.3, FrequencyRegion::All).unwrap();
    assert!((same.ratio - 1.0).abs() < 1e-12);
}

#[test]
fn interpolation_rejects_bad_orders() {
    let g = Grid::new(1, 16, 1.0).unwrap();
    let f = Field::constant(&g, 1.0).forward();
    assert!(check_interpolation(&f, 0.0, 1.0, FrequencyRegion::All).is_err());
    assert!(check_interpolation(&f, 2.0, 1.0, FrequencyRegion::All).is_err());
}

#[test]
fn gn_degenerate_case() {
    let (_, mut s) = sampler(11);
    let u = s.sample();
    let e = GnExponents { j: 0, m: 1, p: 3.0, q: 3.0, r: 2.0 };
    let rep = check_gagliardo_nirenberg(&u, e).unwrap();
    assert_eq!(rep.a, 0.0);
    assert!((rep.report.ratio - 1.0).abs() < 1e-14);
}

#[test]
fn gn_agmon_bound() {
    let (_, mut s) = sampler(12);
    let e = GnExponents { j: 0, m: 1, p: f64::INFINITY, q: 2.0, r: 2.0 };
    for _ in 0..100 {
        let rep = check_gagliardo_nirenberg(&s.sample(), e).unwrap();
        assert!((rep.a - 0.5).abs() < 1e-15);
        assert!(rep.report.ratio <= 1.0, "{}", rep.report.ratio);
    }
}

#[test]
fn gn_rejects_unbalanced_tuples() {
    let e = GnExponents { j: 0, m: 1, p: f64::INFINITY, q: 1.0, r: 2.0 };
    assert!(e.admissible_a(1).is_ok());
    let bad = GnExponents { j: 1, m: 2, p: 1.0, q: f64::INFINITY, r: f64::INFINITY };
    assert!(bad.admissible_a(1).is_err());
    // a = 1 with m - j - n/r = 0
    let edge = GnExponents { j: 0, m: 1, p: f64::INFINITY, q: 2.0, r: 1.0 };
    assert!(edge.admissible_a(1).is_err());
    let swapped = GnExponents { j: 2, m: 1, p: 2.0, q: 2.0, r: 2.0 };
    assert!(swapped.admissible_a(1).is_err());
}

#[test]
fn gn_ratio_is_scale_invariant() {
    // u(x) and u(2x) sampled on grids resolving both equally well
    let bump = |x: f64| (-x * x).exp() * (1.0 + 0.5 * (3.0 * x).sin());
    let e = GnExponents { j: 1, m: 2, p: 4.0, q: 2.0, r: 2.0 };
    let g1 = Grid::new(1, 512, 40.0).unwrap();
    let g2 = Grid::new(1, 1024, 40.0).unwrap();
    let r1 = check_gagliardo_nirenberg(&Field::from_fn(&g1, |x| bump(x[0])), e).unwrap();
    let r2 = check_gagliardo_nirenberg(&Field::from_fn(&g2, |x| bump(2.0 * x[0])), e).unwrap();
    let drift = (r1.report.ratio / r2.report.ratio - 1.0).abs();
    assert!(drift < 0.05, "drift {drift}");
}

#[test]
fn product_with_constant_is_bounded_by_one() {
    let (g, mut s) = sampler(13);
    let one = Field::constant(&g, 1.0);
    for l in [0.5, 1.0, 2.0] {
        let rep = check_product_estimate(&s.sample(), &one, l, ProductExponents::l2_linf()).unwrap();
        assert!(rep.ratio <= 1.0 + 1e-12);
    }
}

#[test]
fn product_single_mode_closed_form() {
    // g = h = cos(w x): ratio = 2^{l-2}
    let l_box = 2.0 * PI * 4.0;
    let g = Grid::new(1, 128, l_box).unwrap();
    let w = 2.0 * PI * 5.0 / l_box;
    let c = Field::from_fn(&g, |x| (w * x[0]).cos());
    for l in [0.5, 1.0, 1.5, 3.0] {
        let rep = check_product_estimate(&c, &c, l, ProductExponents::l2_linf()).unwrap();
        assert!((rep.ratio - 2f64.powf(l - 2.0)).abs() < 1e-12, "l={l}: {}", rep.ratio);
    }
}

#[test]
fn product_rejects_bad_tuples() {
    let (_, mut s) = sampler(1);
    let f = s.sample();
    let bad = ProductExponents { r: 2.0, p1: 2.0, q1: 2.0, p2: 2.0, q2: f64::INFINITY };
    assert!(check_product_estimate(&f, &f, 1.0, bad).is_err());
    assert!(check_product_estimate(&f, &f, 0.0, ProductExponents::l2_linf()).is_err());
    assert!(check_power_estimate(&f, -1.0, 2).is_err());
}

#[test]
fn equivalence_holds_on_random_fields() {
    let (_, mut s) = sampler(14);
    for _ in 0..100 {
        let spec = s.sample().forward();
        let l2 = sobolev_norm(&spec, 0.0).value.powi(2);
        for order in [0.3, 1.0, 1.7, 3.0] {
            let (c0, c1) = equivalence_constants(order);
            let full = sobolev_norm(&spec, order).value.powi(2);
            let hom = hom_sobolev_norm(&spec, order).unwrap().value.powi(2);
            assert!(c0 * (l2 + hom) <= full * (1.0 + 1e-12));
            assert!(full <= c1 * (l2 + hom) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn small_suite_has_no_violations() {
    let config = InequalitySuiteConfig { fields: 40, ..Default::default() };
    let summary = run_inequality_suite(&config).unwrap();
    assert_eq!(summary.violations(), 0);
    assert_eq!(summary.interpolation_checks, 160);
    assert!(summary.product.spread < 10.0);
    assert!(summary.power.spread < 10.0);
    let again = run_inequality_suite(&config).unwrap();
    assert_eq!(summary, again);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn triangle_inequality(seed in any::<u64>(), p in 1.0f64..8.0, s in 0.0f64..2.5) {
        let (_, mut smp) = sampler(seed);
        let (a, b) = (smp.sample(), smp.sample());
        let sum = a.add(&b).unwrap();
        for q in [p, f64::INFINITY] {
            let lhs = lp_norm(&sum, q).unwrap().value;
            let rhs = lp_norm(&a, q).unwrap().value + lp_norm(&b, q).unwrap().value;
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
        let (fa, fb, fs) = (a.forward(), b.forward(), sum.forward());
        prop_assert!(sobolev_norm(&fs, s).value <= (sobolev_norm(&fa, s).value + sobolev_norm(&fb, s).value) * (1.0 + 1e-12));
        prop_assert!(hom_sobolev_norm(&fs, s).unwrap().value
            <= (hom_sobolev_norm(&fa, s).unwrap().value + hom_sobolev_norm(&fb, s).unwrap().value) * (1.0 + 1e-12));
    }

    #[test]
    fn sobolev_monotone_in_order(seed in any::<u64>(), s in -1.0f64..2.0, ds in 0.0f64..1.5) {
        let (_, mut smp) = sampler(seed);
        let spec = smp.sample().forward();
        prop_assert!(sobolev_norm(&spec, s).value <= sobolev_norm(&spec, s + ds).value * (1.0 + 1e-14));
    }

    #[test]
    fn h0_is_l2(seed in any::<u64>()) {
        let (_, mut smp) = sampler(seed);
        let f = smp.sample();
        let a = lp_norm(&f, 2.0).unwrap().value;
        prop_assert!((sobolev_norm(&f.forward(), 0.0).value - a).abs() <= 1e-12 * a);
    }

    #[test]
    fn interpolation_never_violated(seed in any::<u64>(), r1 in 0.05f64..2.0, extra in 0.0f64..2.0, radius in 0.5f64..6.0) {
        let (_, mut smp) = sampler(seed);
        let spec = smp.sample().forward();
        for region in [
            FrequencyRegion::All,
            FrequencyRegion::Ball { radius },
            FrequencyRegion::Annulus { inner: radius / 2.0, outer: radius },
            FrequencyRegion::Exterior { radius },
        ] {
            let rep = check_interpolation(&spec, r1, r1 + extra, region).unwrap();
            prop_assert!(rep.holds(1e-12), "{:?}", rep);
        }
    }

    #[test]
    fn norms_zero_only_for_zero(c in -5.0f64..5.0) {
        let g = Grid::new(1, 16, 2.0).unwrap();
        let f = Field::constant(&g, c);
        let v = lp_norm(&f, 3.0).unwrap().value;
        prop_assert_eq!(v == 0.0, c == 0.0);
    }
}
