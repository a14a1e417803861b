use psdecay::decay::{
    energy_identity_residual, fit_exponent, run_decay_experiment, split, spread_radius_sq,
    wraparound_estimate, DecayConfig, InitialData,
};
use psdecay::greens::TimeFrequencyCutoff;
use psdecay::random::BandLimitedSampler;
use psdecay::solver::{solve, ModelParams, SolverConfig};
use psdecay::{Field, Grid, GridSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian(g: &Grid) -> Field {
    Field::from_fn(g, |x| (-x.iter().map(|v| v * v).sum::<f64>() / 4.0).exp())
}

#[test]
fn noisy_power_law_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let t: Vec<f64> = (0..=200).map(|i| i as f64 * 0.5).collect();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let v: Vec<f64> = t
            .iter()
            .map(|t| (1.0 + t).powf(-0.75) * (1.0 + noise.sample(&mut rng)))
            .collect();
        let fit = fit_exponent(&t, &v, (5.0, 100.0)).unwrap();
        worst = worst.max((fit.slope + 0.75).abs());
    }
    assert!(worst < 0.02, "{worst}");
}

#[test]
fn split_reconstructs_and_respects_support() {
    let g = Grid::new(2, 64, 40.0).unwrap();
    let mut smp = BandLimitedSampler::new(&g, 20, 4).unwrap();
    let u = smp.sample().add(&gaussian(&g)).unwrap();
    for t in [0.0, 3.0, 30.0] {
        let sp = split(&u, t, 4.0).unwrap();
        let err = sp.low.add(&sp.high).unwrap().sub(&u).unwrap().max_abs();
        assert!(err < 1e-12 * u.max_abs());
        let low = sp.low.forward();
        let high = sp.high.forward();
        let scale = u.forward().max_abs();
        for (flat, &xs) in g.xi_sq().iter().enumerate() {
            if xs >= 4.0 * sp.eta * sp.eta {
                assert!(low.coeffs()[flat].norm() < 1e-12 * scale);
            }
            if xs <= sp.eta * sp.eta {
                assert!(high.coeffs()[flat].norm() < 1e-12 * scale);
            }
        }
    }
}

#[test]
fn late_split_keeps_only_the_mean() {
    let g = Grid::new(1, 128, 20.0).unwrap();
    let u = gaussian(&g);
    // eta(t) below the first lattice frequency 2 pi / L
    let sp = split(&u, 1e4, 4.0).unwrap();
    assert!(sp.eta < 2.0 * std::f64::consts::PI / 20.0);
    let low = sp.low.forward();
    for (flat, c) in low.coeffs().iter().enumerate() {
        if flat != 0 {
            assert!(c.norm() < 1e-12);
        }
    }
    assert!((sp.low.mean() - u.mean()).abs() < 1e-14);
}

#[test]
fn high_spectrum_has_no_low_part() {
    let l = 20.0;
    let g = Grid::new(1, 128, l).unwrap();
    let w = 2.0 * std::f64::consts::PI * 30.0 / l;
    let u = Field::from_fn(&g, |x| 0.5 + (w * x[0]).cos());
    let sp = split(&u, 10.0, 4.0).unwrap();
    assert!(w > 2.0 * sp.eta);
    for (a, b) in sp.low.values().iter().zip(sp.low.values().iter().skip(1)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn linear_energy_identity() {
    let g = Grid::new(1, 256, 64.0).unwrap();
    let m = ModelParams::new(1, 0.25, 0.75, 2).unwrap().linear();
    let traj = solve(&gaussian(&g), &SolverConfig::new(m, 1e-4, 0.2)).unwrap();
    let r = energy_identity_residual(&traj.records);
    assert!(r.iter().all(|&v| v < 1e-8), "{}", r.last().unwrap());
}

#[test]
fn nonlinear_energy_identity_second_order() {
    let g = Grid::new(1, 512, 64.0).unwrap();
    let m = ModelParams::new(1, 0.25, 0.75, 2).unwrap();
    let residual = |dt: f64| {
        let traj = solve(&gaussian(&g), &SolverConfig::new(m.clone(), dt, 1.0)).unwrap();
        assert!(traj.hs2_increases.is_empty());
        let h0 = traj.records[0].hs2;
        assert!(traj.records.iter().all(|r| r.hs2 <= h0));
        *energy_identity_residual(&traj.records).last().unwrap()
    };
    let (a, b) = (residual(0.02), residual(0.01));
    assert!(a / b > 3.5, "{a} {b}");
}

#[test]
fn wraparound_estimate_grows_with_spread() {
    let g = Grid::new(1, 256, 40.0).unwrap();
    let narrow = spread_radius_sq(&gaussian(&g));
    // u^2 = e^{-x^2/2} has variance 1
    assert!((narrow - 1.0).abs() < 1e-10);
    let wide = spread_radius_sq(&Field::from_fn(&g, |x| (-x[0] * x[0] / 100.0).exp()));
    assert!(wraparound_estimate(&g, wide) > wraparound_estimate(&g, narrow));
    assert_eq!(wraparound_estimate(&g, 0.0), 0.0);
}

fn small_config(id: &str, coefficient: f64) -> DecayConfig {
    let m = ModelParams::new(1, 0.25, 0.75, 2)
        .unwrap()
        .with_flux_coefficient(coefficient)
        .unwrap();
    let mut solver = SolverConfig::new(m, 0.1, 40.0);
    solver.record_every = 5;
    DecayConfig::new(
        id,
        GridSpec { dim: 1, points: 1024, extent: 512.0 },
        solver,
        InitialData::Gaussian { amplitude: 1.0, width: 1.0 },
    )
}

#[test]
fn small_linear_experiment() {
    let mut cfg = small_config("linear-small", 0.0);
    cfg.t_min = 3.0;
    let (report, series) = run_decay_experiment(&cfg).unwrap();
    assert!(report.complete);
    assert_eq!(report.parameters.mu, 4.0);
    assert!(report.exploratory);
    assert!(report.hypotheses.iter().any(|h| h.contains("n>2")));
    let l2 = report.fit("L2").unwrap();
    assert!((l2.fitted.unwrap() + 0.25).abs() < 0.03, "{l2:?}");
    assert!(report.l1.sup_ratio <= 1.0 + 1e-9);
    assert_eq!(series.times.len(), 81);
    let mut csv = Vec::new();
    series.write_csv(&mut csv).unwrap();
    let header = String::from_utf8(csv).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,L1,L2,Lambda1,Hs2,low_Lambda0,low_Lambda1,wrap");
    let json = serde_json::to_string_pretty(&report).unwrap();
    let (again, _) = run_decay_experiment(&cfg).unwrap();
    assert_eq!(json, serde_json::to_string_pretty(&again).unwrap());
}

#[test]
fn blow_up_gives_incomplete_report() {
    let mut cfg = small_config("blow-up", 1.0);
    cfg.initial = InitialData::Gaussian { amplitude: 1e90, width: 1.0 };
    cfg.solver.model.theta = 3;
    let (report, _) = run_decay_experiment(&cfg).unwrap();
    assert!(!report.complete);
    assert!(!report.passed);
    assert!(report.failure.unwrap().contains("blow-up"));
}

#[test]
fn small_box_reports_wraparound() {
    let mut cfg = small_config("cramped", 0.0);
    cfg.grid = GridSpec { dim: 1, points: 128, extent: 24.0 };
    let (report, _) = run_decay_experiment(&cfg).unwrap();
    let tw = report.window.t_wrap.expect("wraparound detected");
    assert!(report.window.t_max < tw);
    assert!(report.warnings.iter().any(|w| w.contains("wraparound")));
}

#[test]
fn default_mu_rule() {
    assert_eq!(TimeFrequencyCutoff::default_mu(3, 1.0), 6.0);
}
