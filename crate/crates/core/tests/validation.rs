use mimic_core::ensemble::SimConfig;
use mimic_core::family::TestFunctionFamily;
use mimic_core::mimic::{simulate_mimic, MimicSource};
use mimic_core::scenario::Scenario;
use mimic_core::simulate::simulate_ensemble;
use mimic_core::updating::UpdatingKind;
use mimic_core::validator::{
    compare_marginals, compensator_probe, equal_windows, martingale_residuals, particle_compensator, ResidualProcess, Tolerances,
};
use mimic_core::{TimeGrid, Truncation};

fn grid() -> TimeGrid {
    TimeGrid::with_horizon(1.0 / 256.0, 1.0).unwrap()
}

fn constant(b: f64, c: f64) -> Scenario {
    Scenario::constant(vec![b], vec![c], vec![], UpdatingKind::ProcessItself, vec![0.0], Truncation::default()).unwrap()
}

#[test]
fn self_comparison_is_exact() {
    let ens = simulate_ensemble(&Scenario::sup_dependent_vol(), &SimConfig::new(500, grid(), 1).unwrap()).unwrap();
    let r = compare_marginals(&ens, &ens, &[0.5, 1.0], &Tolerances::default()).unwrap();
    assert!(r.passed());
    assert!(r.rows.iter().all(|row| row.ks == 0.0 && row.w1 == 0.0));
    let family = TestFunctionFamily::standard(1, Truncation::default());
    let rows = compensator_probe(&ens, &ens, &family, &[1.0]).unwrap();
    assert!(rows.iter().all(|r| r.diff == 0.0 && r.within_3se));
}

#[test]
fn independent_brownian_draws_agree() {
    let s = constant(0.0, 1.0);
    let a = simulate_ensemble(&s, &SimConfig::new(100_000, grid(), 1).unwrap().without_characteristics()).unwrap();
    let b = simulate_ensemble(&s, &SimConfig::new(100_000, grid(), 2).unwrap().without_characteristics()).unwrap();
    let tol = Tolerances { ks: Some(0.015), ..Tolerances::default() };
    assert!(compare_marginals(&a, &b, &[0.25, 0.5, 1.0], &tol).unwrap().passed());
}

#[test]
fn different_laws_fail() {
    let a = simulate_ensemble(&constant(0.0, 1.0), &SimConfig::new(5000, grid(), 1).unwrap()).unwrap();
    let b =
        simulate_ensemble(&Scenario::mixed_poisson(0.5, 1.0, 4.0).unwrap(), &SimConfig::new(5000, grid(), 1).unwrap()).unwrap();
    assert!(!compare_marginals(&a, &b, &[1.0], &Tolerances::default()).unwrap().passed());
}

#[test]
fn drift_only_residual_vanishes() {
    let ens = simulate_ensemble(&constant(0.75, 0.0), &SimConfig::new(50, grid(), 1).unwrap()).unwrap();
    let family = TestFunctionFamily::standard(1, Truncation::default());
    let r = martingale_residuals(&ens, &family, &equal_windows(ens.grid(), 20)).unwrap();
    for row in r.rows.iter().filter(|r| r.process == ResidualProcess::Drift) {
        assert!(row.mean.abs() < 1e-12, "{row:?}");
    }
}

#[test]
fn brownian_drift_residual_z_scores() {
    let ens = simulate_ensemble(&constant(0.0, 1.0), &SimConfig::new(20_000, grid(), 3).unwrap()).unwrap();
    let family = TestFunctionFamily::standard(1, Truncation::default());
    let r = martingale_residuals(&ens, &family, &equal_windows(ens.grid(), 20)).unwrap();
    assert_eq!(r.rows.iter().filter(|r| r.process == ResidualProcess::Drift).count(), 20);
    assert!(r.max_abs_z() <= 4.0, "{}", r.max_abs_z());
}

#[test]
fn mixed_poisson_compensator_expectation() {
    let s = Scenario::mixed_poisson(0.5, 1.0, 4.0).unwrap();
    let a = simulate_ensemble(&s, &SimConfig::new(20_000, grid(), 5).unwrap()).unwrap();
    let b = simulate_mimic(&MimicSource::oracle(&s).unwrap(), &SimConfig::new(20_000, grid(), 5).unwrap()).unwrap();
    let family = TestFunctionFamily::standard(1, Truncation::default());
    let rows = compensator_probe(&a, &b, &family, &[1.0]).unwrap();
    let sq = rows.iter().find(|r| r.function == "min1_sq").unwrap();
    // E ∫₀¹ Λ dt = 2.5 on both sides
    assert!(sq.within_3se);
    assert!((sq.mean_a - 2.5).abs() <= 3.0 * sq.se_a.max(1e-3));
    assert!((sq.mean_b - 2.5).abs() <= 3.0 * sq.se_b.max(1e-3));
    // ramps with a ≤ 1 vanish on unit jumps
    for r in rows.iter().filter(|r| ["ramp_0.25", "ramp_0.5", "ramp_1"].contains(&r.function.as_str())) {
        assert_eq!((r.mean_a, r.mean_b), (0.0, 0.0), "{}", r.function);
    }
}

#[test]
fn particle_compensator_is_monotone() {
    let s = Scenario::mixed_poisson(0.5, 1.0, 4.0).unwrap();
    let ens = simulate_ensemble(&s, &SimConfig::new(3, grid(), 5).unwrap()).unwrap();
    let acc = particle_compensator(&ens, 0).unwrap();
    assert!(acc.is_monotone());
    let total = acc.total_mass(256);
    assert!(total == 1.0 || total == 4.0, "{total}");
}
