use mimic_core::oracle::{mixed_poisson_intensity, mixed_poisson_pmf, Oracle};
use mimic_core::scenario::Scenario;

/// Posterior mean of Λ given N_t = n by summing over the prior directly.
fn bayes_intensity(p: f64, l1: f64, l2: f64, t: f64, n: i32) -> f64 {
    let like = |l: f64| (-l * t).exp() * l.powi(n);
    let (w1, w2) = (p * like(l1), (1.0 - p) * like(l2));
    (w1 * l1 + w2 * l2) / (w1 + w2)
}

#[test]
fn mixed_poisson_intensity_matches_direct_bayes() {
    for &t in &[0.0, 0.25, 1.0, 3.0] {
        for n in 0..15 {
            let a = mixed_poisson_intensity(0.5, 1.0, 4.0, t, n as f64);
            let b = bayes_intensity(0.5, 1.0, 4.0, t, n);
            assert!((a - b).abs() < 1e-12 * b.max(1.0), "t={t} n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn intensity_at_time_zero_is_prior_mean() {
    // N_0 = 0, so only n = 0 is reachable at t = 0
    assert!((mixed_poisson_intensity(0.3, 1.0, 4.0, 0.0, 0.0) - (0.3 + 0.7 * 4.0)).abs() < 1e-14);
}

#[test]
fn intensity_after_no_jumps_by_time_one() {
    // (0.5·e⁻¹ + 0.5·4·e⁻⁴) / (0.5·e⁻¹ + 0.5·e⁻⁴)
    let v = mixed_poisson_intensity(0.5, 1.0, 4.0, 1.0, 0.0);
    let (e1, e4) = ((-1.0f64).exp(), (-4.0f64).exp());
    assert!((v - (0.5 * e1 + 2.0 * e4) / (0.5 * e1 + 0.5 * e4)).abs() < 1e-14);
    assert!((v - 1.142_277_62).abs() < 1e-8, "{v}");
}

#[test]
fn intensity_as_ratio_of_pmfs() {
    // λ̂(t, n) = (n + 1) P(N_t = n + 1) / (t P(N_t = n))
    let t = 0.7;
    for n in 0..10u32 {
        let ratio = (n + 1) as f64 * mixed_poisson_pmf(0.5, 1.0, 4.0, t, n + 1) / (t * mixed_poisson_pmf(0.5, 1.0, 4.0, t, n));
        assert!((ratio - mixed_poisson_intensity(0.5, 1.0, 4.0, t, n as f64)).abs() < 1e-12);
    }
}

/// E[S | X_t = x] for S = ±1 equally likely and X_t = S t + W_t, by numeric
/// integration of the joint density over thin slabs around x.
fn drift_posterior(t: f64, x: f64) -> f64 {
    let density = |s: f64, y: f64| (-(y - s * t).powi(2) / (2.0 * t)).exp();
    let (h, k) = (1e-4, 200);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..k {
        let y = x - h / 2.0 + h * (i as f64 + 0.5) / k as f64;
        let (p, m) = (density(1.0, y), density(-1.0, y));
        num += p - m;
        den += p + m;
    }
    num / den
}

#[test]
fn drift_oracle_is_tanh_of_state() {
    let o = Oracle::for_scenario(&Scenario::random_drift_sign()).unwrap();
    for &(t, x) in &[(1.0, 0.0), (1.0, 1.0), (1.0, -2.0), (0.5, 0.3), (0.25, -0.7)] {
        let b = o.evaluate_at(t, &[x]).unwrap().b[0];
        assert!((b - x.tanh()).abs() < 1e-14);
        assert!((b - drift_posterior(t, x)).abs() < 1e-6, "t={t} x={x}");
    }
    let b = o.evaluate_at(1.0, &[-2.0]).unwrap().b[0];
    assert!((b + 0.964_027_580_075_817).abs() < 1e-12);
}

#[test]
fn sup_vol_oracle_reads_the_running_max() {
    let o = Oracle::for_scenario(&Scenario::sup_dependent_vol()).unwrap();
    assert_eq!(o.evaluate_at(0.5, &[0.3, 0.9]).unwrap().c, vec![1.0]);
    assert_eq!(o.evaluate_at(0.5, &[0.2, 0.5]).unwrap().c, vec![1.0]);
    assert_eq!(o.evaluate_at(0.5, &[0.2, 1.5]).unwrap().c, vec![2.0]);
}

#[test]
fn pmf_is_the_two_component_mixture() {
    let t = 1.0f64;
    let pois = |l: f64, n: i32| (-l * t).exp() * (l * t).powi(n) / (1..=n).map(f64::from).product::<f64>();
    for n in 0..20 {
        let direct = 0.5 * pois(1.0, n) + 0.5 * pois(4.0, n);
        assert!((mixed_poisson_pmf(0.5, 1.0, 4.0, t, n as u32) - direct).abs() < 1e-14);
    }
}
