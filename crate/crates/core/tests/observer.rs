mod common;

use nalgebra::{Matrix2, Vector2};
use proptest::prelude::*;

use dobstab::analysis::Stability;
use dobstab::observer::{disturbance_estimate, gain_upper_bound, observer_step};
use dobstab::plant::ContinuousPlant;
use dobstab::sim::{simulate_dob, simulate_observer, DisturbanceProfile, ReferenceProfile};
use dobstab::{FeedbackGains, ObserverConfig, ObserverState};

use common::simpson_zoh;

const T: f64 = 1e-3;

fn rigid() -> ContinuousPlant {
    ContinuousPlant::rigid(0.1).unwrap()
}

fn config(g: f64) -> ObserverConfig {
    ObserverConfig::new(rigid().discretize(T).unwrap(), g).unwrap()
}

fn e_z(g: f64, dist: DisturbanceProfile, steps: usize) -> Vec<f64> {
    simulate_observer(&rigid(), &config(g), &dist, |t| (3.0 * t).sin(), steps)
        .unwrap()
        .records
        .iter()
        .map(|r| r.e_z.unwrap())
        .collect()
}

#[test]
fn bound_matches_quadrature_disturbance_vector() {
    let (_, d) = simpson_zoh(0.1, 0.0, T, 10_000);
    let bound = gain_upper_bound(&rigid().discretize(T).unwrap()).unwrap();
    assert!((bound - 2.0 / d.lp_norm(1)).abs() < 1e-10 * bound);
}

#[test]
fn constant_disturbance_error_decays_geometrically() {
    for g in [20.0, 50.0, 150.0] {
        let f = config(g).contraction_factor();
        let e: Vec<f64> = simulate_dob(
            &rigid(),
            &config(g),
            &FeedbackGains::new(500.0, 25.0).unwrap(),
            &DisturbanceProfile::Constant { value: 5.0 },
            &ReferenceProfile::regulation(),
            1001,
        )
        .unwrap()
        .records
        .iter()
        .map(|r| r.e_z.unwrap())
        .collect();
        for w in e.windows(2) {
            assert!((w[1] - f * w[0]).abs() < 1e-12, "g {g}: {} vs {}", w[1], f * w[0]);
        }
    }
}

#[test]
fn error_grows_monotonically_past_the_bound() {
    let bound = gain_upper_bound(&rigid().discretize(T).unwrap()).unwrap();
    let e = e_z(1.05 * bound, DisturbanceProfile::Constant { value: 1.0 }, 500);
    assert!(e.windows(2).all(|w| w[1].abs() > w[0].abs()));
    assert_eq!(config(1.05 * bound).stability(), Stability::Unstable);
}

fn ramp(slope: f64) -> DisturbanceProfile {
    DisturbanceProfile::Held {
        period: T,
        profile: Box::new(DisturbanceProfile::Ramp { slope, start: 0.0 }),
    }
}

#[test]
fn ramp_error_settles_at_fixed_point() {
    let slope = 4.0;
    let delta = slope * T;
    // non-negative factor: |delta| / (1 - |f|)
    let cfg = config(50.0);
    let e = *e_z(50.0, ramp(slope), 3000).last().unwrap();
    let predicted = delta / (1.0 - cfg.contraction_factor().abs());
    assert!(((e.abs() - predicted) / predicted).abs() < 0.05);
    assert!((e - cfg.ramp_error_limit(delta)).abs() < 1e-9);

    // negative factor: the fixed point is delta / (1 - f)
    let cfg = config(150.0);
    assert!(cfg.contraction_factor() < 0.0);
    let e = *e_z(150.0, ramp(slope), 3000).last().unwrap();
    assert!((e - cfg.ramp_error_limit(delta)).abs() < 1e-9 * delta.abs().max(1.0));
}

#[test]
fn estimate_converges_to_constant_disturbance_in_closed_loop() {
    let tr = simulate_dob(
        &rigid(),
        &config(50.0),
        &FeedbackGains::new(500.0, 25.0).unwrap(),
        &DisturbanceProfile::Constant { value: 5.0 },
        &ReferenceProfile::regulation(),
        3000,
    )
    .unwrap();
    assert!((tr.records.last().unwrap().tau_hat.unwrap() - 5.0).abs() < 1e-6);
}

#[test]
fn spec_example_single_step() {
    let cfg = config(100.0);
    let next = observer_step(&ObserverState { z_hat: 1.0 }, &Vector2::zeros(), 0.0, &cfg);
    assert!((next.z_hat + 0.0005).abs() < 1e-15);
    let s = ObserverState { z_hat: 5.0 };
    assert_eq!(disturbance_estimate(&s, &Vector2::new(1.0, 1.0), &config(2.0)), 1.0);
}

proptest! {
    #[test]
    fn step_and_estimate_follow_the_recursion(
        z in -100.0f64..100.0,
        q in -10.0f64..10.0,
        qd in -10.0f64..10.0,
        u in -50.0f64..50.0,
        g in 1.0f64..190.0,
        j in 0.05f64..1.0,
        b in 0.0f64..2.0,
    ) {
        let nominal = ContinuousPlant::new(j, b).unwrap().discretize(T).unwrap();
        let cfg = ObserverConfig::new(nominal, g).unwrap();
        let x = Vector2::new(q, qd);
        let l = Vector2::new(g, g);
        let next = ObserverState { z_hat: z }.step(&x, u, &cfg);
        let coupling = (nominal.a + nominal.d * l.transpose() - Matrix2::identity()).transpose() * l;
        let expected = (1.0 - l.dot(&nominal.d)) * z + coupling.dot(&x) + l.dot(&nominal.b) * u;
        let scale = 1.0 + expected.abs() + (coupling.dot(&x)).abs() + z.abs();
        prop_assert!((next.z_hat - expected).abs() < 1e-12 * scale);
        let x2 = Vector2::new(qd, q);
        prop_assert!((next.estimate(&x2, &cfg) - (expected - l.dot(&x2))).abs() < 1e-12 * scale);
    }
}
