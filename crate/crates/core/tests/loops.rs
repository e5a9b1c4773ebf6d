mod common;

use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use dobstab::analysis::eigen::{multiset_distance, spectrum};
use dobstab::analysis::spectral_radius;
use dobstab::loops::{
    build_inner_loop, build_modal_outer_loop, build_outer_loop, inner_tf, jordan_decompose, open_loop_tf,
    outer_spectrum_factored,
};
use dobstab::plant::ContinuousPlant;
use dobstab::{DiscretePlant, FeedbackGains, ObserverConfig};

use common::{char_poly, cubic_roots, match3, real, resolvent};

const J: f64 = 0.1;
const T: f64 = 1e-3;

fn setup(alpha: f64, g: f64) -> (DiscretePlant, ObserverConfig) {
    let plant = ContinuousPlant::rigid(J).unwrap().discretize(T).unwrap();
    let nominal = ContinuousPlant::rigid(alpha * J).unwrap().discretize(T).unwrap();
    (plant, ObserverConfig::from_normalized_gain(nominal, g).unwrap())
}

fn section_gains() -> FeedbackGains {
    FeedbackGains::new(500.0, 25.0).unwrap()
}

#[test]
fn inner_characteristic_polynomial_matches_closed_form() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..100 {
        let alpha = rng.random_range(0.2..3.0);
        let g = rng.random_range(0.01..2.0) / alpha;
        let (plant, cfg) = setup(alpha, g);
        let a = build_inner_loop(&plant, &cfg).unwrap().a;
        let mu = 1.0 - alpha * g;
        // (z - 1)^2 (z - mu)
        let (c2, c1, c0) = char_poly(&a);
        assert!((c2 - (-2.0 - mu)).abs() < 1e-12);
        assert!((c1 - (1.0 + 2.0 * mu)).abs() < 1e-12);
        assert!((c0 + mu).abs() < 1e-12);
        let eig = spectrum(&a).unwrap();
        assert!(multiset_distance(&eig, &real(&[1.0, 1.0, mu])) < 1e-9);
    }
}

#[test]
fn outer_spectrum_matches_cubic_formula() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..100 {
        let alpha = rng.random_range(0.2..3.0);
        let g = rng.random_range(0.05..1.95) / alpha;
        let gains = FeedbackGains::new(rng.random_range(1.0..3000.0), rng.random_range(0.5..100.0)).unwrap();
        let (plant, cfg) = setup(alpha, g);
        let a = build_outer_loop(&plant, &cfg, &gains).unwrap().a;
        let (c2, c1, c0) = char_poly(&a);
        let oracle = cubic_roots(c2, c1, c0);
        let eig = spectrum(&a).unwrap();
        assert!(match3(&eig, &oracle) < 1e-7, "{eig:?} vs {oracle:?}");
    }
}

#[test]
fn section_parameters_give_a_stable_outer_loop() {
    let plant = ContinuousPlant::rigid(J).unwrap().discretize(T).unwrap();
    let cfg = ObserverConfig::new(plant, 50.0).unwrap();
    let outer = build_outer_loop(&plant, &cfg, &section_gains()).unwrap();
    assert!(spectral_radius(&spectrum(&outer.a).unwrap()) < 1.0);
    assert_eq!(outer.c, Vector3::new(500.0, 25.0, 0.0));

    let inner = build_inner_loop(&plant, &cfg).unwrap();
    let jordan = jordan_decompose(&inner).unwrap();
    let f = outer_spectrum_factored(&outer, &jordan).unwrap();
    assert!(multiset_distance(&f.all(), &spectrum(&outer.a).unwrap()) < 1e-9);
    assert!((f.observer - (1.0 - cfg.normalized_gain())).abs() < 1e-12);
}

#[test]
fn inner_tf_agrees_with_resolvent_at_random_points() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..10 {
        let alpha = rng.random_range(0.3..2.5);
        let g = rng.random_range(0.1..1.9) / alpha;
        let (plant, cfg) = setup(alpha, g);
        let sys = build_inner_loop(&plant, &cfg).unwrap();
        let tf = inner_tf(&plant, &cfg).unwrap();
        for _ in 0..20 {
            let z = Complex64::from_polar(rng.random_range(0.2..2.0), rng.random_range(-3.1..3.1));
            let direct = resolvent(&sys.a, &sys.b, &sys.c, z);
            assert!((tf.reduced.eval(z) - direct).norm() < 1e-9 * direct.norm().max(1.0));
        }
        let eig = spectrum(&sys.a).unwrap();
        for p in tf.reduced.poles() {
            assert!(eig.iter().any(|l| (l - p).norm() < 1e-9));
        }
    }
}

#[test]
fn inner_tf_spec_example() {
    let (plant, cfg) = setup(1.2, 0.5);
    let tf = inner_tf(&plant, &cfg).unwrap().reduced;
    assert!(multiset_distance(tf.poles(), &real(&[1.0, 0.4])) < 1e-12);
    assert!(multiset_distance(tf.zeros(), &real(&[0.5])) < 1e-12);
    assert!((tf.gain() - 0.01).abs() < 1e-14);
}

#[test]
fn open_loop_is_state_feedback_loop_gain() {
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..10 {
        let alpha = rng.random_range(0.3..2.5);
        let g = rng.random_range(0.1..1.9) / alpha;
        let gains = FeedbackGains::new(rng.random_range(1.0..2000.0), rng.random_range(0.5..100.0)).unwrap();
        let (plant, cfg) = setup(alpha, g);
        let inner = build_inner_loop(&plant, &cfg).unwrap();
        let tf = open_loop_tf(&plant, &cfg, &gains).unwrap();
        for _ in 0..20 {
            let z = Complex64::from_polar(rng.random_range(0.2..2.0), rng.random_range(-3.1..3.1));
            let direct = resolvent(&inner.a, &inner.b, &gains.vector(), z);
            assert!((tf.open.eval(z) - direct).norm() < 1e-9 * direct.norm().max(1.0));
        }
        let outer = spectrum(&build_outer_loop(&plant, &cfg, &gains).unwrap().a).unwrap();
        assert!(multiset_distance(tf.closed.poles(), &outer) < 1e-9);
    }
}

#[test]
fn matched_inertia_reduces_to_pd_on_double_integrator() {
    let (plant, cfg) = setup(1.0, 0.7);
    let tf = open_loop_tf(&plant, &cfg, &section_gains()).unwrap();
    assert_eq!(tf.open_reduced.order(), 2);
    assert!(multiset_distance(tf.open_reduced.poles(), &real(&[1.0, 1.0])) < 1e-12);
    let (zero, pole) = tf.compensator();
    assert_eq!(zero, pole);
}

#[test]
fn heavier_nominal_gives_phase_lead() {
    for alpha in [1.1, 1.5, 2.0] {
        let (plant, cfg) = setup(alpha, 0.6 / alpha);
        let (zero, pole) = open_loop_tf(&plant, &cfg, &section_gains()).unwrap().compensator();
        assert!((1.0 - zero).abs() < (1.0 - pole).abs());
    }
}

#[test]
fn jordan_structure_over_random_grid() {
    let mut rng = StdRng::seed_from_u64(15);
    for _ in 0..200 {
        let alpha = rng.random_range(0.2..3.0);
        let g = rng.random_range(0.01..2.0) / alpha;
        let (plant, cfg) = setup(alpha, g);
        let inner = build_inner_loop(&plant, &cfg).unwrap();
        let j = jordan_decompose(&inner).unwrap();
        assert!(j.residual() < 1e-8, "residual {}", j.residual());
        assert!((j.block_matrix[(2, 2)] - (1.0 - alpha * g)).abs() < 1e-8);
        assert!(j.condition_number.is_finite());
        let sim = spectrum(&j.block_matrix).unwrap();
        assert!(multiset_distance(&sim, &spectrum(&inner.a).unwrap()) < 1e-9);
    }
}

#[test]
fn jordan_example_block_entry() {
    let (plant, cfg) = setup(1.5, 0.8);
    let j = jordan_decompose(&build_inner_loop(&plant, &cfg).unwrap()).unwrap();
    assert!((j.block_matrix[(2, 2)] + 0.2).abs() < 1e-9);
}

#[test]
fn near_degenerate_products_are_rejected() {
    let (plant, cfg) = setup(1.0, 5e-7);
    assert!(jordan_decompose(&build_inner_loop(&plant, &cfg).unwrap()).is_err());
}

#[test]
fn unforced_jordan_pair_stays_at_one() {
    let (plant, cfg) = setup(0.8, 1.1);
    let inner = build_inner_loop(&plant, &cfg).unwrap();
    let jordan = jordan_decompose(&inner).unwrap();
    let outer = build_modal_outer_loop(&inner, &jordan, &FeedbackGains::zero());
    let f = outer_spectrum_factored(&outer, &jordan).unwrap();
    assert!(multiset_distance(&f.pair, &real(&[1.0, 1.0])) < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn observer_eigenvalue_ignores_feedback_gains(
        alpha in 0.25f64..2.5,
        product in 0.05f64..1.95,
        kp in 0.0f64..1e4,
        kv in 0.0f64..1e4,
    ) {
        let g = product / alpha;
        let (plant, cfg) = setup(alpha, g);
        let inner = build_inner_loop(&plant, &cfg).unwrap();
        let jordan = jordan_decompose(&inner).unwrap();
        let outer = build_modal_outer_loop(&inner, &jordan, &FeedbackGains::new(kp, kv).unwrap());
        let eig = spectrum(&outer.a).unwrap();
        let mu = 1.0 - product;
        prop_assert!(eig.iter().any(|l| (l - mu).norm() < 1e-9), "{eig:?} lacks {mu}");
        let f = outer_spectrum_factored(&outer, &jordan).unwrap();
        prop_assert!(multiset_distance(&f.all(), &eig) < 1e-9);
    }

    #[test]
    fn measured_feedback_is_a_rank_one_perturbation(
        alpha in 0.25f64..2.5,
        product in 0.05f64..1.95,
        kp in 0.0f64..1e4,
        kv in 0.0f64..1e4,
    ) {
        let (plant, cfg) = setup(alpha, product / alpha);
        let gains = FeedbackGains::new(kp, kv).unwrap();
        let inner = build_inner_loop(&plant, &cfg).unwrap();
        let outer = build_outer_loop(&plant, &cfg, &gains).unwrap();
        let diff = inner.a - outer.a;
        prop_assert!((diff - inner.b * gains.vector().transpose()).abs().max() <= 1e-12 * (1.0 + kp + kv));
        prop_assert_eq!(diff.column(2).abs().max(), 0.0);
        prop_assert_eq!(outer.b, inner.b);
    }
}
