//! Test-only oracles that share no code with the library.
#![allow(dead_code)]

use nalgebra::{Matrix2, Matrix3, Vector2};
use num_complex::Complex64;

/// Zero-order-hold matrices of `x' = A x + B u` by matrix exponential and
/// composite Simpson quadrature of `int_0^T e^{A s} ds B` with `n` (even)
/// subintervals.
pub fn simpson_zoh(inertia: f64, friction: f64, t: f64, n: usize) -> (Matrix2<f64>, Vector2<f64>) {
    assert!(n.is_multiple_of(2));
    let a = Matrix2::new(0.0, 1.0, 0.0, -friction / inertia);
    let b = Vector2::new(0.0, 1.0 / inertia);
    let h = t / n as f64;
    let mut acc = Vector2::zeros();
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += (a * (i as f64 * h)).exp() * b * w;
    }
    ((a * t).exp(), acc * (h / 3.0))
}

/// Real roots / complex pairs of `z^3 + c2 z^2 + c1 z + c0` by the
/// trigonometric or Cardano formula.
pub fn cubic_roots(c2: f64, c1: f64, c0: f64) -> Vec<Complex64> {
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc <= 0.0 && p < 0.0 {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| Complex64::new(r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift, 0.0))
            .collect::<Vec<_>>()
    } else {
        let s = disc.max(0.0).sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        let re = -(u + v) / 2.0 - shift;
        let im = (u - v) * 3f64.sqrt() / 2.0;
        vec![
            Complex64::new(u + v - shift, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    };
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// Characteristic polynomial `z^3 + c2 z^2 + c1 z + c0` of a 3x3 matrix.
pub fn char_poly(m: &Matrix3<f64>) -> (f64, f64, f64) {
    let tr = m.trace();
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    (-tr, minors, -m.determinant())
}

/// Largest distance under the best pairing of two 3-element multisets.
pub fn match3(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), 3);
    assert_eq!(b.len(), 3);
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    perms
        .iter()
        .map(|p| (0..3).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

pub fn real(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// `c^T (zI - A)^{-1} b` by direct complex solve.
pub fn resolvent(a: &Matrix3<f64>, b: &nalgebra::Vector3<f64>, c: &nalgebra::Vector3<f64>, z: Complex64) -> Complex64 {
    let m = Matrix3::<Complex64>::identity() * z - a.map(|x| Complex64::new(x, 0.0));
    let x = m.lu().solve(&b.map(|x| Complex64::new(x, 0.0))).expect("singular resolvent");
    c.map(|x| Complex64::new(x, 0.0)).dot(&x)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
