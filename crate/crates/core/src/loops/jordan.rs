use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AugmentedSystem;
use crate::analysis::eigen::spectrum;
use crate::error::{Error, Result};

/// Below this `|alpha g|` the observer eigenvalue is too close to the Jordan
/// block at 1 to separate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

/// `M A M^-1 = [[l, 1, 0], [0, l, 0], [0, 0, mu]]` for the inner loop, with
/// `l` the defective eigenvalue (1 without friction) and `mu = 1 - alpha g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JordanForm {
    pub transform: Matrix3<f64>,
    pub inverse: Matrix3<f64>,
    pub block_matrix: Matrix3<f64>,
    pub defective_eigenvalue: f64,
    pub observer_eigenvalue: f64,
    /// 2-norm condition number of `M`.
    pub condition_number: f64,
}

impl JordanForm {
    pub fn ideal_block(&self) -> Matrix3<f64> {
        let l = self.defective_eigenvalue;
        Matrix3::new(l, 1.0, 0.0, 0.0, l, 0.0, 0.0, 0.0, self.observer_eigenvalue)
    }

    /// Largest entrywise deviation of `M A M^-1` from the Jordan structure.
    pub fn residual(&self) -> f64 {
        (self.block_matrix - self.ideal_block()).abs().max()
    }

    /// Projector onto the generalized eigenspace of the defective eigenvalue
    /// along the observer eigenvector: `M^-1 diag(1, 1, 0) M`.
    pub fn modal_projector(&self) -> Matrix3<f64> {
        self.inverse * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0)) * self.transform
    }
}

/// Null vector of a rank-2 3x3 matrix from the best-conditioned cross product
/// of its rows. Returns the vector and the ratio of its norm to the squared
/// matrix scale (a rank indicator).
fn null_vector(m: &Matrix3<f64>) -> (Vector3<f64>, f64) {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let mut best = Vector3::zeros();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = rows[i].cross(&rows[j]);
        if c.norm() > best.norm() {
            best = c;
        }
    }
    let scale = m.abs().max().max(f64::MIN_POSITIVE);
    let strength = best.norm() / (scale * scale);
    (best, strength)
}

pub fn jordan_decompose(inner: &AugmentedSystem) -> Result<JordanForm> {
    let a = inner.a;
    let values = spectrum(&a)?;
    if values.iter().any(|l| l.im != 0.0) {
        return Err(Error::NotDefective("complex spectrum"));
    }
    let re: Vec<f64> = values.iter().map(|l| l.re).collect();
    let scale = re.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let repeated = [(0, 1, 2), (1, 2, 0), (0, 2, 1)]
        .into_iter()
        .find(|&(i, j, _)| (re[i] - re[j]).abs() <= 1e-12 * scale);
    let Some((i, _, k)) = repeated else {
        return Err(Error::NotDefective("no repeated eigenvalue"));
    };
    let lambda = re[i];
    let mu = re[k];
    if (lambda - mu).abs() < DEGENERACY_THRESHOLD {
        return Err(Error::NearDefective { alpha_gain: lambda - mu });
    }

    let n = a - Matrix3::identity() * lambda;
    let (v1, strength) = null_vector(&n);
    if strength < 1e-10 {
        return Err(Error::NotDefective("repeated eigenvalue is semisimple"));
    }
    let (w_mu, _) = null_vector(&(a - Matrix3::identity() * mu).transpose());
    let (mut v_mu, _) = null_vector(&(a - Matrix3::identity() * mu));

    // s spans the complement of v1 inside the invariant plane w_mu^T x = 0;
    // N maps it onto a multiple of v1.
    let s = w_mu.cross(&v1);
    let c = v1.dot(&(n * s)) / v1.norm_squared();
    if c.abs() <= 1e-12 * (n * s).norm().max(f64::MIN_POSITIVE) || !c.is_finite() {
        return Err(Error::NotDefective("no generalized eigenvector"));
    }
    let mut v1 = v1;
    let mut v2 = s / c;

    // Unit position weight on v1, zero position weight on v2.
    let scale1 = if v1[0].abs() > 1e-12 * v1.norm() { 1.0 / v1[0] } else { 1.0 / v1.norm() };
    v1 *= scale1;
    v2 *= scale1;
    if v1[0] != 0.0 {
        v2 -= v1 * (v2[0] / v1[0]);
    }
    if v_mu[2].abs() > 1e-12 * v_mu.norm() {
        v_mu /= v_mu[2];
    } else {
        v_mu /= v_mu.norm();
    }

    let inverse = Matrix3::from_columns(&[v1, v2, v_mu]);
    let transform = inverse
        .try_inverse()
        .ok_or(Error::NotDefective("singular similarity transform"))?;
    let sv_m = transform.singular_values();
    let condition_number = sv_m.max() / sv_m.min();
    Ok(JordanForm {
        transform,
        inverse,
        block_matrix: transform * a * inverse,
        defective_eigenvalue: lambda,
        observer_eigenvalue: mu,
        condition_number,
    })
}

/// Outer-loop spectrum split as the observer eigenvalue plus the two
/// eigenvalues of the upper-left block of `M A_Do M^-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactoredSpectrum {
    pub observer: f64,
    pub pair: [Complex64; 2],
    /// Off-block coupling: the smaller of the largest (1,3)/(2,3) entry and
    /// the largest (3,1)/(3,2) entry. Zero when the transformed matrix is
    /// block triangular, which is enough for the spectrum to split.
    pub coupling: f64,
    pub transformed: Matrix3<f64>,
}

impl FactoredSpectrum {
    pub fn all(&self) -> Vec<Complex64> {
        vec![Complex64::new(self.observer, 0.0), self.pair[0], self.pair[1]]
    }
}

pub fn outer_spectrum_factored(outer: &AugmentedSystem, jordan: &JordanForm) -> Result<FactoredSpectrum> {
    let t = jordan.transform * outer.a * jordan.inverse;
    let column = t[(0, 2)].abs().max(t[(1, 2)].abs());
    let row = t[(2, 0)].abs().max(t[(2, 1)].abs());
    let coupling = column.min(row);
    if coupling > 1e-9 * t.abs().max().max(1.0) {
        return Err(Error::NotSeparable { coupling });
    }
    let block = Matrix2::new(t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)]);
    let pair = spectrum(&block)?;
    Ok(FactoredSpectrum {
        observer: t[(2, 2)],
        pair: [pair[0], pair[1]],
        coupling,
        transformed: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::eigen::multiset_distance;
    use crate::loops::{build_inner_loop, build_modal_outer_loop, build_outer_loop, FeedbackGains};
    use crate::observer::ObserverConfig;
    use crate::plant::ContinuousPlant;

    fn inner(alpha: f64, g: f64) -> AugmentedSystem {
        let plant = ContinuousPlant::rigid(0.1).unwrap().discretize(1e-3).unwrap();
        let nominal = ContinuousPlant::rigid(0.1 * alpha).unwrap().discretize(1e-3).unwrap();
        let cfg = ObserverConfig::from_normalized_gain(nominal, g).unwrap();
        build_inner_loop(&plant, &cfg).unwrap()
    }

    #[test]
    fn block_structure_example() {
        let j = jordan_decompose(&inner(1.5, 0.8)).unwrap();
        assert!((j.block_matrix[(2, 2)] - (-0.2)).abs() < 1e-9);
        assert!(j.residual() < 1e-8, "{}", j.residual());
        assert!(j.condition_number.is_finite() && j.condition_number >= 1.0);
        let sim = spectrum(&j.block_matrix).unwrap();
        let orig = spectrum(&inner(1.5, 0.8).a).unwrap();
        assert!(multiset_distance(&sim, &orig) < 1e-9);
    }

    #[test]
    fn near_degenerate_gain_is_rejected() {
        let err = jordan_decompose(&inner(1.0, 1e-8)).unwrap_err();
        assert!(matches!(err, Error::NearDefective { .. }), "{err:?}");
    }

    #[test]
    fn friction_breaks_the_jordan_block() {
        let plant = ContinuousPlant::new(0.1, 0.5).unwrap().discretize(1e-3).unwrap();
        let nominal = ContinuousPlant::new(0.1, 0.5).unwrap().discretize(1e-3).unwrap();
        let cfg = ObserverConfig::from_normalized_gain(nominal, 0.5).unwrap();
        let err = jordan_decompose(&build_inner_loop(&plant, &cfg).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotDefective(_)));
    }

    #[test]
    fn zero_gains_leave_the_jordan_pair_at_one() {
        let inn = inner(1.3, 0.4);
        let j = jordan_decompose(&inn).unwrap();
        let outer = build_modal_outer_loop(&inn, &j, &FeedbackGains::zero());
        let f = outer_spectrum_factored(&outer, &j).unwrap();
        assert!((f.pair[0] - 1.0).norm() < 1e-9 && (f.pair[1] - 1.0).norm() < 1e-9);
        assert!((f.observer - (1.0 - 1.3 * 0.4)).abs() < 1e-12);
    }

    #[test]
    fn measured_feedback_separates_only_for_matched_inertia() {
        let gains = FeedbackGains::new(500.0, 25.0).unwrap();
        let plant = ContinuousPlant::rigid(0.1).unwrap().discretize(1e-3).unwrap();
        for (alpha, separable) in [(1.0, true), (1.5, false)] {
            let nominal = ContinuousPlant::rigid(0.1 * alpha).unwrap().discretize(1e-3).unwrap();
            let cfg = ObserverConfig::from_normalized_gain(nominal, 0.5).unwrap();
            let j = jordan_decompose(&build_inner_loop(&plant, &cfg).unwrap()).unwrap();
            let outer = build_outer_loop(&plant, &cfg, &gains).unwrap();
            assert_eq!(outer_spectrum_factored(&outer, &j).is_ok(), separable, "alpha {alpha}");
        }
    }
}
