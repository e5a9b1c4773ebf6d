//! Rational transfer functions in `z` with real coefficients.
//!
//! Coefficients are stored in descending powers. Roots are kept alongside
//! so that transfer functions assembled from known factors keep their exact
//! poles and zeros; pole-zero cancellation operates on those roots.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::eigen::{eigenvalues, sort_spectrum};
use crate::error::{Error, Result};

/// Roots closer than this relative distance are cancelled.
pub const CANCELLATION_RTOL: f64 = 1e-9;

pub fn poly_eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Sum of two polynomials with descending coefficients (right-aligned).
pub fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (k, &x) in a.iter().rev().enumerate() {
        out[n - 1 - k] += x;
    }
    for (k, &x) in b.iter().rev().enumerate() {
        out[n - 1 - k] += x;
    }
    out
}

/// Monic polynomial with the given roots (complex roots must come in
/// conjugate pairs; the imaginary residue is dropped).
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, &x) in c.iter().enumerate() {
            next[i] += x;
            next[i + 1] -= x * r;
        }
        c = next;
    }
    c.into_iter().map(|x| x.re).collect()
}

fn strip_leading_zeros(coeffs: &[f64]) -> &[f64] {
    let first = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
    &coeffs[first..]
}

/// Roots of a real polynomial: companion-matrix eigenvalues followed by a
/// Newton polish of each simple root.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let c = strip_leading_zeros(coeffs);
    if c.is_empty() {
        return Err(Error::InvalidTransferFunction("zero polynomial"));
    }
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = c[0];
    let mut companion = DMatrix::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -c[j + 1] / lead;
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let mut roots = eigenvalues(&companion)?;
    let deriv: Vec<f64> = c[..n].iter().enumerate().map(|(i, &x)| x * (n - i) as f64).collect();
    let scale = c.iter().map(|x| x.abs()).fold(0.0, f64::max);
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = poly_eval(&deriv, *r);
            if d.norm() <= 1e-6 * scale {
                break;
            }
            let p = poly_eval(c, *r);
            let candidate = *r - p / d;
            if poly_eval(c, candidate).norm() < p.norm() {
                *r = candidate;
            } else {
                break;
            }
        }
    }
    // Real polynomials: snap roots whose imaginary part is pure noise.
    for r in roots.iter_mut() {
        if r.im.abs() <= 1e-14 * r.norm().max(1.0) {
            r.im = 0.0;
        }
    }
    sort_spectrum(&mut roots);
    Ok(roots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTf {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
}

/// A cancelled pole-zero pair, reported rather than silently dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cancellation {
    pub pole: Complex64,
    pub zero: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduced {
    pub tf: RationalTf,
    pub cancelled: Vec<Cancellation>,
}

impl RationalTf {
    pub fn from_coefficients(numerator: Vec<f64>, denominator: Vec<f64>) -> Result<Self> {
        let numerator = strip_leading_zeros(&numerator).to_vec();
        let denominator = strip_leading_zeros(&denominator).to_vec();
        if denominator.is_empty() {
            return Err(Error::InvalidTransferFunction("denominator is zero"));
        }
        if numerator.len() > denominator.len() {
            return Err(Error::InvalidTransferFunction("numerator degree exceeds denominator degree"));
        }
        if numerator.iter().chain(&denominator).any(|c| !c.is_finite()) {
            return Err(Error::InvalidTransferFunction("non-finite coefficient"));
        }
        let zeros = if numerator.is_empty() {
            Vec::new()
        } else {
            poly_roots(&numerator)?
        };
        let poles = poly_roots(&denominator)?;
        Ok(Self {
            numerator,
            denominator,
            zeros,
            poles,
        })
    }

    /// `gain * prod(z - zeros) / prod(z - poles)`.
    pub fn from_zpk(gain: f64, zeros: Vec<Complex64>, poles: Vec<Complex64>) -> Result<Self> {
        if zeros.len() > poles.len() {
            return Err(Error::InvalidTransferFunction("more zeros than poles"));
        }
        if !gain.is_finite() {
            return Err(Error::InvalidTransferFunction("non-finite gain"));
        }
        let mut numerator: Vec<f64> = poly_from_roots(&zeros).into_iter().map(|c| c * gain).collect();
        let mut zeros = zeros;
        if gain == 0.0 {
            numerator.clear();
            zeros.clear();
        }
        let mut poles = poles;
        sort_spectrum(&mut zeros);
        sort_spectrum(&mut poles);
        Ok(Self {
            numerator,
            denominator: poly_from_roots(&poles),
            zeros,
            poles,
        })
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    /// Ratio of leading coefficients.
    pub fn gain(&self) -> f64 {
        match self.numerator.first() {
            Some(n) => n / self.denominator[0],
            None => 0.0,
        }
    }

    pub fn order(&self) -> usize {
        self.poles.len()
    }

    /// Evaluated in factored form, which stays accurate next to clustered
    /// roots where the expanded polynomials cancel.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let num = self.zeros.iter().fold(Complex64::new(self.gain(), 0.0), |acc, r| acc * (z - r));
        self.poles.iter().fold(num, |acc, p| acc / (z - p))
    }

    /// Cancels every zero that lies within [`CANCELLATION_RTOL`] of a pole.
    pub fn reduce(&self) -> Result<Reduced> {
        self.reduce_with(CANCELLATION_RTOL)
    }

    pub fn reduce_with(&self, rtol: f64) -> Result<Reduced> {
        let mut poles = self.poles.clone();
        let mut zeros = Vec::new();
        let mut cancelled = Vec::new();
        for &zero in &self.zeros {
            let hit = poles
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (p - zero).norm()))
                .filter(|&(i, d)| d <= rtol * poles[i].norm().max(1.0))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match hit {
                Some((i, _)) => cancelled.push(Cancellation {
                    pole: poles.remove(i),
                    zero,
                }),
                None => zeros.push(zero),
            }
        }
        let tf = Self::from_zpk(self.gain(), zeros, poles)?;
        Ok(Reduced { tf, cancelled })
    }

    /// Closed loop `L / (1 + L)` under unity negative feedback, keeping any
    /// common factors of `L` (so its order equals that of `L`).
    pub fn unity_feedback(&self) -> Result<Self> {
        let den = poly_add(&self.denominator, &self.numerator);
        let poles = poly_roots(&den)?;
        Ok(Self {
            numerator: self.numerator.clone(),
            denominator: den,
            zeros: self.zeros.clone(),
            poles,
        })
    }
}
