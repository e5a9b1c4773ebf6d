use nalgebra::{DMatrix, SMatrix};
use nalgebra::linalg::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Computed eigenvalues closer than this (relative to the spectral scale) are
/// treated as one numerically multiple eigenvalue and replaced by their mean.
/// A defective eigenvalue is split by O(sqrt(eps)) by any backward-stable
/// solver, while the cluster mean stays accurate to O(eps).
pub const CLUSTER_RTOL: f64 = 1e-6;

const MAX_SCHUR_ITERATIONS: usize = 10_000;

/// Eigenvalues with multiplicity, ordered by real part then imaginary part.
pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !matrix.is_square() {
        return Err(Error::InvalidParameter {
            name: "matrix rows",
            requirement: "equal to the column count",
            value: matrix.nrows() as f64,
        });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalues input"));
    }
    if matrix.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(matrix.clone(), f64::EPSILON, MAX_SCHUR_ITERATIONS)
        .ok_or(Error::NoConvergence)?;
    let raw: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    let mut merged = merge_clusters(&raw, CLUSTER_RTOL);
    sort_spectrum(&mut merged);
    Ok(merged)
}

/// Fixed-size convenience wrapper around [`eigenvalues`].
pub fn spectrum<const N: usize>(matrix: &SMatrix<f64, N, N>) -> Result<Vec<Complex64>> {
    eigenvalues(&DMatrix::from_column_slice(N, N, matrix.as_slice()))
}

pub fn spectral_radius(values: &[Complex64]) -> f64 {
    values.iter().map(|l| l.norm()).fold(0.0, f64::max)
}

pub fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Replaces every group of values that are pairwise chained within
/// `rtol * max(1, max |v|)` by the group mean.
pub fn merge_clusters(values: &[Complex64], rtol: f64) -> Vec<Complex64> {
    let n = values.len();
    let tol = rtol * spectral_radius(values).max(1.0);
    let mut group: Vec<usize> = (0..n).collect();
    fn root(group: &mut [usize], mut i: usize) -> usize {
        while group[i] != i {
            group[i] = group[group[i]];
            i = group[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (ri, rj) = (root(&mut group, i), root(&mut group, j));
                if ri != rj {
                    group[rj] = ri;
                }
            }
        }
    }
    let mut out = values.to_vec();
    for (i, slot) in out.iter_mut().enumerate() {
        let r = root(&mut group, i);
        let members: Vec<usize> = (0..n).filter(|&j| root(&mut group, j) == r).collect();
        if members.len() > 1 {
            *slot = members.iter().map(|&j| values[j]).sum::<Complex64>() / members.len() as f64;
        }
    }
    out
}

/// Largest distance between two multisets under the best one-to-one pairing.
/// Exhaustive for up to 8 values.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    if n > 8 {
        let (mut x, mut y) = (a.to_vec(), b.to_vec());
        sort_spectrum(&mut x);
        sort_spectrum(&mut y);
        return x.iter().zip(&y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    }
    let mut best = f64::INFINITY;
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        let d = p.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).norm()).fold(0.0, f64::max);
        best = best.min(d);
    });
    best
}

pub(crate) fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, visit);
        perm.swap(k, i);
    }
}
