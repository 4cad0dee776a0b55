//! Small dense linear-algebra helpers shared by the rest of the crate.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Eigenvalues in `[-PSD_CLIP, 0)` are treated as zero; anything lower is a failure.
pub const PSD_CLIP: f64 = 1e-10;

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &CMat) -> Mat {
    m.map(|z| z.re)
}

pub fn max_imag(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `(M + M^*) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// `(M + M^T) / 2`.
pub fn symmetric_part(m: &Mat) -> Mat {
    (m + m.transpose()).scale(0.5)
}

/// Frobenius distance of `a` from `b`, relative to `max(|b|, floor)`.
pub fn rel_diff(a: &Mat, b: &Mat, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

pub fn rel_diff_c(a: &CMat, b: &CMat, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

pub fn min_symmetric_eigenvalue(m: &Mat) -> f64 {
    symmetric_part(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn min_hermitian_eigenvalue(m: &CMat) -> f64 {
    hermitian_part(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Checks that a Hermitian matrix is PSD up to [`PSD_CLIP`] (scaled by `scale`).
pub fn check_psd_hermitian(m: &CMat, scale: f64) -> Result<()> {
    let min_eig = min_hermitian_eigenvalue(m);
    if min_eig < -PSD_CLIP * scale.max(1.0) {
        return Err(Error::NotPSD { min_eig });
    }
    Ok(())
}

/// Symmetrizes and clips small negative eigenvalues of a symmetric PSD matrix.
///
/// Fails when an eigenvalue lies below `-PSD_CLIP * max(1, scale)`.
pub fn clip_psd(m: &Mat, scale: f64) -> Result<Mat> {
    let eig = symmetric_part(m).symmetric_eigen();
    let floor = -PSD_CLIP * scale.max(1.0);
    if eig.eigenvalues.min() >= 0.0 {
        return Ok(symmetric_part(m));
    }
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < floor {
            return Err(Error::NotPSD { min_eig: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let q = &eig.eigenvectors;
    Ok(symmetric_part(&(q * Mat::from_diagonal(&vals) * q.transpose())))
}

/// Returns `L` with `L L^T = M` for a symmetric PSD matrix (eigenvalue square root).
pub fn psd_factor(m: &Mat) -> Mat {
    let eig = symmetric_part(m).symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Mat::from_diagonal(&roots)
}

/// Determinant of the matrix with row `skip_r` and column `skip_c` deleted.
fn minor(m: &CMat, skip_r: usize, skip_c: usize) -> Complex64 {
    let n = m.nrows();
    if n == 1 {
        return Complex64::new(1.0, 0.0);
    }
    let sub = CMat::from_fn(n - 1, n - 1, |i, j| {
        let r = if i < skip_r { i } else { i + 1 };
        let c = if j < skip_c { j } else { j + 1 };
        m[(r, c)]
    });
    sub.determinant()
}

/// Classical adjugate (transpose of the cofactor matrix); valid for singular input.
pub fn adjugate(m: &CMat) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| {
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        minor(m, j, i) * sign
    })
}

/// Greedy nearest-neighbour matching of two multisets of complex numbers.
///
/// Returns the largest matched distance. Both slices must have equal length.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = None;
        for (j, y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let (j, d) = best.expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}
