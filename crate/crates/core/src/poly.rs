//! Dense univariate polynomials over the reals and the complex numbers.
//!
//! Coefficients are stored in ascending powers: `coeffs[i]` multiplies `z^i`.

use nalgebra::{linalg::balancing, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A real scalar polynomial with trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarPolynomial {
    coeffs: Vec<f64>,
}

impl ScalarPolynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `p(-z)`.
    pub fn reflect(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| if i % 2 == 0 { c } else { -c })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::new(vec![]);
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Interpolating polynomial through `(xs[i], ys[i])` (Newton divided differences).
    pub fn interpolate(xs: &[f64], ys: &[f64]) -> Self {
        assert_eq!(xs.len(), ys.len());
        let n = xs.len();
        let mut dd = ys.to_vec();
        for level in 1..n {
            for i in (level..n).rev() {
                dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
            }
        }
        // Expand the Newton form into monomials, innermost factor first.
        let mut coeffs = vec![0.0; n];
        for i in (0..n).rev() {
            for j in (1..n).rev() {
                coeffs[j] = coeffs[j - 1] - xs[i] * coeffs[j];
            }
            coeffs[0] = dd[i] - xs[i] * coeffs[0];
        }
        Self::new(coeffs)
    }

    /// All complex roots via companion-matrix eigenvalues.
    pub fn roots(&self) -> Vec<Complex64> {
        roots_of(&self.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect::<Vec<_>>(), true)
    }
}

/// Chebyshev points of the first kind mapped onto `[-half_width, half_width]`.
pub fn chebyshev_nodes(count: usize, half_width: f64) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let theta = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * count) as f64;
            half_width * theta.cos()
        })
        .collect()
}

pub fn cpoly_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn cpoly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Monic polynomial with the given roots.
pub fn cpoly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    roots
        .iter()
        .fold(vec![one], |acc, &r| cpoly_mul(&acc, &[-r, one]))
}

/// Coefficients of `p(center + w)` in powers of `w` (repeated synthetic division).
pub fn cpoly_shift(coeffs: &[Complex64], center: Complex64) -> Vec<Complex64> {
    let mut work = coeffs.to_vec();
    let n = work.len();
    for k in 0..n {
        for j in (k..n - 1).rev() {
            let upper = work[j + 1];
            work[j] += center * upper;
        }
    }
    work
}

/// Companion-matrix roots of a complex polynomial.
///
/// For polynomials with real coefficients a balanced real companion matrix is
/// used and the result inherits exact conjugate symmetry from the real Schur form.
pub fn roots_of(coeffs: &[Complex64], balance: bool) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return vec![];
    }
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|z| z / lead).collect();
    let all_real = monic.iter().all(|z| z.im == 0.0);
    if all_real {
        let mut comp = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -monic[i].re;
        }
        if balance {
            balancing::balance_parlett_reinsch(&mut comp);
        }
        comp.complex_eigenvalues().iter().cloned().collect()
    } else {
        // Complex case: embed as a 2n x 2n real matrix would double roots; use the
        // complex Schur form through the eigenvalues of the complex companion.
        let mut comp = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            comp[(i, n - 1)] = -monic[i];
        }
        comp.schur().eigenvalues().expect("complex Schur form is triangular").iter().cloned().collect()
    }
}

/// A few Newton steps on each root; keeps the original when a step does not improve it.
pub fn polish_roots(coeffs: &[Complex64], roots: &mut [Complex64], steps: usize) {
    let deriv: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * i as f64)
        .collect();
    for r in roots.iter_mut() {
        for _ in 0..steps {
            let f = cpoly_eval(coeffs, *r);
            let df = cpoly_eval(&deriv, *r);
            if df.norm() == 0.0 {
                break;
            }
            let cand = *r - f / df;
            if cpoly_eval(coeffs, cand).norm() < f.norm() {
                *r = cand;
            } else {
                break;
            }
        }
    }
}
