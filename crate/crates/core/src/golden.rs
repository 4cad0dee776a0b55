//! Closed forms for the two-dimensional MCARMA(1,0) example, written out by
//! hand and kept independent of the generic pipeline, plus a small suite that
//! compares the two.
//!
//! For `P(z) = zI + A_1`, `Q = B_0` and `N = B_0 Σ_L B_0ᵀ`:
//!
//! ```text
//! S̃_2 = -N,   S̃_1 = N adj(A_1)ᵀ - adj(A_1) N,   S̃_0 = adj(A_1) N adj(A_1)ᵀ
//! ```

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter_ma;
use crate::fixtures;
use crate::linalg::{self, CMat, Mat};
use crate::model::{mat, McarmaModel};
use crate::spectral::RationalSpectrum;

/// Hand-derived spectral objects of a `d = 2, p = 1, q = 0` model with two
/// distinct real roots.
#[derive(Clone, Debug)]
pub struct TwoByTwoExample {
    pub lambda1: f64,
    pub lambda2: f64,
    pub s0: Mat,
    pub s1: Mat,
    pub s2: Mat,
}

impl TwoByTwoExample {
    pub fn new(a1: &Mat, b0: &Mat, sigma_l: &Mat) -> Result<Self> {
        if a1.shape() != (2, 2) || b0.shape() != (2, 2) || sigma_l.shape() != (2, 2) {
            return Err(Error::BadShape("the closed forms need 2x2 matrices".into()));
        }
        // det(zI + A_1) = z² + tr(A_1) z + det(A_1)
        let tr = a1[(0, 0)] + a1[(1, 1)];
        let det = a1[(0, 0)] * a1[(1, 1)] - a1[(0, 1)] * a1[(1, 0)];
        let disc = tr * tr - 4.0 * det;
        if disc <= 0.0 {
            return Err(Error::InvalidArgument("the closed forms need two distinct real roots".into()));
        }
        let lambda1 = (-tr - disc.sqrt()) / 2.0;
        let lambda2 = det / lambda1;
        let adj = mat(2, &[a1[(1, 1)], -a1[(0, 1)], -a1[(1, 0)], a1[(0, 0)]]);
        let n = b0 * sigma_l * b0.transpose();
        Ok(Self {
            lambda1,
            lambda2,
            s0: &adj * &n * adj.transpose(),
            s1: &n * adj.transpose() - &adj * &n,
            s2: -n,
        })
    }

    /// The `A_1 = [[3, 1], [0, 2]]`, `B_0 = Σ_L = I` example.
    pub fn reference() -> Self {
        let m = fixtures::m1();
        Self::new(&m.ar_coeffs()[0], &m.ma_coeffs()[0], m.sigma_l()).expect("distinct real roots")
    }

    /// `α(1)` and `α(2)`, the residues of `R` at `λ_1` and `λ_2`.
    pub fn alphas(&self) -> (Mat, Mat) {
        let (l1, l2) = (self.lambda1, self.lambda2);
        let gap = l1 * l1 - l2 * l2;
        let at = |l: f64| &self.s2 * (l * l) + &self.s1 * l + &self.s0;
        (at(l1) / (2.0 * l1 * gap), at(l2) * (-1.0 / (2.0 * l2 * gap)))
    }

    /// `Θ_1..Θ_kmax` from the four-term recursion in `λ_1² + λ_2²` and `λ_1² λ_2²`.
    pub fn theta(&self, kmax: usize) -> Vec<Mat> {
        let sum = self.lambda1.powi(2) + self.lambda2.powi(2);
        let prod = (self.lambda1 * self.lambda2).powi(2);
        let mut th: Vec<Mat> = vec![Mat::zeros(2, 2)];
        for k in 1..=kmax {
            let next = match k {
                1 => self.s2.clone(),
                2 => self.s1.clone(),
                3 => &self.s0 + &th[1] * sum,
                4 => &th[2] * sum,
                _ => &th[k - 2] * sum - &th[k - 4] * prod,
            };
            th.push(next);
        }
        th.remove(0);
        th
    }

    /// `f_MA^Δ(ω)` in closed form.
    pub fn f_ma(&self, delta: f64, omega: f64) -> CMat {
        let (l1, l2) = (self.lambda1, self.lambda2);
        let (sh1, sh2) = ((l1 * delta).sinh(), (l2 * delta).sinh());
        let (ch1, ch2) = ((l1 * delta).cosh(), (l2 * delta).cosh());
        let pref = 2.0 * (delta * (l1 + l2)).exp() / (TAU * (l1 * l1 - l2 * l2));
        let cos_part = (&self.s0 * (sh1 / l1 - sh2 / l2) + &self.s2 * (l1 * sh1 - l2 * sh2)) * omega.cos();
        let constant = &self.s0 * (ch1 * sh2 / l2 - ch2 * sh1 / l1) + &self.s2 * (l2 * ch1 * sh2 - l1 * ch2 * sh1);
        let real = linalg::to_complex(&((cos_part + constant) * pref));
        let imag = linalg::to_complex(&(&self.s1 * ((ch1 - ch2) * pref * omega.sin())));
        real + imag * Complex64::new(0.0, 1.0)
    }

    /// Expansion of `f_MA^Δ(ω)` through `Δ³`.
    pub fn f_ma_expansion(&self, delta: f64, omega: f64) -> CMat {
        let lsum = self.lambda1 + self.lambda2;
        let lsq = self.lambda1.powi(2) + self.lambda2.powi(2);
        let one_minus_cos = 1.0 - omega.cos();
        let i_sin = Complex64::new(0.0, omega.sin());
        let c = linalg::to_complex;
        let first = c(&(&self.s2 * (-2.0 * one_minus_cos)));
        let second = c(&(&self.s2 * (-2.0 * lsum * one_minus_cos))) + c(&self.s1) * i_sin;
        let bracket = (&self.s0 + &self.s2 * lsq) / 3.0 + &self.s2 * lsum.powi(2);
        let third = c(&(bracket * one_minus_cos - &self.s0)) - c(&self.s1) * (i_sin * lsum);
        (first + second.scale(delta) - third.scale(delta * delta)).scale(delta / TAU)
    }
}

/// One comparison of the golden suite.
#[derive(Clone, Debug, Serialize)]
pub struct GoldenCheck {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GoldenReport {
    pub checks: Vec<GoldenCheck>,
    pub pass: bool,
}

fn check(name: impl Into<String>, error: f64, tolerance: f64) -> GoldenCheck {
    GoldenCheck { name: name.into(), error, tolerance, pass: error <= tolerance }
}

/// Steps used by the filtered-spectrum comparison.
pub const GOLDEN_DELTAS: [f64; 3] = [0.05, 0.1, 0.5];

/// Largest pointwise relative difference between the generic filtered
/// spectrum and the closed form on a 101-point grid over `[-π, π]`.
pub fn filtered_spectrum_error(model: &McarmaModel, example: &TwoByTwoExample, delta: f64) -> Result<f64> {
    let spectrum = RationalSpectrum::new(model)?;
    let generic = filter_ma::filtered_spectrum(&spectrum, delta)?;
    let mut worst: f64 = 0.0;
    for i in 0..101 {
        let omega = -PI + TAU * i as f64 / 100.0;
        let want = example.f_ma(delta, omega);
        worst = worst.max(linalg::rel_diff_c(&generic.eval(omega), &want, f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Runs every closed-form comparison for the reference example.
pub fn run_golden() -> Result<GoldenReport> {
    let model = fixtures::m1();
    let ex = TwoByTwoExample::reference();
    let spectrum = RationalSpectrum::new(&model)?;
    let mut checks = Vec::new();

    let st = spectrum.s_tilde();
    let s_err = [(&st[0], &ex.s0), (&st[1], &ex.s1), (&st[2], &ex.s2)]
        .iter()
        .map(|(a, b)| (*a - *b).norm())
        .fold(0.0, f64::max);
    checks.push(check("s_tilde", s_err, 1e-12));

    let theta = spectrum.theta_series(8)?;
    let hand = ex.theta(8);
    let th_err = (1..=8).map(|k| linalg::rel_diff(&theta.get(k), &hand[k - 1], 1.0)).fold(0.0, f64::max);
    checks.push(check("theta_1..8", th_err, 1e-12));

    let (a1, a2) = ex.alphas();
    let pf = spectrum.partial_fractions();
    let mut pf_err: f64 = 0.0;
    for (lambda, alpha) in [(ex.lambda1, &a1), (ex.lambda2, &a2)] {
        let term = pf
            .terms
            .iter()
            .find(|t| (t.lambda - Complex64::new(lambda, 0.0)).norm() < 1e-9)
            .ok_or_else(|| Error::InvalidArgument(format!("root {lambda} not found")))?;
        pf_err = pf_err.max(linalg::rel_diff(&linalg::real_part(&term.alphas[0]), alpha, 1.0));
    }
    checks.push(check("alpha", pf_err, 1e-12));

    for delta in GOLDEN_DELTAS {
        let err = filtered_spectrum_error(&model, &ex, delta)?;
        checks.push(check(format!("filtered_spectrum delta={delta}"), err, 1e-9));
    }

    // The expansion drops terms of order Δ⁴, so halving Δ divides the error by about 16.
    let expansion_error = |delta: f64| {
        (0..41)
            .map(|i| {
                let omega = -PI + TAU * i as f64 / 40.0;
                (ex.f_ma(delta, omega) - ex.f_ma_expansion(delta, omega)).norm()
            })
            .fold(0.0, f64::max)
    };
    let ratio = expansion_error(0.02) / expansion_error(0.01);
    checks.push(check("expansion_order", (ratio.log2() - 4.0).abs(), 0.3));

    let pass = checks.iter().all(|c| c.pass);
    Ok(GoldenReport { checks, pass })
}
