//! Continuous-time and sampled spectral quantities.
//!
//! Everything here is derived from the rational matrix function
//!
//! ```text
//! R(z) = P(z)^{-1} Q(z) Σ_L Q(-z)ᵀ P(-z)^{-ᵀ} = S̃(z) / (det P(z) det P(-z))
//! ```
//!
//! whose restriction to the imaginary axis is `2π f_Y`. [`RationalSpectrum`]
//! caches the polynomial data, the roots of `det P` and the partial-fraction
//! matrices, so repeated evaluations on a frequency grid are cheap.
//!
//! Three evaluators of the sampled density `f_Δ(ω)` are provided. The Taylor
//! series in `Δ` uses the `Θ_k` matrices, the closed form sums geometric
//! series over the partial fractions, and the reference evaluator sums the
//! autocovariance directly.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::eulerian::{self, polylog_sum};
use crate::linalg::{self, CMat, Mat};
use crate::model::{self, McarmaModel, RootSet};
use crate::poly::{self, ScalarPolynomial};

/// Largest number of lags the reference evaluator is allowed to sum.
pub const REFERENCE_BUDGET: u64 = 10_000_000;

/// Points closer than this to `±λ_ℓ` are rejected by [`RationalSpectrum::r_eval`].
pub const POLE_GUARD: f64 = 1e-8;

/// Largest `Δ·max|λ|/|ω|` at which [`RationalSpectrum::f_sampled`] sums the series.
pub const SERIES_SWITCH: f64 = 0.5;

/// `Θ_{start}, Θ_{start+1}, …`; lower indices are identically zero.
#[derive(Clone, Debug)]
pub struct ThetaSeries {
    start: usize,
    coeffs: Vec<Mat>,
}

impl ThetaSeries {
    /// First index that can be nonzero, `2(p-q)-1`.
    pub fn start(&self) -> usize {
        self.start
    }

    /// Highest stored index.
    pub fn max_order(&self) -> usize {
        self.start + self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    /// `Θ_k`, zero below [`start`](Self::start). Panics above [`max_order`](Self::max_order).
    pub fn get(&self, k: usize) -> Mat {
        if k < self.start {
            let d = self.coeffs[0].nrows();
            return Mat::zeros(d, d);
        }
        self.coeffs[k - self.start].clone()
    }
}

/// The Laurent coefficients of `R` at one root of `det P`.
#[derive(Clone, Debug)]
pub struct PartialFractionTerm {
    pub lambda: Complex64,
    pub multiplicity: usize,
    /// `alphas[j-1]` multiplies `(z - λ)^{-j}`.
    pub alphas: Vec<CMat>,
}

/// `R(z) = Σ_ℓ Σ_j [α(ℓ,j)(z-λ_ℓ)^{-j} + α(ℓ,j)ᵀ(-z-λ_ℓ)^{-j}]`.
///
/// The coefficients at `-λ_ℓ` are the transposes `β(ℓ,j) = α(ℓ,j)ᵀ`, which
/// follows from `R(-z)ᵀ = R(z)`; they are not stored.
#[derive(Clone, Debug)]
pub struct PartialFraction {
    pub terms: Vec<PartialFractionTerm>,
}

impl PartialFraction {
    /// Reassembles `R(z)` from the stored terms.
    pub fn eval(&self, z: Complex64) -> CMat {
        let d = self.terms[0].alphas[0].nrows();
        let mut out = CMat::zeros(d, d);
        for term in &self.terms {
            let near = Complex64::new(1.0, 0.0) / (z - term.lambda);
            let far = Complex64::new(1.0, 0.0) / (-z - term.lambda);
            let (mut pn, mut pf) = (near, far);
            for a in &term.alphas {
                out += a * pn + a.transpose() * pf;
                pn *= near;
                pf *= far;
            }
        }
        out
    }

    /// Sum of the Frobenius norms of all `α(ℓ,j)`.
    pub fn scale(&self) -> f64 {
        self.terms.iter().flat_map(|t| t.alphas.iter()).map(|a| a.norm()).sum()
    }

    /// `‖Σ_ℓ (α(ℓ,1) - α(ℓ,1)ᵀ)‖`, which vanishes because `R(z) = O(z^{-2})`.
    pub fn residue_asymmetry(&self) -> f64 {
        let d = self.terms[0].alphas[0].nrows();
        let sum = self
            .terms
            .iter()
            .fold(CMat::zeros(d, d), |acc, t| acc + &t.alphas[0] - t.alphas[0].transpose());
        sum.norm()
    }
}

/// Spectral data derived once from a validated model.
#[derive(Clone, Debug)]
pub struct RationalSpectrum {
    model: McarmaModel,
    det: ScalarPolynomial,
    denom: Vec<f64>,
    s_tilde: Vec<Mat>,
    roots: RootSet,
    pfrac: PartialFraction,
}

impl RationalSpectrum {
    pub fn new(model: &McarmaModel) -> Result<Self> {
        let det = model::det_poly(model);
        let denom = det.mul(&det.reflect()).coeffs().to_vec();
        let s_tilde = model::s_tilde(model);
        let roots = model::char_roots(model)?;
        let pfrac = partial_fractions_from(&s_tilde, &roots, model.pd());
        Ok(Self { model: model.clone(), det, denom, s_tilde, roots, pfrac })
    }

    pub fn model(&self) -> &McarmaModel {
        &self.model
    }

    pub fn det_poly(&self) -> &ScalarPolynomial {
        &self.det
    }

    /// Coefficients of `D(z) = det P(z) det P(-z)`, ascending; odd ones vanish.
    pub fn denominator(&self) -> &[f64] {
        &self.denom
    }

    pub fn s_tilde(&self) -> &[Mat] {
        &self.s_tilde
    }

    pub fn roots(&self) -> &RootSet {
        &self.roots
    }

    pub fn partial_fractions(&self) -> &PartialFraction {
        &self.pfrac
    }

    /// `2(p-q)-1`, the first index where `Θ_k` can be nonzero.
    pub fn leading_order(&self) -> usize {
        2 * (self.model.p() - self.model.q()) - 1
    }

    /// `R(z)`, rejecting points within [`POLE_GUARD`] of `±λ_ℓ`.
    pub fn r_eval(&self, z: Complex64) -> Result<CMat> {
        for &(lambda, _) in &self.roots.roots {
            if (z - lambda).norm() < POLE_GUARD || (z + lambda).norm() < POLE_GUARD {
                return Err(Error::PoleEvaluation { z });
            }
        }
        let den = poly::cpoly_eval(&real_to_complex(&self.denom), z);
        let scale: f64 = self.denom.iter().map(|c| c.abs()).sum::<f64>() * z.norm().max(1.0).powi(self.denom.len() as i32);
        if den.norm() <= 1e-12 * scale {
            return Err(Error::PoleEvaluation { z });
        }
        Ok(eval_matrix_poly(&self.s_tilde, z) / den)
    }

    /// Continuous-time spectral density `f_Y(λ)`.
    pub fn f_y(&self, lambda: f64) -> CMat {
        f_y(&self.model, lambda)
    }

    /// `Θ_0..Θ_{k_max}` from the coefficient recursion, started at `k = 0`.
    ///
    /// With `D(z) = Σ_m d_{2m} z^{2m}` the recursion reads
    /// `Σ_m d_{2(pd-m)} Θ_{k-2m} = S̃_{2pd-1-k}`, where out-of-range `S̃` are zero.
    pub fn theta_raw(&self, k_max: usize) -> Vec<Mat> {
        let d = self.model.d();
        let pd = self.model.pd();
        let lead = self.denom[2 * pd];
        let mut theta: Vec<Mat> = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let mut rhs = match (2 * pd - 1).checked_sub(k) {
                Some(i) if i < self.s_tilde.len() => self.s_tilde[i].clone(),
                _ => Mat::zeros(d, d),
            };
            for m in 1..=pd.min(k / 2) {
                rhs -= &theta[k - 2 * m] * self.denom[2 * (pd - m)];
            }
            theta.push(rhs / lead);
        }
        theta
    }

    pub fn theta_series(&self, k_max: usize) -> Result<ThetaSeries> {
        let start = self.leading_order();
        if k_max < start {
            return Err(Error::InvalidArgument(format!("Taylor order {k_max} is below the leading order {start}")));
        }
        let raw = self.theta_raw(k_max);
        Ok(ThetaSeries { start, coeffs: raw[start..].to_vec() })
    }

    /// `Γ(t) = E[Y_{s+t} Y_sᵀ]`; for negative `t` the transpose of `Γ(-t)`.
    pub fn autocovariance(&self, t: f64) -> Mat {
        if t < 0.0 {
            return self.autocovariance(-t).transpose();
        }
        let d = self.model.d();
        let mut out = CMat::zeros(d, d);
        for term in &self.pfrac.terms {
            let e = (term.lambda * t).exp();
            let mut power = 1.0;
            for (j, a) in term.alphas.iter().enumerate() {
                if j > 0 {
                    power *= t / j as f64;
                }
                out += a * (e * power);
            }
        }
        debug_assert!(
            linalg::max_imag(&out) <= 1e-9 * self.pfrac.scale().max(1.0),
            "autocovariance has imaginary part {}",
            linalg::max_imag(&out)
        );
        linalg::real_part(&out)
    }

    /// Truncated Taylor series of `f_Δ(ω)` in `Δ`:
    /// `-(1/2π) Σ_{k=2(p-q)-1}^{K} (-Δ)^k Θ_k c̃_k(ω)`.
    ///
    /// Gated to `Δ·max|λ| < |ω|`, where the series is known to be under control.
    pub fn f_sampled_taylor(&self, delta: f64, omega: f64, order: usize) -> Result<CMat> {
        check_delta(delta)?;
        check_omega(omega)?;
        if omega == 0.0 {
            return Err(Error::OmegaZero);
        }
        let lhs = delta * self.roots.max_modulus();
        if lhs >= omega.abs() {
            return Err(Error::SeriesDomain { lhs, omega });
        }
        if order > eulerian::MAX_ROW {
            return Err(Error::OrderTooLarge { order, max: eulerian::MAX_ROW });
        }
        let theta = self.theta_series(order)?;
        let d = self.model.d();
        let mut out = CMat::zeros(d, d);
        for k in theta.start()..=order {
            let weight = eulerian::c_tilde(k, omega)? * (-delta).powi(k as i32);
            out += linalg::to_complex(&theta.get(k)) * weight;
        }
        Ok(linalg::hermitian_part(&(out * Complex64::new(-1.0 / TAU, 0.0))))
    }

    /// Closed-form `f_Δ(ω)` from the partial fractions.
    ///
    /// Relative accuracy drops where `f_Δ` is small compared with the
    /// individual terms, which happens away from `ω = 0` as `Δ → 0` (about
    /// 1e-3 at `Δ = 0.01`, `ω = 3` for a `p - q = 3` model).
    /// [`f_sampled`](Self::f_sampled) avoids this.
    ///
    /// With `y = e^{Δλ-iω}` and `y' = e^{Δλ+iω}`, a term `α t^{j-1} e^{λt}/(j-1)!`
    /// of `Γ` contributes `Δ^{j-1}/(j-1)! [α Σ_{k≥1} k^{j-1} y^k + αᵀ Σ_{k≥0} k^{j-1} y'^k]`.
    pub fn f_sampled_exact(&self, delta: f64, omega: f64) -> Result<CMat> {
        check_delta(delta)?;
        check_omega(omega)?;
        let d = self.model.d();
        let one = Complex64::new(1.0, 0.0);
        let mut out = CMat::zeros(d, d);
        for term in &self.pfrac.terms {
            let y = (term.lambda * delta - Complex64::new(0.0, omega)).exp();
            let y_rev = (term.lambda * delta + Complex64::new(0.0, omega)).exp();
            let mut weight = 1.0;
            for (j, a) in term.alphas.iter().enumerate() {
                if j > 0 {
                    weight *= delta / j as f64;
                }
                let forward = polylog_sum(j, y);
                let backward = if j == 0 { one / (one - y_rev) } else { polylog_sum(j, y_rev) };
                out += (a * forward + a.transpose() * backward).scale(weight);
            }
        }
        let f = linalg::hermitian_part(&out.unscale(TAU));
        clip_hermitian(&f)
    }

    /// `f_Δ(ω)` by whichever evaluator is accurate at this point.
    ///
    /// Far from `ω = 0` at small `Δ` the density is tiny while the partial
    /// fraction terms are not, so the closed form cancels badly. There the
    /// series converges like `ρ^k` with `ρ = Δ·max|λ|/|ω|` and is summed until
    /// `ρ^K < 2^-60`. Elsewhere the closed form is used.
    pub fn f_sampled(&self, delta: f64, omega: f64) -> Result<CMat> {
        check_delta(delta)?;
        check_omega(omega)?;
        let rho = delta * self.roots.max_modulus() / omega.abs();
        if omega != 0.0 && rho <= SERIES_SWITCH {
            let needed = (-60.0 * std::f64::consts::LN_2 / rho.ln()).ceil();
            let order = if needed.is_finite() { needed as usize } else { 0 };
            let order = order.max(self.leading_order()).min(eulerian::MAX_ROW);
            return self.f_sampled_taylor(delta, omega, order);
        }
        self.f_sampled_exact(delta, omega)
    }

    /// `(1/2π) Σ_{|k|≤K} e^{-ikω} Γ(Δk)` with `K` large enough that the tail is below `tol`.
    pub fn f_sampled_reference(&self, delta: f64, omega: f64, tol: f64) -> Result<CMat> {
        check_delta(delta)?;
        check_omega(omega)?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {tol}")));
        }
        let lags = self.reference_lags(delta, tol)?;
        let mut out = linalg::to_complex(&self.autocovariance(0.0));
        for k in 1..=lags {
            let g = linalg::to_complex(&self.autocovariance(delta * k as f64));
            let phase = Complex64::from_polar(1.0, -(k as f64) * omega);
            out += &g * phase + g.transpose() * phase.conj();
        }
        Ok(linalg::hermitian_part(&out.unscale(TAU)))
    }

    /// Number of lags after which `‖Γ(Δk)‖ ≤ tol·‖Γ(0)‖`.
    fn reference_lags(&self, delta: f64, tol: f64) -> Result<u64> {
        let rate = -self.roots.max_real() * delta;
        let estimate = (tol.ln() / -rate).ceil();
        if !estimate.is_finite() || estimate > REFERENCE_BUDGET as f64 {
            return Err(Error::BudgetExceeded { needed: estimate.min(u64::MAX as f64) as u64, budget: REFERENCE_BUDGET });
        }
        let floor = tol * self.autocovariance(0.0).norm();
        let mut lags = estimate.max(1.0) as u64;
        // Polynomial factors from repeated roots slow the decay; extend until the tail is small.
        while self.autocovariance(delta * lags as f64).norm() > floor {
            lags += lags / 4 + 1;
            if lags > REFERENCE_BUDGET {
                return Err(Error::BudgetExceeded { needed: lags, budget: REFERENCE_BUDGET });
            }
        }
        Ok(lags)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("sampling step must be positive and finite, got {delta}")))
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega.abs() <= PI {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("frequency must lie in [-π, π], got {omega}")))
    }
}

fn clip_hermitian(m: &CMat) -> Result<CMat> {
    let eig = m.clone().symmetric_eigen();
    let floor = -linalg::PSD_CLIP * m.norm().max(1.0);
    if eig.eigenvalues.iter().all(|&v| v >= 0.0) {
        return Ok(m.clone());
    }
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < floor {
            return Err(Error::NotPSD { min_eig: *v });
        }
        *v = v.max(0.0);
    }
    let q = &eig.eigenvectors;
    let diag = CMat::from_diagonal(&vals.map(|v| Complex64::new(v, 0.0)));
    Ok(linalg::hermitian_part(&(q * diag * q.adjoint())))
}

fn real_to_complex(c: &[f64]) -> Vec<Complex64> {
    c.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

fn eval_matrix_poly(coeffs: &[Mat], z: Complex64) -> CMat {
    let d = coeffs[0].nrows();
    coeffs
        .iter()
        .rev()
        .fold(CMat::zeros(d, d), |acc, c| acc * z + linalg::to_complex(c))
}

/// Laurent coefficients of `R` at each root, via the Taylor expansion of
/// `(z-λ)^ν R(z) = S̃(z) / [det P(-z) ∏_{m≠ℓ} (z-λ_m)^{ν_m}]` around `λ`.
fn partial_fractions_from(s_tilde: &[Mat], roots: &RootSet, pd: usize) -> PartialFraction {
    let d = s_tilde[0].nrows();
    let sign = if pd.is_multiple_of(2) { 1.0 } else { -1.0 };
    let terms = roots
        .roots
        .iter()
        .enumerate()
        .map(|(l, &(lambda, nu))| {
            // Zeros of the deflated denominator, in the local variable w = z - λ.
            let mut local_zeros = Vec::with_capacity(2 * pd);
            for (m, &(other, mult)) in roots.roots.iter().enumerate() {
                for _ in 0..mult {
                    local_zeros.push(-other - lambda);
                    if m != l {
                        local_zeros.push(other - lambda);
                    }
                }
            }
            let den: Vec<Complex64> = poly::cpoly_from_roots(&local_zeros).into_iter().map(|c| c * sign).collect();
            // Taylor coefficients of every entry of S̃ around λ.
            let mut num = vec![CMat::zeros(d, d); nu];
            for r in 0..d {
                for c in 0..d {
                    let entry: Vec<Complex64> = s_tilde.iter().map(|m| Complex64::new(m[(r, c)], 0.0)).collect();
                    let shifted = poly::cpoly_shift(&entry, lambda);
                    for (i, slot) in num.iter_mut().enumerate() {
                        slot[(r, c)] = shifted.get(i).copied().unwrap_or_default();
                    }
                }
            }
            // Series division g = num / den, truncated at order ν-1.
            let mut g: Vec<CMat> = Vec::with_capacity(nu);
            for i in 0..nu {
                let mut acc = num[i].clone();
                for j in 1..=i.min(den.len() - 1) {
                    acc -= &g[i - j] * den[j];
                }
                g.push(acc / den[0]);
            }
            let alphas = (1..=nu).map(|j| g[nu - j].clone()).collect();
            PartialFractionTerm { lambda, multiplicity: nu, alphas }
        })
        .collect();
    PartialFraction { terms }
}

/// `(1/2π) P(iλ)^{-1} Q(iλ) Σ_L Q(iλ)^* P(iλ)^{-*}`.
pub fn f_y(model: &McarmaModel, lambda: f64) -> CMat {
    let z = Complex64::new(0.0, lambda);
    let p = model.ar_polynomial().eval(z);
    let q = model.ma_polynomial().eval(z);
    let p_inv = p.try_inverse().expect("P(iλ) is invertible for a stable model");
    let h = p_inv * q;
    let f = &h * linalg::to_complex(model.sigma_l()) * h.adjoint();
    let f = f.unscale(TAU);
    linalg::hermitian_part(&f)
}

pub fn r_eval(model: &McarmaModel, z: Complex64) -> Result<CMat> {
    RationalSpectrum::new(model)?.r_eval(z)
}

pub fn theta_series(model: &McarmaModel, k_max: usize) -> Result<ThetaSeries> {
    RationalSpectrum::new(model)?.theta_series(k_max)
}

pub fn partial_fractions(model: &McarmaModel) -> Result<PartialFraction> {
    Ok(RationalSpectrum::new(model)?.pfrac)
}

pub fn autocovariance(model: &McarmaModel, t: f64) -> Result<Mat> {
    Ok(RationalSpectrum::new(model)?.autocovariance(t))
}

pub fn f_sampled_taylor(model: &McarmaModel, delta: f64, omega: f64, order: usize) -> Result<CMat> {
    RationalSpectrum::new(model)?.f_sampled_taylor(delta, omega, order)
}

pub fn f_sampled(model: &McarmaModel, delta: f64, omega: f64) -> Result<CMat> {
    RationalSpectrum::new(model)?.f_sampled(delta, omega)
}

pub fn f_sampled_exact(model: &McarmaModel, delta: f64, omega: f64) -> Result<CMat> {
    RationalSpectrum::new(model)?.f_sampled_exact(delta, omega)
}

pub fn f_sampled_reference(model: &McarmaModel, delta: f64, omega: f64, tol: f64) -> Result<CMat> {
    RationalSpectrum::new(model)?.f_sampled_reference(delta, omega, tol)
}
