//! The sampling filter `Φ^Δ(z) = ∏(1 - e^{Δλ_i} z)`, the spectrum of the
//! filtered process `X_n = Φ^Δ(B) Y_{nΔ}` and its moving-average structure.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::eulerian::{self, Parity};
use crate::linalg::{self, CMat, Mat};
use crate::model::{McarmaModel, RootSet};
use crate::poly;
use crate::spectral::RationalSpectrum;

/// Relative size below which the order-`pd` Fourier coefficient counts as zero.
pub const DEGREE_TOL: f64 = 1e-9;

/// Modulus distance from 1 below which a factorization root is treated as lying on the unit circle.
pub const CIRCLE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Filter {
    coeffs: Vec<f64>,
    delta: f64,
    lambdas: Vec<Complex64>,
}

impl Filter {
    /// `φ_0 = 1, φ_1, …, φ_{pd}`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `Φ^Δ(z)`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `|Φ^Δ(e^{iω})|²`, as a product of `|1 - e^{Δλ + iω}|²` over the roots.
    ///
    /// Each factor is `expm1(a)² + 4 e^a sin²(b/2)` with `a + ib = Δλ + iω`,
    /// which stays accurate when `Δλ` and `ω` are both small.
    pub fn power_transfer(&self, omega: f64) -> f64 {
        self.lambdas
            .iter()
            .map(|l| {
                let a = self.delta * l.re;
                let half = 0.5 * (self.delta * l.im + omega);
                a.exp_m1().powi(2) + 4.0 * a.exp() * half.sin().powi(2)
            })
            .product()
    }

    /// `2^{pd} e^{ΔΣλ} ∏(cosh Δλ - cos ω)`, the same quantity in product form.
    pub fn power_transfer_product(&self, omega: f64) -> f64 {
        let cos = Complex64::new(omega.cos(), 0.0);
        let sum: Complex64 = self.lambdas.iter().sum();
        let prod: Complex64 = self.lambdas.iter().map(|&l| (l * self.delta).cosh() - cos).product();
        (prod * (sum * self.delta).exp() * 2f64.powi(self.lambdas.len() as i32)).re
    }

    /// `X_n = Σ_j φ_j Y_{n-j}` for `n ≥ pd`; the output has `len - pd` columns.
    pub fn apply(&self, obs: &Mat) -> Mat {
        let m = self.order();
        let n = obs.ncols();
        if n <= m {
            return Mat::zeros(obs.nrows(), 0);
        }
        Mat::from_fn(obs.nrows(), n - m, |i, col| {
            self.coeffs.iter().enumerate().map(|(j, phi)| phi * obs[(i, col + m - j)]).sum()
        })
    }
}

/// Expands `∏(1 - e^{Δλ_i} z)` over the roots of `det P` with multiplicity.
pub fn sampling_filter_from_roots(roots: &RootSet, delta: f64) -> Result<Filter> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("sampling step must be positive, got {delta}")));
    }
    let lambdas = roots.expanded();
    let one = Complex64::new(1.0, 0.0);
    let coeffs = lambdas
        .iter()
        .fold(vec![one], |acc, &l| poly::cpoly_mul(&acc, &[one, -(l * delta).exp()]));
    let mut real = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        if c.im.abs() > 1e-12 * c.norm().max(1.0) {
            return Err(Error::InvalidArgument(format!("filter coefficient {c} is not real; roots are not conjugate-closed")));
        }
        real.push(c.re);
    }
    Ok(Filter { coeffs: real, delta, lambdas })
}

pub fn sampling_filter(spectrum: &RationalSpectrum, delta: f64) -> Result<Filter> {
    sampling_filter_from_roots(spectrum.roots(), delta)
}

/// `Σ_{k=-m}^{m} F_k e^{ikω}` with complex matrix coefficients.
#[derive(Clone, Debug)]
pub struct TrigMatrixPolynomial {
    order: usize,
    coeffs: Vec<CMat>,
}

impl TrigMatrixPolynomial {
    /// Builds from `F_{-m}..F_m`.
    pub fn new(coeffs: Vec<CMat>) -> Self {
        assert!(coeffs.len() % 2 == 1, "need an odd number of coefficients");
        Self { order: coeffs.len() / 2, coeffs }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `F_k` for `|k| ≤ m`.
    pub fn get(&self, k: isize) -> &CMat {
        &self.coeffs[(k + self.order as isize) as usize]
    }

    /// `F_{-m}..F_m`.
    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn eval(&self, omega: f64) -> CMat {
        let d = self.coeffs[0].nrows();
        let m = self.order as isize;
        (-m..=m).fold(CMat::zeros(d, d), |acc, k| acc + self.get(k) * Complex64::from_polar(1.0, k as f64 * omega))
    }

    /// Largest Frobenius norm among the coefficients.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `f_MA^Δ = φ^Δ · f_Δ` as a trigonometric polynomial of order `pd - 1`.
///
/// The product is sampled at `4pd + 1` equispaced frequencies and inverted by
/// a discrete Fourier transform. The order-`pd` coefficients must vanish; they
/// are checked and dropped.
pub fn filtered_spectrum(spectrum: &RationalSpectrum, delta: f64) -> Result<TrigMatrixPolynomial> {
    let (full, ratio) = filtered_spectrum_full(spectrum, delta)?;
    if ratio > DEGREE_TOL {
        return Err(Error::DegreeReductionFailed { ratio });
    }
    let pd = spectrum.model().pd();
    let keep = full.coeffs[1..full.coeffs.len() - 1].to_vec();
    debug_assert_eq!(keep.len(), 2 * pd - 1);
    Ok(TrigMatrixPolynomial::new(keep))
}

/// Order-`pd` interpolant together with `max(‖F_{±pd}‖) / max_k ‖F_k‖`.
pub fn filtered_spectrum_full(spectrum: &RationalSpectrum, delta: f64) -> Result<(TrigMatrixPolynomial, f64)> {
    let pd = spectrum.model().pd();
    let d = spectrum.model().d();
    let filter = sampling_filter(spectrum, delta)?;
    let nodes = 4 * pd + 1;
    let samples: Vec<(f64, CMat)> = (0..nodes)
        .map(|n| {
            let mut omega = TAU * n as f64 / nodes as f64;
            if omega > PI {
                omega -= TAU;
            }
            let f = spectrum.f_sampled(delta, omega)?;
            Ok((omega, f.scale(filter.power_transfer(omega))))
        })
        .collect::<Result<_>>()?;
    let span = 2 * pd as isize;
    let coeffs: Vec<CMat> = (-span..=span)
        .map(|k| {
            let sum = samples.iter().fold(CMat::zeros(d, d), |acc, (omega, f)| {
                acc + f * Complex64::from_polar(1.0, -(k as f64) * omega)
            });
            sum.unscale(nodes as f64)
        })
        .collect();
    // Only orders up to pd can be present; the interpolant is reduced to order pd.
    let full = TrigMatrixPolynomial::new(coeffs[pd..coeffs.len() - pd].to_vec());
    let edge = full.get(pd as isize).norm().max(full.get(-(pd as isize)).norm());
    let ratio = edge / full.max_norm().max(f64::MIN_POSITIVE);
    Ok((full, ratio))
}

/// `γ_X(h) = Σ_{j,k} φ_j φ_k Γ(Δ(h - j + k))`.
pub fn filtered_acov(spectrum: &RationalSpectrum, delta: f64, h: isize) -> Result<Mat> {
    Ok(filtered_acov_with_scale(spectrum, delta, h)?.0)
}

/// As [`filtered_acov`], also returning `Σ|φ_j φ_k| · ‖Γ(0)‖`, the size of the
/// terms that cancel.
pub fn filtered_acov_with_scale(spectrum: &RationalSpectrum, delta: f64, h: isize) -> Result<(Mat, f64)> {
    let filter = sampling_filter(spectrum, delta)?;
    let phi = filter.coeffs();
    let d = spectrum.model().d();
    let mut out = Mat::zeros(d, d);
    let mut weight = 0.0;
    for (j, pj) in phi.iter().enumerate() {
        for (k, pk) in phi.iter().enumerate() {
            let lag = h - j as isize + k as isize;
            out += spectrum.autocovariance(delta * lag as f64) * (pj * pk);
            weight += (pj * pk).abs();
        }
    }
    Ok((out, weight * spectrum.autocovariance(0.0).norm()))
}

/// `Ψ_0 = I, Ψ_1..Ψ_m` and the innovation covariance `Σ_Z`.
#[derive(Clone, Debug)]
pub struct MaRepresentation {
    pub psi: Vec<Mat>,
    pub sigma_z: Mat,
    /// Relative mismatch between implied and input autocovariances.
    pub residual: f64,
    pub iterations: usize,
}

impl MaRepresentation {
    /// `Σ_j Ψ_{j+h} Σ_Z Ψ_jᵀ` for `h ≥ 0`.
    pub fn implied_acov(&self, h: usize) -> Mat {
        implied_acov(&self.psi, &self.sigma_z, h)
    }
}

fn implied_acov(psi: &[Mat], sigma_z: &Mat, h: usize) -> Mat {
    let d = sigma_z.nrows();
    (0..psi.len().saturating_sub(h)).fold(Mat::zeros(d, d), |acc, j| acc + &psi[j + h] * sigma_z * psi[j].transpose())
}

fn acov_residual(acov: &[Mat], psi: &[Mat], sigma_z: &Mat) -> f64 {
    let scale = acov[0].norm().max(f64::MIN_POSITIVE);
    (0..acov.len())
        .map(|h| (implied_acov(psi, sigma_z, h) - &acov[h]).norm())
        .fold(0.0, f64::max)
        / scale
}

/// Default iteration budget `ceil(200/Δ)`, capped at `10^5`.
pub fn default_max_iters(delta: f64) -> usize {
    ((200.0 / delta).ceil() as usize).min(100_000)
}

/// Multivariate innovations recursion for an MA(m) autocovariance `γ(0..=m)`.
///
/// Only the band `Θ_{n,1..m}` is kept, since the recursion leaves the other
/// coefficients at zero for a moving average of order `m`. Iterates until two
/// successive `(Θ_{n,1}, …, Θ_{n,m})` differ by less than `tol` in Frobenius
/// norm.
pub fn innovations_factorization(acov: &[Mat], tol: f64, max_iters: usize) -> Result<MaRepresentation> {
    let m = acov.len().checked_sub(1).ok_or_else(|| Error::InvalidArgument("empty autocovariance sequence".into()))?;
    let d = acov[0].nrows();
    let g0 = linalg::symmetric_part(&acov[0]);
    let g0_scale = g0.norm();
    if linalg::min_symmetric_eigenvalue(&g0) <= 1e-12 * g0_scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPD("γ(0) is singular".into()));
    }
    if m == 0 {
        return Ok(MaRepresentation { psi: vec![Mat::identity(d, d)], sigma_z: g0, residual: 0.0, iterations: 0 });
    }
    // γ(h) for h in -m..=m.
    let gamma = |h: isize| -> Mat {
        if h.unsigned_abs() > m {
            Mat::zeros(d, d)
        } else if h >= 0 {
            acov[h as usize].clone()
        } else {
            acov[(-h) as usize].transpose()
        }
    };
    // rows[n % (m+1)] holds Θ_{n,1..m}; vs[n % (m+1)] holds V_n and its inverse.
    let slots = m + 1;
    let mut rows: Vec<Vec<Mat>> = vec![vec![Mat::zeros(d, d); m]; slots];
    let mut vs: Vec<(Mat, Mat)> = vec![(Mat::zeros(d, d), Mat::zeros(d, d)); slots];
    let inv = |v: &Mat| v.clone().try_inverse().ok_or_else(|| Error::NotPD("innovation covariance became singular".into()));
    vs[0] = (g0.clone(), inv(&g0)?);
    let mut last_change = f64::INFINITY;
    for n in 1..=max_iters {
        let mut row = vec![Mat::zeros(d, d); m];
        // Θ_{n,n-k} for k = n-m..n-1 (only these can be nonzero).
        for k in n.saturating_sub(m)..n {
            let mut acc = gamma((n - k) as isize);
            for j in n.saturating_sub(m).max(k.saturating_sub(m))..k {
                let a = &row[n - j - 1];
                let (vj, _) = &vs[j % slots];
                let b = &rows[k % slots][k - j - 1];
                acc -= a * vj * b.transpose();
            }
            row[n - k - 1] = acc * &vs[k % slots].1;
        }
        let mut v = gamma(0);
        for j in n.saturating_sub(m)..n {
            let a = &row[n - j - 1];
            v -= a * &vs[j % slots].0 * a.transpose();
        }
        let v = linalg::symmetric_part(&v);
        let change = row
            .iter()
            .zip(&rows[(n - 1) % slots])
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt();
        let v_inv = inv(&v)?;
        rows[n % slots] = row;
        vs[n % slots] = (v, v_inv);
        last_change = change;
        if n > m && change < tol {
            let mut psi = vec![Mat::identity(d, d)];
            psi.extend(rows[n % slots].iter().cloned());
            let sigma_z = vs[n % slots].0.clone();
            let residual = acov_residual(acov, &psi, &sigma_z);
            return Ok(MaRepresentation { psi, sigma_z, residual, iterations: n });
        }
    }
    Err(Error::NoConvergence { iterations: max_iters, residual: last_change })
}

/// Scalar MA factorization by flipping the roots of the autocovariance
/// generating polynomial `z^m Σ_{|h|≤m} γ(|h|) z^h` to the outside of the unit disc.
pub fn scalar_factorization(acov: &[f64]) -> Result<MaRepresentation> {
    let m = acov.len().checked_sub(1).ok_or_else(|| Error::InvalidArgument("empty autocovariance sequence".into()))?;
    if acov[0] <= 0.0 {
        return Err(Error::NotPD(format!("γ(0) = {} is not positive", acov[0])));
    }
    let one = Mat::identity(1, 1);
    if m == 0 {
        return Ok(MaRepresentation { psi: vec![one], sigma_z: Mat::from_element(1, 1, acov[0]), residual: 0.0, iterations: 0 });
    }
    let gen: Vec<Complex64> = (0..=2 * m).map(|i| Complex64::new(acov[i.abs_diff(m)], 0.0)).collect();
    let roots = RootSet::cluster(&poly::roots_of(&gen, true))?;
    let mut outside = Vec::with_capacity(m);
    for &(r, mult) in &roots.roots {
        if (r.norm() - 1.0).abs() <= CIRCLE_TOL {
            return Err(Error::RootOnCircle { root: r });
        }
        if r.norm() > 1.0 {
            outside.extend(std::iter::repeat_n(r, mult));
        }
    }
    if outside.len() != m {
        return Err(Error::InvalidArgument(format!(
            "autocovariance generating polynomial has {} roots outside the unit disc, expected {m}",
            outside.len()
        )));
    }
    // θ(z) = ∏ (1 - z/r), so Ψ_0 = 1.
    let c1 = Complex64::new(1.0, 0.0);
    let theta = outside.iter().fold(vec![c1], |acc, &r| poly::cpoly_mul(&acc, &[c1, -c1 / r]));
    let psi: Vec<Mat> = theta.iter().map(|c| Mat::from_element(1, 1, c.re)).collect();
    let norm: f64 = theta.iter().map(|c| c.re * c.re).sum();
    let sigma_z = Mat::from_element(1, 1, acov[0] / norm);
    let matrices: Vec<Mat> = acov.iter().map(|&g| Mat::from_element(1, 1, g)).collect();
    let residual = acov_residual(&matrices, &psi, &sigma_z);
    Ok(MaRepresentation { psi, sigma_z, residual, iterations: 0 })
}

/// The first-order limit of the MA representation as `Δ → 0`:
/// `X_n ≈ (1-B)^{p(d-1)+q} ∏_j (1 - η_j B) Z_n` with
/// `Σ_Z ≈ Δ^{2(p-q)-1} / [(2(p-q)-1)! ∏|η_j|] · B_0 Σ_L B_0ᵀ`.
#[derive(Clone, Debug)]
pub struct AsymptoticMa {
    pub unit_root_multiplicity: usize,
    pub eta_roots: Vec<Complex64>,
    pub leading_order: usize,
    pub leading_noise: Mat,
}

impl AsymptoticMa {
    /// Coefficients of `(1-z)^{u} ∏(1 - η z)`, ascending.
    pub fn scalar_polynomial(&self) -> Result<Vec<f64>> {
        let one = Complex64::new(1.0, 0.0);
        let mut c = vec![one];
        for _ in 0..self.unit_root_multiplicity {
            c = poly::cpoly_mul(&c, &[one, -one]);
        }
        for &eta in &self.eta_roots {
            c = poly::cpoly_mul(&c, &[one, -eta]);
        }
        c.iter()
            .map(|z| {
                if z.im.abs() > 1e-10 * z.norm().max(1.0) {
                    Err(Error::InvalidArgument(format!("asymptotic MA coefficient {z} is not real")))
                } else {
                    Ok(z.re)
                }
            })
            .collect()
    }

    /// `Δ^{2(p-q)-1} / [(2(p-q)-1)! ∏|η|]`.
    pub fn sigma_scale(&self, delta: f64) -> f64 {
        let fact: f64 = (1..=self.leading_order).map(|i| i as f64).product();
        let eta_prod: f64 = self.eta_roots.iter().map(|e| e.norm()).product();
        delta.powi(self.leading_order as i32) / (fact * eta_prod)
    }

    pub fn sigma_z(&self, delta: f64) -> Mat {
        &self.leading_noise * self.sigma_scale(delta)
    }

    pub fn representation(&self, delta: f64) -> Result<MaRepresentation> {
        let d = self.leading_noise.nrows();
        let psi = self.scalar_polynomial()?.into_iter().map(|c| Mat::identity(d, d) * c).collect();
        Ok(MaRepresentation { psi, sigma_z: self.sigma_z(delta), residual: 0.0, iterations: 0 })
    }

    /// Autocovariance `γ^{asym}(h)` implied by [`representation`](Self::representation).
    pub fn acov(&self, delta: f64, h: usize) -> Result<Mat> {
        Ok(self.representation(delta)?.implied_acov(h))
    }
}

pub fn asymptotic_ma(model: &McarmaModel) -> Result<AsymptoticMa> {
    let k = model.p() - model.q();
    let xis = eulerian::xi_roots(k, Parity::Odd)?;
    let eta_roots = xis.into_iter().map(eulerian::eta).collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticMa {
        unit_root_multiplicity: model.p() * (model.d() - 1) + model.q(),
        eta_roots,
        leading_order: 2 * k - 1,
        leading_noise: model.leading_noise(),
    })
}
