//! MCARMA model definition, validation, state-space form and the polynomial
//! objects derived from the AR and MA matrix polynomials.
//!
//! A model of order `(p, q)` in dimension `d` is given by
//!
//! ```text
//! P(z) = I z^p + A_1 z^{p-1} + ... + A_p
//! Q(z) = B_0 z^q + B_1 z^{q-1} + ... + B_q
//! ```
//!
//! together with the covariance `Σ_L` of the driving noise.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat};
use crate::poly::{self, ScalarPolynomial};

/// Roots with real part at or above this value make a model unstable.
pub const STABILITY_MARGIN: f64 = -1e-10;

/// Relative tolerance for merging eigenvalues into one multiple root.
pub const CLUSTER_TOL: f64 = 1e-7;

/// Unvalidated model description, as read from a JSON model file.
///
/// Matrices are row-major nested arrays; `A` holds `A_1..A_p`, `B` holds
/// `B_0..B_q`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawModel {
    pub p: usize,
    pub q: usize,
    pub d: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "SigmaL")]
    pub sigma_l: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct McarmaModel {
    p: usize,
    q: usize,
    d: usize,
    ar: Vec<Mat>,
    ma: Vec<Mat>,
    sigma_l: Mat,
}

fn matrix_from_rows(rows: &[Vec<f64>], d: usize, what: &str) -> Result<Mat> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::BadShape(format!("{what} must be a {d}x{d} matrix with equal-length rows")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::BadShape(format!("{what} has non-finite entries")));
    }
    Ok(Mat::from_fn(d, d, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

/// Parses and validates a raw model description.
pub fn validate_model(raw: &RawModel) -> Result<McarmaModel> {
    let d = raw.d;
    if d == 0 || raw.p == 0 {
        return Err(Error::BadShape("p and d must be positive".into()));
    }
    if raw.a.len() != raw.p {
        return Err(Error::BadShape(format!("expected {} AR matrices, got {}", raw.p, raw.a.len())));
    }
    if raw.b.len() != raw.q + 1 {
        return Err(Error::BadShape(format!("expected {} MA matrices, got {}", raw.q + 1, raw.b.len())));
    }
    let ar = raw
        .a
        .iter()
        .enumerate()
        .map(|(i, m)| matrix_from_rows(m, d, &format!("A_{}", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let ma = raw
        .b
        .iter()
        .enumerate()
        .map(|(i, m)| matrix_from_rows(m, d, &format!("B_{i}")))
        .collect::<Result<Vec<_>>>()?;
    let sigma = matrix_from_rows(&raw.sigma_l, d, "SigmaL")?;
    McarmaModel::new(raw.p, raw.q, ar, ma, sigma)
}

impl McarmaModel {
    /// Builds and validates a model from `A_1..A_p`, `B_0..B_q` and `Σ_L`.
    pub fn new(p: usize, q: usize, ar: Vec<Mat>, ma: Vec<Mat>, sigma_l: Mat) -> Result<Self> {
        let model = Self::new_unchecked(p, q, ar, ma, sigma_l)?;
        model.validated()
    }

    /// Shape checks only: no order, covariance or stability validation.
    ///
    /// Intended for inspecting polynomial objects of models that would be
    /// rejected, e.g. unstable ones.
    pub fn new_unchecked(p: usize, q: usize, ar: Vec<Mat>, ma: Vec<Mat>, sigma_l: Mat) -> Result<Self> {
        if p == 0 {
            return Err(Error::BadShape("p must be positive".into()));
        }
        let d = sigma_l.nrows();
        if d == 0 {
            return Err(Error::BadShape("dimension must be positive".into()));
        }
        if ar.len() != p || ma.len() != q + 1 {
            return Err(Error::BadShape(format!(
                "need {p} AR and {} MA matrices, got {} and {}",
                q + 1,
                ar.len(),
                ma.len()
            )));
        }
        let square = |m: &Mat| m.nrows() == d && m.ncols() == d;
        if !square(&sigma_l) || !ar.iter().all(square) || !ma.iter().all(square) {
            return Err(Error::BadShape(format!("all matrices must be {d}x{d}")));
        }
        Ok(Self { p, q, d, ar, ma, sigma_l })
    }

    fn validated(mut self) -> Result<Self> {
        if self.q >= self.p {
            return Err(Error::BadOrders { p: self.p, q: self.q });
        }
        let s = &self.sigma_l;
        let scale = s.norm().max(f64::MIN_POSITIVE);
        if (s - s.transpose()).amax() > 1e-12 * scale.max(1.0) {
            return Err(Error::BadCovariance("SigmaL is not symmetric".into()));
        }
        let eig = linalg::symmetric_part(s).symmetric_eigen();
        let min_eig = eig.eigenvalues.min();
        if min_eig < -1e-12 * scale {
            return Err(Error::BadCovariance(format!("SigmaL is indefinite (eigenvalue {min_eig:e})")));
        }
        self.sigma_l = if min_eig < 0.0 {
            let clipped = eig.eigenvalues.map(|v| v.max(0.0));
            linalg::symmetric_part(&(&eig.eigenvectors * Mat::from_diagonal(&clipped) * eig.eigenvectors.transpose()))
        } else {
            linalg::symmetric_part(s)
        };
        let roots = det_poly(&self).roots();
        if let Some(bad) = roots
            .iter()
            .filter(|r| r.re >= STABILITY_MARGIN)
            .max_by(|a, b| a.re.total_cmp(&b.re))
        {
            return Err(Error::Unstable { root: *bad });
        }
        Ok(self)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(s)?;
        validate_model(&raw)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_raw(&self) -> RawModel {
        RawModel {
            p: self.p,
            q: self.q,
            d: self.d,
            a: self.ar.iter().map(matrix_to_rows).collect(),
            b: self.ma.iter().map(matrix_to_rows).collect(),
            sigma_l: matrix_to_rows(&self.sigma_l),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// State dimension `p·d`.
    pub fn pd(&self) -> usize {
        self.p * self.d
    }

    /// `A_1..A_p`.
    pub fn ar_coeffs(&self) -> &[Mat] {
        &self.ar
    }

    /// `B_0..B_q`.
    pub fn ma_coeffs(&self) -> &[Mat] {
        &self.ma
    }

    pub fn sigma_l(&self) -> &Mat {
        &self.sigma_l
    }

    /// `B_0 Σ_L B_0ᵀ`, the matrix that governs all leading-order asymptotics.
    pub fn leading_noise(&self) -> Mat {
        &self.ma[0] * &self.sigma_l * self.ma[0].transpose()
    }

    /// `P(z)` in ascending powers.
    pub fn ar_polynomial(&self) -> MatrixPolynomial {
        let mut coeffs: Vec<Mat> = self.ar.iter().rev().cloned().collect();
        coeffs.push(Mat::identity(self.d, self.d));
        MatrixPolynomial::new(coeffs)
    }

    /// `Q(z)` in ascending powers.
    pub fn ma_polynomial(&self) -> MatrixPolynomial {
        MatrixPolynomial::new(self.ma.iter().rev().cloned().collect())
    }

    /// Draws a random stable model with well separated characteristic roots.
    ///
    /// `P(z)` is built as a product of first-order factors `zI + M_i` whose
    /// `M_i` have spectra in the open right half plane, so every draw is
    /// stable. Draws whose roots come closer than `0.1` are discarded.
    pub fn random_stable<R: Rng + ?Sized>(rng: &mut R, d: usize, p: usize, q: usize) -> Self {
        assert!(q < p && d >= 1);
        loop {
            let mut poly = MatrixPolynomial::new(vec![Mat::identity(d, d)]);
            for _ in 0..p {
                let shift: f64 = rng.random_range(0.4..2.5);
                let mut noise = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
                let n = noise.norm();
                if n > 0.0 {
                    noise *= 0.85 * shift * rng.random_range(0.0..1.0) / n;
                }
                let factor = MatrixPolynomial::new(vec![Mat::identity(d, d) * shift + noise, Mat::identity(d, d)]);
                poly = poly.mul(&factor);
            }
            // P(z) = I z^p + A_1 z^{p-1} + ... + A_p, coefficients ascending.
            let ar: Vec<Mat> = (1..=p).map(|i| poly.coeffs()[p - i].clone()).collect();
            let ma: Vec<Mat> = (0..=q)
                .map(|j| {
                    let m = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
                    if j == 0 {
                        m * 0.5 + Mat::identity(d, d)
                    } else {
                        m
                    }
                })
                .collect();
            let l = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let sigma = &l * l.transpose() + Mat::identity(d, d) * 0.2;
            let Ok(model) = McarmaModel::new(p, q, ar, ma, sigma) else {
                continue;
            };
            let roots = det_poly(&model).roots();
            let well_separated = roots.iter().enumerate().all(|(i, a)| {
                roots.iter().skip(i + 1).all(|b| (a - b).norm() > 0.1)
            });
            if well_separated {
                return model;
            }
        }
    }
}

/// Companion-block state-space triplet `(𝒜, ℬ, 𝒞)`.
#[derive(Clone, Debug)]
pub struct StateSpace {
    pub a_mat: Mat,
    pub b_mat: Mat,
    pub c_mat: Mat,
}

/// A matrix polynomial `Σ_k C_k z^k`, ascending powers.
///
/// The zero polynomial is represented by an empty coefficient list.
#[derive(Clone, Debug)]
pub struct MatrixPolynomial {
    coeffs: Vec<Mat>,
}

impl MatrixPolynomial {
    pub fn new(mut coeffs: Vec<Mat>) -> Self {
        while coeffs.last().is_some_and(|m| m.iter().all(|&x| x == 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.first().map_or(0, |m| m.nrows())
    }

    pub fn eval(&self, z: Complex64) -> CMat {
        let d = self.dim();
        self.coeffs
            .iter()
            .rev()
            .fold(CMat::zeros(d, d), |acc, c| acc * z + linalg::to_complex(c))
    }

    pub fn eval_real(&self, x: f64) -> Mat {
        let d = self.dim();
        self.coeffs.iter().rev().fold(Mat::zeros(d, d), |acc, c| acc * x + c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::new(vec![]);
        }
        let d = self.dim();
        let mut out = vec![Mat::zeros(d, d); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `det` as a scalar polynomial, recovered from values at the `n + 1`
    /// roots of unity (`n = deg·d`) by an inverse DFT.
    ///
    /// Interpolating on the unit circle is unitary, so coefficient errors stay
    /// at `eps · max_{|z|=1} |det P(z)|` instead of growing with the node spread.
    pub fn determinant(&self) -> ScalarPolynomial {
        let d = self.dim();
        let Some(deg) = self.degree() else {
            return ScalarPolynomial::new(vec![]);
        };
        if d == 1 {
            return ScalarPolynomial::new(self.coeffs.iter().map(|m| m[(0, 0)]).collect());
        }
        let n = deg * d;
        let values: Vec<Complex64> = unit_circle_nodes(n + 1).map(|z| self.eval(z).determinant()).collect();
        ScalarPolynomial::new(inverse_dft(&values).into_iter().map(|c| c.re).collect())
    }

    /// Adjugate polynomial, entrywise by the same unit-circle interpolation
    /// with `deg·(d-1) + 1` nodes.
    pub fn adjugate(&self) -> MatrixPolynomial {
        let d = self.dim();
        let Some(deg) = self.degree() else {
            return Self::new(vec![]);
        };
        if d == 1 {
            return Self::new(vec![Mat::identity(1, 1)]);
        }
        let n = deg * (d - 1);
        let adjs: Vec<CMat> = unit_circle_nodes(n + 1).map(|z| linalg::adjugate(&self.eval(z))).collect();
        let mut coeffs = vec![Mat::zeros(d, d); n + 1];
        for i in 0..d {
            for j in 0..d {
                let vals: Vec<Complex64> = adjs.iter().map(|m| m[(i, j)]).collect();
                for (k, c) in inverse_dft(&vals).into_iter().enumerate() {
                    coeffs[k][(i, j)] = c.re;
                }
            }
        }
        Self::new(coeffs)
    }
}

fn unit_circle_nodes(count: usize) -> impl Iterator<Item = Complex64> {
    (0..count).map(move |k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / count as f64))
}

/// Coefficients `c_j` of the polynomial taking `values[k]` at `exp(2πik/N)`.
fn inverse_dft(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    (0..n)
        .map(|j| {
            values
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64))
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

/// Distinct roots with multiplicities; `Σ ν = p·d`.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<(Complex64, usize)>,
}

impl RootSet {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.1).sum()
    }

    /// Every root repeated according to multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.roots
            .iter()
            .flat_map(|&(r, m)| std::iter::repeat_n(r, m))
            .collect()
    }

    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().map(|r| r.0.norm()).fold(0.0, f64::max)
    }

    /// Largest real part (the slowest decay rate).
    pub fn max_real(&self) -> f64 {
        self.roots.iter().map(|r| r.0.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.1).max().unwrap_or(0)
    }

    /// Clusters raw roots: single-linkage within `CLUSTER_TOL·max(1, |λ|)`,
    /// representative is the arithmetic mean.
    pub fn cluster(raw: &[Complex64]) -> Result<Self> {
        let n = raw.len();
        let tol = |a: Complex64, b: Complex64| CLUSTER_TOL * 1f64.max(a.norm()).max(b.norm());
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while parent[r] != r {
                r = parent[r];
            }
            parent[i] = r;
            r
        }
        for i in 0..n {
            for j in i + 1..n {
                if (raw[i] - raw[j]).norm() <= tol(raw[i], raw[j]) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let mut groups: Vec<(usize, Complex64, usize)> = Vec::new();
        for (i, &z) in raw.iter().enumerate().take(n) {
            let r = find(&mut parent, i);
            match groups.iter_mut().find(|g| g.0 == r) {
                Some(g) => {
                    g.1 += z;
                    g.2 += 1;
                }
                None => groups.push((r, raw[i], 1)),
            }
        }
        let mut roots: Vec<(Complex64, usize)> = groups
            .into_iter()
            .map(|(_, sum, m)| {
                let mut mean = sum / m as f64;
                if mean.im.abs() <= tol(mean, mean) {
                    mean.im = 0.0;
                }
                (mean, m)
            })
            .collect();
        roots.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                let (a, b) = (roots[i].0, roots[j].0);
                let t = tol(a, b);
                if (a - b).norm() < 10.0 * t {
                    return Err(Error::RootClusterAmbiguous { a, b, tol: t });
                }
            }
        }
        Ok(Self { roots })
    }
}

/// `(𝒜, ℬ, 𝒞)` with `ℬ` from the β recursion
/// `β_{p-j} = -Σ_{i=1}^{p-j-1} A_i β_{p-j-i} - B_{q-j}` for `j ≤ q`, zero otherwise.
pub fn state_space(model: &McarmaModel) -> StateSpace {
    let (p, q, d) = (model.p, model.q, model.d);
    let n = p * d;
    let mut a_mat = Mat::zeros(n, n);
    for blk in 0..p - 1 {
        a_mat
            .view_mut((blk * d, (blk + 1) * d), (d, d))
            .copy_from(&Mat::identity(d, d));
    }
    for (i, a) in model.ar.iter().enumerate() {
        // Last block row holds -A_p .. -A_1 from left to right.
        let col = (p - 1 - i) * d;
        a_mat.view_mut(((p - 1) * d, col), (d, d)).copy_from(&(-a));
    }
    let mut beta: Vec<Mat> = vec![Mat::zeros(d, d); p + 1];
    for k in 1..=p {
        let j = p - k;
        if j > q {
            continue;
        }
        let mut b = -&model.ma[q - j];
        for i in 1..k {
            b -= &model.ar[i - 1] * &beta[k - i];
        }
        beta[k] = b;
    }
    let mut b_mat = Mat::zeros(n, d);
    for (k, b) in beta.iter().enumerate().skip(1).take(p) {
        b_mat.view_mut(((k - 1) * d, 0), (d, d)).copy_from(b);
    }
    let mut c_mat = Mat::zeros(d, n);
    c_mat.view_mut((0, 0), (d, d)).copy_from(&Mat::identity(d, d));
    StateSpace { a_mat, b_mat, c_mat }
}

/// `det P(z)`, monic of degree `p·d`.
pub fn det_poly(model: &McarmaModel) -> ScalarPolynomial {
    let raw = model.ar_polynomial().determinant();
    let mut coeffs = raw.coeffs().to_vec();
    coeffs.resize(model.pd() + 1, 0.0);
    coeffs[model.pd()] = 1.0;
    ScalarPolynomial::new(coeffs)
}

/// Coefficients `S_0..S_{(d-1)p+q}` of `adj P(z) Q(z)`.
pub fn adjugate_q(model: &McarmaModel) -> MatrixPolynomial {
    let adj = model.ar_polynomial().adjugate();
    adj.mul(&model.ma_polynomial())
}

/// Coefficients `S̃_0..S̃_{2[(d-1)p+q]}` of `S(z) Σ_L S(-z)ᵀ`, post-symmetrized
/// so that `S̃_j = (-1)^j S̃_jᵀ` holds exactly.
pub fn s_tilde(model: &McarmaModel) -> Vec<Mat> {
    let s = adjugate_q(model);
    let top = (model.d - 1) * model.p + model.q;
    let d = model.d;
    let mut coeffs: Vec<Mat> = s.coeffs().to_vec();
    coeffs.resize(top + 1, Mat::zeros(d, d));
    let mut out = vec![Mat::zeros(d, d); 2 * top + 1];
    for (a, sa) in coeffs.iter().enumerate() {
        let left = sa * &model.sigma_l;
        for (b, sb) in coeffs.iter().enumerate() {
            let term = &left * sb.transpose();
            if b % 2 == 0 {
                out[a + b] += term;
            } else {
                out[a + b] -= term;
            }
        }
    }
    for (j, m) in out.iter_mut().enumerate() {
        let t = m.transpose();
        *m = if j % 2 == 0 { (&*m + t) * 0.5 } else { (&*m - t) * 0.5 };
    }
    out
}

/// Roots of `det P` with multiplicities (balanced companion eigenvalues, clustered).
pub fn char_roots(model: &McarmaModel) -> Result<RootSet> {
    char_roots_with(model, false)
}

/// As [`char_roots`], optionally Newton-polishing the raw eigenvalues first.
pub fn char_roots_with(model: &McarmaModel, polish: bool) -> Result<RootSet> {
    let det = det_poly(model);
    let mut raw = det.roots();
    if polish {
        let c: Vec<Complex64> = det.coeffs().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        poly::polish_roots(&c, &mut raw, 4);
    }
    RootSet::cluster(&raw)
}

/// Convenience builder for a d×d matrix from row-major data.
pub fn mat(d: usize, data: &[f64]) -> Mat {
    DMatrix::from_row_slice(d, d, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{multiset_distance, rel_diff, rel_diff_c};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn m1() -> McarmaModel {
        McarmaModel::new(1, 0, vec![mat(2, &[3.0, 1.0, 0.0, 2.0])], vec![Mat::identity(2, 2)], Mat::identity(2, 2)).unwrap()
    }

    fn m2() -> McarmaModel {
        McarmaModel::new(2, 0, vec![mat(1, &[3.0]), mat(1, &[2.0])], vec![mat(1, &[1.0])], mat(1, &[1.0])).unwrap()
    }

    fn sorted_real(rs: &RootSet) -> Vec<(f64, usize)> {
        rs.roots.iter().map(|r| (r.0.re, r.1)).collect()
    }

    #[test]
    fn m1_is_accepted_with_its_roots() {
        let roots = char_roots(&m1()).unwrap();
        let got = sorted_real(&roots);
        assert!((got[0].0 + 3.0).abs() < 1e-12 && got[0].1 == 1);
        assert!((got[1].0 + 2.0).abs() < 1e-12 && got[1].1 == 1);
    }

    #[test]
    fn m2_roots() {
        let got = sorted_real(&char_roots(&m2()).unwrap());
        assert!((got[0].0 + 2.0).abs() < 1e-14 && (got[1].0 + 1.0).abs() < 1e-14);
    }

    #[test]
    fn unstable_model_is_rejected_with_positive_root() {
        let err = McarmaModel::new(1, 0, vec![mat(2, &[-3.0, 0.0, 0.0, 2.0])], vec![Mat::identity(2, 2)], Mat::identity(2, 2))
            .unwrap_err();
        match err {
            Error::Unstable { root } => assert!((root.re - 3.0).abs() < 1e-10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_orders_and_covariance() {
        let e = McarmaModel::new(1, 1, vec![mat(1, &[1.0])], vec![mat(1, &[1.0]), mat(1, &[1.0])], mat(1, &[1.0]));
        assert!(matches!(e, Err(Error::BadOrders { p: 1, q: 1 })));
        let asym = McarmaModel::new(1, 0, vec![Mat::identity(2, 2)], vec![Mat::identity(2, 2)], mat(2, &[1.0, 0.5, 0.0, 1.0]));
        assert!(matches!(asym, Err(Error::BadCovariance(_))));
        let indef = McarmaModel::new(1, 0, vec![Mat::identity(2, 2)], vec![Mat::identity(2, 2)], mat(2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(matches!(indef, Err(Error::BadCovariance(_))));
    }

    #[test]
    fn json_loader_rejects_ragged_arrays() {
        let ok = r#"{"p":1,"q":0,"d":2,"A":[[[3,1],[0,2]]],"B":[[[1,0],[0,1]]],"SigmaL":[[1,0],[0,1]]}"#;
        assert!(McarmaModel::from_json_str(ok).is_ok());
        let ragged = r#"{"p":1,"q":0,"d":2,"A":[[[3,1],[0]]],"B":[[[1,0],[0,1]]],"SigmaL":[[1,0],[0,1]]}"#;
        assert!(matches!(McarmaModel::from_json_str(ragged), Err(Error::BadShape(_))));
        let wrong_count = r#"{"p":2,"q":0,"d":1,"A":[[[3]]],"B":[[[1]]],"SigmaL":[[1]]}"#;
        assert!(matches!(McarmaModel::from_json_str(wrong_count), Err(Error::BadShape(_))));
    }

    #[test]
    fn json_round_trip() {
        let model = m1();
        let text = serde_json::to_string(&model.to_raw()).unwrap();
        let back = McarmaModel::from_json_str(&text).unwrap();
        assert_eq!(back.ar_coeffs(), model.ar_coeffs());
    }

    #[test]
    fn state_space_m1() {
        let ss = state_space(&m1());
        assert_eq!(ss.a_mat, mat(2, &[-3.0, -1.0, 0.0, -2.0]));
        assert_eq!(ss.c_mat, Mat::identity(2, 2));
        assert_eq!(ss.b_mat, -Mat::identity(2, 2));
    }

    #[test]
    fn state_space_m2() {
        let ss = state_space(&m2());
        assert_eq!(ss.a_mat, mat(2, &[0.0, 1.0, -2.0, -3.0]));
        assert_eq!(ss.c_mat, Mat::from_row_slice(1, 2, &[1.0, 0.0]));
        assert_eq!(ss.b_mat, Mat::from_column_slice(2, 1, &[0.0, -1.0]));
    }

    #[test]
    fn state_space_p2_q1_follows_recursion() {
        // Q(z) = b0 z + b1: β_1 = -B_0, β_2 = -A_1 β_1 - B_1.
        let (a1, a2, b0, b1) = (3.0, 2.0, 0.7, 1.3);
        let model = McarmaModel::new(2, 1, vec![mat(1, &[a1]), mat(1, &[a2])], vec![mat(1, &[b0]), mat(1, &[b1])], mat(1, &[1.0])).unwrap();
        let ss = state_space(&model);
        assert!((ss.b_mat[(0, 0)] + b0).abs() < 1e-15);
        assert!((ss.b_mat[(1, 0)] - (a1 * b0 - b1)).abs() < 1e-15);
    }

    #[test]
    fn transfer_function_is_minus_p_inverse_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(d, p, q) in &[(1, 3, 2), (2, 2, 1), (3, 2, 0)] {
            let model = McarmaModel::random_stable(&mut rng, d, p, q);
            let ss = state_space(&model);
            let z = Complex64::new(0.3, 1.1);
            let n = model.pd();
            let resolvent = (CMat::identity(n, n) * z - linalg::to_complex(&ss.a_mat)).try_inverse().unwrap();
            let lhs = linalg::to_complex(&ss.c_mat) * resolvent * linalg::to_complex(&ss.b_mat);
            let pz = model.ar_polynomial().eval(z);
            let rhs = -pz.lu().solve(&model.ma_polynomial().eval(z)).unwrap();
            assert!(rel_diff_c(&lhs, &rhs, 1e-300) < 1e-11);
        }
    }

    #[test]
    fn det_poly_examples() {
        let m1d = det_poly(&m1());
        for (got, want) in m1d.coeffs().iter().zip([6.0, 5.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(det_poly(&m2()).coeffs(), &[2.0, 3.0, 1.0]);
        let z_i = McarmaModel::new_unchecked(1, 0, vec![Mat::zeros(2, 2)], vec![Mat::identity(2, 2)], Mat::identity(2, 2)).unwrap();
        let dz = det_poly(&z_i);
        assert!(dz.coeffs()[0].abs() < 1e-14 && dz.coeffs()[1].abs() < 1e-14);
        assert_eq!(dz.coeffs()[2], 1.0);
    }

    #[test]
    fn adjugate_q_examples() {
        let s = adjugate_q(&m1());
        assert!(rel_diff(&s.coeffs()[1], &Mat::identity(2, 2), 1.0) < 1e-13);
        assert!(rel_diff(&s.coeffs()[0], &mat(2, &[2.0, -1.0, 0.0, 3.0]), 1.0) < 1e-13);
        let s2 = adjugate_q(&m2());
        assert_eq!(s2.coeffs().len(), 1);
        assert_eq!(s2.coeffs()[0][(0, 0)], 1.0);
        let model = McarmaModel::new(3, 2, vec![mat(1, &[6.0]), mat(1, &[11.0]), mat(1, &[6.0])], vec![mat(1, &[1.0]), mat(1, &[2.0]), mat(1, &[3.0])], mat(1, &[1.0])).unwrap();
        let s3: Vec<f64> = adjugate_q(&model).coeffs().iter().map(|m| m[(0, 0)]).collect();
        assert_eq!(s3, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn s_tilde_m1() {
        let st = s_tilde(&m1());
        assert_eq!(st.len(), 3);
        assert!(rel_diff(&st[2], &(-Mat::identity(2, 2)), 1.0) < 1e-13);
        assert!(rel_diff(&st[1], &mat(2, &[0.0, 1.0, -1.0, 0.0]), 1.0) < 1e-13);
        assert!(rel_diff(&st[0], &mat(2, &[5.0, -3.0, -3.0, 9.0]), 1.0) < 1e-13);
        assert_eq!(s_tilde(&m2())[0][(0, 0)], 1.0);
    }

    #[test]
    fn s_tilde_symmetry_and_top_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(d, p, q) in &[(1, 3, 1), (2, 2, 1), (3, 2, 1), (2, 3, 0)] {
            let model = McarmaModel::random_stable(&mut rng, d, p, q);
            let st = s_tilde(&model);
            for (j, m) in st.iter().enumerate() {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(m, &(m.transpose() * sign));
                if d == 1 && j % 2 == 1 {
                    assert_eq!(m[(0, 0)], 0.0);
                }
            }
            let top = (d - 1) * p + q;
            let sign = if top % 2 == 0 { 1.0 } else { -1.0 };
            assert!(rel_diff(&st[2 * top], &(model.leading_noise() * sign), 1.0) < 1e-10);
            let s = adjugate_q(&model);
            assert!(rel_diff(&s.coeffs()[top], &model.ma_coeffs()[0], 1.0) < 1e-10);
        }
    }

    #[test]
    fn repeated_root_is_clustered() {
        let model = McarmaModel::new(2, 0, vec![mat(1, &[2.0]), mat(1, &[1.0])], vec![mat(1, &[1.0])], mat(1, &[1.0])).unwrap();
        let roots = char_roots(&model).unwrap();
        assert_eq!(roots.roots.len(), 1);
        assert_eq!(roots.roots[0].1, 2);
        assert!((roots.roots[0].0 + 1.0).norm() < 1e-12);
    }

    #[test]
    fn near_clusters_are_ambiguous() {
        let raw = [Complex64::new(-1.0, 0.0), Complex64::new(-1.0 - 5e-7, 0.0)];
        assert!(matches!(RootSet::cluster(&raw), Err(Error::RootClusterAmbiguous { .. })));
    }

    #[test]
    fn invariants_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(d, p, q) in &[(1, 1, 0), (2, 2, 1), (3, 3, 2), (3, 2, 0), (2, 3, 1)] {
            let model = McarmaModel::random_stable(&mut rng, d, p, q);
            let roots = char_roots(&model).unwrap();
            assert_eq!(roots.total_multiplicity(), model.pd());
            // conjugate pairs
            for (r, m) in &roots.roots {
                if r.im != 0.0 {
                    assert!(roots.roots.iter().any(|(s, n)| (s - r.conj()).norm() < 1e-9 && n == m));
                }
            }
            // eigenvalues of the companion-block matrix
            let eig: Vec<Complex64> = state_space(&model).a_mat.complex_eigenvalues().iter().cloned().collect();
            let dist = multiset_distance(&eig, &roots.expanded());
            assert!(dist < 1e-6, "{d} {p} {q}: {dist} eig={eig:?} roots={:?} det={:?}", roots, det_poly(&model));
            // det P vanishes at the roots
            let det = det_poly(&model);
            let scale: f64 = det.coeffs().iter().map(|c| c.abs()).sum::<f64>() * roots.max_modulus().max(1.0).powi(model.pd() as i32);
            for (r, _) in &roots.roots {
                assert!(det.eval_complex(*r).norm() <= 1e-8 * scale);
            }
            // det P matches the pointwise determinant, adj P · P = det P · I
            let ar = model.ar_polynomial();
            let adj = ar.adjugate();
            for k in 0..10 {
                let z = Complex64::new(-1.0 + 0.37 * k as f64, 0.9 - 0.21 * k as f64);
                let pz = ar.eval(z);
                let dz = pz.determinant();
                assert!((det.eval_complex(z) - dz).norm() <= 1e-10 * dz.norm().max(1e-300));
                let lhs = adj.eval(z) * &pz;
                let rhs = CMat::identity(model.d(), model.d()) * dz;
                assert!(rel_diff_c(&lhs, &rhs, 1e-300) < 1e-9);
            }
        }
    }
}
