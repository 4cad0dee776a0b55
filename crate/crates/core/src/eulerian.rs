//! Eulerian numbers and the series coefficients of `1/(1 - e^{z+iω})`.
//!
//! The derivatives of `h(z) = 1/(1 - e^{z+iω})` are
//! `h^{(n)}(z) = y A_n(y) / (1-y)^{n+1}` with `y = e^{z+iω}` and `A_n` the
//! Eulerian polynomial, so the Taylor coefficients at `z = 0` have the closed
//! form `n! c̃_n(ω) = e^{iω} A_n(e^{iω}) / (1 - e^{iω})^{n+1}`.
//!
//! Grouping the symmetric coefficients of `A_{2k-1}` and of the reduced
//! polynomial `Ã_{2k-1} = A_{2k} / (1+y)` by Chebyshev polynomials gives the
//! integer polynomials `q_{k-1}` and `r_{k-1}` in `cos ω`:
//!
//! ```text
//! (2k-1)! [2(1-cos ω)]^k     c̃_{2k-1}(ω) = (-1)^k q_{k-1}(cos ω)
//! (2k)!   [2(1-cos ω)]^{k+1} c̃_{2k}(ω)   = (-1)^k i sin ω r_{k-1}(cos ω)
//! ```
//!
//! Their roots `x_j` give `ξ_j = 1 - x_j`, and each `ξ` is mapped to the root
//! `η(ξ)` of `η² - 2(1-ξ)η + 1 = 0` inside the unit disc.
//!
//! Root reality is not assumed anywhere: `ξ` and `η` are complex throughout.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::poly;

/// Largest row of the Eulerian triangle that is ever built.
pub const MAX_ROW: usize = 64;

/// Largest `k` accepted by [`qr_polys`] and [`xi_roots`].
pub const MAX_K: usize = 32;

/// Exact Eulerian numbers `A(n, k)`, `1 ≤ n ≤ n_max`, `0 ≤ k ≤ n-1`, plus the
/// reduced rows `Ã(2k-1, ·)` defined by `A_{2k}(y) = (1+y) Ã_{2k-1}(y)`.
#[derive(Clone, Debug)]
pub struct EulerianTable {
    rows: Vec<Vec<BigInt>>,
    reduced: Vec<Vec<BigInt>>,
}

impl EulerianTable {
    pub fn new(n_max: usize) -> Result<Self> {
        if !(1..=MAX_ROW).contains(&n_max) {
            return Err(Error::InvalidArgument(format!("n_max must be in 1..={MAX_ROW}, got {n_max}")));
        }
        let mut rows: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
        for n in 1..n_max {
            let prev = &rows[n - 1];
            // A(n+1, k) = (k+1) A(n, k) + (n+1-k) A(n, k-1)
            let next: Vec<BigInt> = (0..=n)
                .map(|k| {
                    let mut v = BigInt::zero();
                    if k < n {
                        v += &prev[k] * (k + 1);
                    }
                    if k >= 1 {
                        v += &prev[k - 1] * (n + 1 - k);
                    }
                    v
                })
                .collect();
            rows.push(next);
        }
        let reduced = (1..=n_max / 2)
            .map(|k| {
                let row = &rows[2 * k - 1];
                // Synthetic division by (1 + y), ascending powers.
                let mut quotient = Vec::with_capacity(2 * k - 1);
                let mut carry = BigInt::zero();
                for c in row.iter().take(2 * k - 1) {
                    carry = c - carry;
                    quotient.push(carry.clone());
                }
                debug_assert_eq!(row[2 * k - 1], carry, "A_2k(-1) must vanish");
                quotient
            })
            .collect();
        Ok(Self { rows, reduced })
    }

    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    /// Row `A(n, 0..n)`.
    pub fn row(&self, n: usize) -> &[BigInt] {
        &self.rows[n - 1]
    }

    pub fn get(&self, n: usize, k: usize) -> &BigInt {
        &self.rows[n - 1][k]
    }

    /// Row `Ã(2k-1, 0..2k-1)`.
    pub fn reduced_row(&self, k: usize) -> &[BigInt] {
        &self.reduced[k - 1]
    }

    /// `A_n(y)` evaluated in floating point.
    pub fn eval(&self, n: usize, y: Complex64) -> Complex64 {
        poly::cpoly_eval(&self.row_f64(n), y)
    }

    fn row_f64(&self, n: usize) -> Vec<Complex64> {
        self.row(n)
            .iter()
            .map(|a| Complex64::new(a.to_f64().expect("fits in f64 for n <= 64"), 0.0))
            .collect()
    }
}

/// The shared 64-row table used by the floating-point evaluators.
pub fn table() -> &'static EulerianTable {
    static TABLE: OnceLock<EulerianTable> = OnceLock::new();
    TABLE.get_or_init(|| EulerianTable::new(MAX_ROW).expect("valid size"))
}

pub fn eulerian_table(n_max: usize) -> Result<EulerianTable> {
    EulerianTable::new(n_max)
}

fn factorial_f64(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `c̃_k(ω)`: the `k`-th Taylor coefficient of `1/(1 - e^{z+iω})` at `z = 0`.
///
/// Evaluated from the Eulerian closed form; relative accuracy degrades roughly
/// like `|ω|^{-(k+1)}` as `ω → 0`.
pub fn c_tilde(k: usize, omega: f64) -> Result<Complex64> {
    if omega == 0.0 {
        return Err(Error::OmegaZero);
    }
    if k > MAX_ROW {
        return Err(Error::OrderTooLarge { order: k, max: MAX_ROW });
    }
    let y = Complex64::from_polar(1.0, omega);
    let one = Complex64::new(1.0, 0.0);
    if k == 0 {
        return Ok(one / (one - y));
    }
    let numer = y * table().eval(k, y);
    Ok(numer / ((one - y).powu(k as u32 + 1) * factorial_f64(k)))
}

/// Coefficients `d̃_k(ω)` of `e^{z-iω}/(1 - e^{z-iω})`, equal to `(-1)^{k+1} c̃_k(ω)`.
pub fn d_tilde(k: usize, omega: f64) -> Result<Complex64> {
    let c = c_tilde(k, omega)?;
    Ok(if k.is_multiple_of(2) { -c } else { c })
}

/// `Σ_{m≥1} m^n y^m`, i.e. `y A_n(y)/(1-y)^{n+1}` for `n ≥ 1` and `y/(1-y)` for `n = 0`.
pub(crate) fn polylog_sum(n: usize, y: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if n == 0 {
        return y / (one - y);
    }
    y * table().eval(n, y) / (one - y).powu(n as u32 + 1)
}

/// Polynomial with arbitrary-precision integer coefficients, ascending powers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    /// Chebyshev polynomial of the first kind, `T_n(cos θ) = cos nθ`.
    pub fn chebyshev_t(n: usize) -> Self {
        let mut prev = vec![BigInt::one()];
        if n == 0 {
            return Self::new(prev);
        }
        let mut cur = vec![BigInt::zero(), BigInt::one()];
        for _ in 1..n {
            let mut next = vec![BigInt::zero(); cur.len() + 1];
            for (i, c) in cur.iter().enumerate() {
                next[i + 1] += c * 2;
            }
            for (i, c) in prev.iter().enumerate() {
                next[i] -= c;
            }
            prev = cur;
            cur = next;
        }
        Self::new(cur)
    }

    fn add_scaled(&mut self, other: &Self, factor: &BigInt) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), BigInt::zero());
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            self.coeffs[i] += c * factor;
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().expect("finite")).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.to_f64().iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Complex roots: balanced companion eigenvalues, then Newton steps whose
    /// residuals are evaluated exactly.
    pub fn roots(&self) -> Vec<Complex64> {
        let c: Vec<Complex64> = self.to_f64().into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        poly::roots_of(&c, true)
            .into_iter()
            .map(|r| exact::polish(&self.coeffs, r))
            .collect()
    }

    /// Coefficients in descending powers.
    pub fn descending(&self) -> Vec<BigInt> {
        self.coeffs.iter().rev().cloned().collect()
    }
}

/// Newton polishing with exact residuals.
///
/// A double-precision root is an exact dyadic rational `w / 2^s`, so `p` and
/// `p'` can be evaluated without rounding on Gaussian big integers. Only the
/// final Newton step is rounded back to `f64`.
mod exact {
    use num_bigint::BigInt;
    use num_complex::Complex64;
    use num_traits::{Signed, ToPrimitive, Zero};

    #[derive(Clone)]
    struct GaussInt {
        re: BigInt,
        im: BigInt,
    }

    impl GaussInt {
        fn mul(&self, o: &Self) -> Self {
            Self {
                re: &self.re * &o.re - &self.im * &o.im,
                im: &self.re * &o.im + &self.im * &o.re,
            }
        }
    }

    /// `x = m · 2^e` with integer `m`.
    fn decompose(x: f64) -> (BigInt, i64) {
        if x == 0.0 {
            return (BigInt::zero(), 0);
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let m = BigInt::from(mant);
        (if x < 0.0 { -m } else { m }, e)
    }

    /// `a / b` as `f64` for big integers (`b > 0`).
    fn ratio(a: &BigInt, b: &BigInt) -> f64 {
        if a.is_zero() {
            return 0.0;
        }
        let shift = 64 + b.bits() as i64 - a.abs().bits() as i64;
        let q = if shift >= 0 { (a << shift as usize) / b } else { a / (b << (-shift) as usize) };
        q.to_f64().unwrap_or(0.0) * 2f64.powi(-shift as i32)
    }

    pub(super) fn polish(coeffs: &[BigInt], mut root: Complex64) -> Complex64 {
        let n = coeffs.len().saturating_sub(1);
        if n == 0 || !root.re.is_finite() || !root.im.is_finite() {
            return root;
        }
        for _ in 0..6 {
            let (mr, er) = decompose(root.re);
            let (mi, ei) = decompose(root.im);
            let s = (-er.min(ei)).max(0);
            // w = root · 2^s, integral.
            let w = GaussInt { re: mr << (er + s) as usize, im: mi << (ei + s) as usize };
            // Horner on p(w/2^s)·2^{s n} and p'(w/2^s)·2^{s (n-1)}.
            let mut acc = GaussInt { re: coeffs[n].clone(), im: BigInt::zero() };
            let mut dacc = GaussInt { re: BigInt::zero(), im: BigInt::zero() };
            for j in (0..n).rev() {
                // p'(z) accumulates alongside p(z): d <- d z + p.
                let lift = (n - 1 - j) as i64 * s;
                dacc = dacc.mul(&w);
                dacc.re += &acc.re << lift as usize;
                dacc.im += &acc.im << lift as usize;
                acc = acc.mul(&w);
                acc.re += &coeffs[j] << ((n - j) as i64 * s) as usize;
            }
            // Both carry 2^{s(n-1)} relative to p'(z); acc carries one more 2^s.
            // step = p/p' = acc / (dacc · 2^s)
            let den = &dacc.re * &dacc.re + &dacc.im * &dacc.im;
            if den.is_zero() {
                break;
            }
            let den = den << s as usize;
            let num_re = &acc.re * &dacc.re + &acc.im * &dacc.im;
            let num_im = &acc.im * &dacc.re - &acc.re * &dacc.im;
            let step = Complex64::new(ratio(&num_re, &den), ratio(&num_im, &den));
            root -= step;
            if step.norm() <= 1e-17 * root.norm() {
                break;
            }
        }
        root
    }
}

/// Combines a symmetric coefficient row into `scale·[Σ_{i<k-1} row[i] T_{k-1-i} + ½ row[k-1]]`.
fn chebyshev_combination(row: &[BigInt], k: usize, scale: i64) -> IntPolynomial {
    let mut acc = IntPolynomial::new(vec![]);
    for (i, a) in row.iter().enumerate().take(k - 1) {
        acc.add_scaled(&IntPolynomial::chebyshev_t(k - 1 - i), &(a * scale));
    }
    // scale is even, so the half-weighted middle coefficient stays integral.
    acc.add_scaled(&IntPolynomial::chebyshev_t(0), &(&row[k - 1] * (scale / 2)));
    acc
}

/// The pair `(q_{k-1}, r_{k-1})`, exact.
pub fn qr_polys(k: usize) -> Result<(IntPolynomial, IntPolynomial)> {
    if !(1..=MAX_K).contains(&k) {
        return Err(Error::InvalidArgument(format!("k must be in 1..={MAX_K}, got {k}")));
    }
    let t = table();
    let q = chebyshev_combination(t.row(2 * k - 1), k, 2);
    let r = chebyshev_combination(t.reduced_row(k), k, 4);
    Ok((q, r))
}

/// Which polynomial family a set of `ξ` roots belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// `ξ_{2k-1, j}`, from `q_{k-1}`.
    Odd,
    /// `ξ_{2k, j}`, from `r_{k-1}`.
    Even,
}

/// `ξ_{·, j} = 1 - x_j` where `x_j` are the roots of `q_{k-1}` or `r_{k-1}`.
pub fn xi_roots(k: usize, which: Parity) -> Result<Vec<Complex64>> {
    let (q, r) = qr_polys(k)?;
    let p = match which {
        Parity::Odd => q,
        Parity::Even => r,
    };
    let one = Complex64::new(1.0, 0.0);
    let mut xi: Vec<Complex64> = p.roots().into_iter().map(|x| one - x).collect();
    xi.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    Ok(xi)
}

/// The root of `η² - 2(1-ξ)η + 1 = 0` strictly inside the unit disc.
pub fn eta(xi: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let s = (xi * xi - xi * 2.0).sqrt();
    let a = one - xi + s;
    let b = one - xi - s;
    // The two roots multiply to 1; take the larger one exactly and invert it.
    let big = if a.norm() >= b.norm() { a } else { b };
    if big.norm() - 1.0 <= 1e-12 {
        return Err(Error::UnitModulusEta { xi });
    }
    Ok(one / big)
}

/// Matched `ξ` roots and their `η` images.
#[derive(Clone, Debug)]
pub struct XiEta {
    pub xi: Vec<Complex64>,
    pub eta: Vec<Complex64>,
}

impl XiEta {
    pub fn new(k: usize, which: Parity) -> Result<Self> {
        let xi = xi_roots(k, which)?;
        let eta = xi.iter().map(|&x| eta(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self { xi, eta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn factorial(n: usize) -> BigInt {
        (1..=n).fold(BigInt::one(), |acc, i| acc * i)
    }

    #[test]
    fn small_rows() {
        let t = EulerianTable::new(6).unwrap();
        assert_eq!(t.row(3), big(&[1, 4, 1]).as_slice());
        assert_eq!(t.row(4), big(&[1, 11, 11, 1]).as_slice());
        assert_eq!(t.row(4).iter().sum::<BigInt>(), BigInt::from(24));
        assert_eq!(t.reduced_row(2), big(&[1, 10, 1]).as_slice());
    }

    #[test]
    fn table_invariants_to_64() {
        let t = table();
        for n in 1..=MAX_ROW {
            let row = t.row(n);
            assert_eq!(row.len(), n);
            assert!(row[0].is_one() && row[n - 1].is_one());
            for k in 0..n {
                assert_eq!(row[k], row[n - 1 - k]);
            }
            assert_eq!(row.iter().sum::<BigInt>(), factorial(n));
        }
        for k in 1..=MAX_ROW / 2 {
            // (1 + y) Ã_{2k-1}(y) == A_{2k}(y)
            let red = t.reduced_row(k);
            let mut prod = vec![BigInt::zero(); red.len() + 1];
            for (i, c) in red.iter().enumerate() {
                prod[i] += c;
                prod[i + 1] += c;
            }
            assert_eq!(prod.as_slice(), t.row(2 * k));
        }
    }

    #[test]
    fn table_size_is_checked() {
        assert!(EulerianTable::new(0).is_err());
        assert!(EulerianTable::new(65).is_err());
    }

    #[test]
    fn c_tilde_examples() {
        let c1 = c_tilde(1, PI).unwrap();
        assert!((c1 - Complex64::new(-0.25, 0.0)).norm() < 1e-15);
        let c2 = c_tilde(2, PI / 2.0).unwrap();
        assert!((c2 - Complex64::new(0.0, -0.25)).norm() < 1e-15);
        let c3 = c_tilde(3, PI).unwrap();
        assert!((c3 - Complex64::new(1.0 / 48.0, 0.0)).norm() < 1e-15);
        assert!(matches!(c_tilde(2, 0.0), Err(Error::OmegaZero)));
    }

    #[test]
    fn even_coefficients_are_imaginary() {
        for k in 1..20 {
            let c = c_tilde(2 * k, 0.7).unwrap();
            assert!(c.re.abs() <= 1e-12 * c.norm());
        }
    }

    #[test]
    fn d_tilde_matches_its_own_series() {
        // d̃_k are the Taylor coefficients of e^{z-iω}/(1-e^{z-iω}) = -1 + 1/(1 - e^{z-iω}).
        let omega = 1.3;
        for k in 0..8 {
            let direct = c_tilde(k, -omega).unwrap() - if k == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            let via = d_tilde(k, omega).unwrap();
            assert!((direct - via).norm() <= 1e-13 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn polylog_sum_matches_direct_sum() {
        let y = Complex64::from_polar(0.6, 0.8);
        for n in 0..6 {
            let direct: Complex64 = (1..400).map(|m| y.powu(m) * (m as f64).powi(n as i32)).sum();
            let closed = polylog_sum(n, y);
            assert!((direct - closed).norm() <= 1e-12 * closed.norm());
        }
    }

    #[test]
    fn chebyshev_polynomials() {
        assert_eq!(IntPolynomial::chebyshev_t(3).coeffs(), big(&[0, -3, 0, 4]).as_slice());
        let t7 = IntPolynomial::chebyshev_t(7);
        for &theta in &[0.3, 1.1, 2.9] {
            assert!((t7.eval(f64::cos(theta)) - (7.0 * theta).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn q_and_r_match_printed_table() {
        let q_rows: [&[i64]; 6] = [
            &[1],
            &[2, 4],
            &[4, 52, 64],
            &[8, 480, 2376, 2176],
            &[16, 4016, 58416, 173456, 126976],
            &[32, 32576, 1221056, 8781376, 18560416, 11321344],
        ];
        let r_rows: [&[i64]; 6] = [
            &[2],
            &[4, 20],
            &[8, 224, 488],
            &[16, 1968, 16176, 22160],
            &[32, 16192, 374592, 1621312, 1616672],
            &[64, 130624, 7586944, 77577344, 220729664, 172976960],
        ];
        for k in 1..=6 {
            let (q, r) = qr_polys(k).unwrap();
            assert_eq!(q.descending(), big(q_rows[k - 1]), "q_{}", k - 1);
            assert_eq!(r.descending(), big(r_rows[k - 1]), "r_{}", k - 1);
        }
    }

    #[test]
    fn degrees_and_leading_coefficients() {
        for k in 1..=MAX_K {
            let (q, r) = qr_polys(k).unwrap();
            assert_eq!(q.degree(), Some(k - 1));
            assert_eq!(r.degree(), Some(k - 1));
            assert_eq!(q.leading().unwrap(), &(BigInt::one() << (k - 1)));
            assert_eq!(r.leading().unwrap(), &(BigInt::one() << k));
        }
        assert!(qr_polys(0).is_err() && qr_polys(33).is_err());
    }

    #[test]
    fn lemma_identities_hold() {
        let mut omega = 0.1f64;
        for _ in 0..50 {
            omega = (omega * 7.31 + 0.57) % 6.2 - 3.1;
            if omega.abs() < 0.05 {
                continue;
            }
            let (c, s) = (omega.cos(), omega.sin());
            let base = 2.0 * (1.0 - c);
            for k in 1..=12 {
                let (q, r) = qr_polys(k).unwrap();
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let lhs = c_tilde(2 * k - 1, omega).unwrap() * factorial_f64(2 * k - 1) * base.powi(k as i32);
                let rhs = sign * q.eval(c);
                assert!((lhs - Complex64::new(rhs, 0.0)).norm() <= 1e-10 * rhs.abs(), "odd k={k} omega={omega}");
                let lhs = c_tilde(2 * k, omega).unwrap() * factorial_f64(2 * k) * base.powi(k as i32 + 1);
                let rhs = Complex64::new(0.0, sign * s * r.eval(c));
                assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm(), "even k={k} omega={omega}");
            }
        }
    }

    #[test]
    fn c_tilde_matches_cauchy_quadrature() {
        let nodes = 256;
        for &omega in &[0.4f64, -1.0, 2.0, 3.0] {
            let radius = omega.abs() / 2.0;
            for k in 0..=10 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..nodes {
                    let z = Complex64::from_polar(radius, 2.0 * PI * j as f64 / nodes as f64);
                    let f = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) - (z + Complex64::new(0.0, omega)).exp());
                    acc += f / z.powu(k as u32);
                }
                let quad = acc / nodes as f64;
                let closed = c_tilde(k, omega).unwrap();
                assert!((quad - closed).norm() <= 1e-8 * closed.norm(), "k={k} omega={omega}");
            }
        }
    }

    #[test]
    fn xi_examples() {
        let xi = xi_roots(2, Parity::Odd).unwrap();
        assert_eq!(xi.len(), 1);
        assert!((xi[0] - Complex64::new(3.0, 0.0)).norm() < 1e-12);
        let xi3 = xi_roots(3, Parity::Odd).unwrap();
        assert!((xi3[0].re - 12.623).abs() < 1e-3 && (xi3[1].re - 2.377).abs() < 1e-3);
        let (_, r3) = qr_polys(4).unwrap();
        let mut xs: Vec<f64> = r3.roots().iter().map(|z| z.re).collect();
        xs.sort_by(f64::total_cmp);
        for (got, want) in xs.iter().zip([-114.258, -7.014, -1.728]) {
            assert!((got - want).abs() < 1e-3);
        }
        assert!(xi_roots(1, Parity::Odd).unwrap().is_empty());
    }

    #[test]
    fn xi_products() {
        for k in 2..=MAX_K {
            let odd: Complex64 = xi_roots(k, Parity::Odd).unwrap().iter().product();
            let want = factorial_f64(2 * k - 1) / 2f64.powi(k as i32 - 1);
            assert!((odd - Complex64::new(want, 0.0)).norm() <= 1e-9 * want);
            let even: Complex64 = xi_roots(k, Parity::Even).unwrap().iter().product();
            let want = factorial_f64(2 * k) / 2f64.powi(k as i32);
            assert!((even - Complex64::new(want, 0.0)).norm() <= 1e-9 * want);
        }
    }

    #[test]
    fn no_roots_in_the_unit_interval() {
        for k in 2..=12 {
            let (q, r) = qr_polys(k).unwrap();
            for x in q.roots().into_iter().chain(r.roots()) {
                let real = x.im.abs() <= 1e-9 * x.norm().max(1.0);
                assert!(!(real && x.re > -1.0 && x.re < 1.0), "k={k} root {x}");
            }
        }
    }

    #[test]
    fn eta_examples() {
        let e3 = eta(Complex64::new(3.0, 0.0)).unwrap();
        assert!((e3 - Complex64::new(-2.0 + 3f64.sqrt(), 0.0)).norm() < 1e-15);
        // Largest root for k = 5: xi = 1 - x with x = (-13 - sqrt(105)) / 2.
        let xi = 1.0 + (13.0 + 105f64.sqrt()) / 2.0;
        let e = eta(Complex64::new(xi, 0.0)).unwrap();
        let want = 1.0 - xi + (xi * xi - 2.0 * xi).sqrt();
        assert!((e.re - want).abs() < 1e-12 * want.abs() && e.im == 0.0);
        assert!((e.re + 0.0430963).abs() < 1e-7);
        let z = Complex64::new(3.0, 4.0);
        assert!((eta(z.conj()).unwrap() - eta(z).unwrap().conj()).norm() < 1e-15);
        assert!(eta(z).unwrap().norm() < 1.0);
        assert!(matches!(eta(Complex64::new(0.0, 0.0)), Err(Error::UnitModulusEta { .. })));
        assert!(matches!(eta(Complex64::new(2.0, 0.0)), Err(Error::UnitModulusEta { .. })));
        assert!(matches!(eta(Complex64::new(1.0, 0.0)), Err(Error::UnitModulusEta { .. })));
    }

    #[test]
    fn eta_solves_its_quadratic() {
        for xi in xi_roots(6, Parity::Odd).unwrap() {
            let e = eta(xi).unwrap();
            let res = e * e - (Complex64::new(1.0, 0.0) - xi) * e * 2.0 + 1.0;
            assert!(res.norm() < 1e-12 * xi.norm());
            assert!(e.norm() < 1.0);
        }
    }
}
