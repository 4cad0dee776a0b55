//! Exact Gaussian simulation of the sampled process through the state space,
//! and a Monte Carlo check of sample autocovariances against the analytic ones.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter_ma;
use crate::linalg::{self, Mat};
use crate::model::{self, McarmaModel, StateSpace};
use crate::spectral::RationalSpectrum;

/// Stationary covariance `Γ_G` of the state, `𝒜Γ_G + Γ_G𝒜ᵀ + ℬΣ_Lℬᵀ = 0`.
#[derive(Clone, Debug)]
pub struct StationaryCov {
    pub gamma_g: Mat,
    /// `‖𝒜Γ_G + Γ_G𝒜ᵀ + ℬΣ_Lℬᵀ‖` relative to `‖ℬΣ_Lℬᵀ‖ + 2‖𝒜‖‖Γ_G‖`.
    pub residual: f64,
}

/// Solves the continuous Lyapunov equation by Kronecker vectorization.
pub fn stationary_state_cov(ss: &StateSpace, sigma_l: &Mat) -> Result<StationaryCov> {
    let a = &ss.a_mat;
    let n = a.nrows();
    let rhs = &ss.b_mat * sigma_l * ss.b_mat.transpose();
    // Column-major vec: vec(AX + XAᵀ) = (I ⊗ A + A ⊗ I) vec(X).
    let id = Mat::identity(n, n);
    let op = id.kronecker(a) + a.kronecker(&id);
    let b = -DMatrix::from_column_slice(n * n, 1, rhs.as_slice());
    let sol = op
        .lu()
        .solve(&b)
        .ok_or(Error::LyapunovIllConditioned { residual: f64::INFINITY })?;
    let x = linalg::symmetric_part(&Mat::from_column_slice(n, n, sol.as_slice()));
    let res = (a * &x + &x * a.transpose() + &rhs).norm();
    let scale = rhs.norm() + 2.0 * a.norm() * x.norm();
    let residual = res / scale.max(f64::MIN_POSITIVE);
    if residual > 1e-7 {
        return Err(Error::LyapunovIllConditioned { residual });
    }
    let gamma_g = linalg::clip_psd(&x, x.norm())?;
    Ok(StationaryCov { gamma_g, residual })
}

/// `Γ(t) = 𝒞 e^{𝒜t} Γ_G 𝒞ᵀ` for `t ≥ 0`, transposed for negative `t`.
pub fn lyapunov_autocovariance(ss: &StateSpace, gamma_g: &Mat, t: f64) -> Mat {
    if t < 0.0 {
        return lyapunov_autocovariance(ss, gamma_g, -t).transpose();
    }
    &ss.c_mat * (&ss.a_mat * t).exp() * gamma_g * ss.c_mat.transpose()
}

/// One-step law of the sampled state: `G_{k+1} = T G_k + ε_k`, `ε_k ~ N(0, Σ_Δ)`.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub transition: Mat,
    pub noise_cov: Mat,
}

/// `T = e^{𝒜Δ}` and `Σ_Δ = Γ_G - TΓ_GTᵀ` (symmetrized and eigen-clipped).
pub fn discretize(ss: &StateSpace, gamma_g: &Mat, delta: f64) -> Result<Discretization> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("sampling step must be positive, got {delta}")));
    }
    let transition = (&ss.a_mat * delta).exp();
    let raw = gamma_g - &transition * gamma_g * transition.transpose();
    let noise_cov = linalg::clip_psd(&raw, gamma_g.norm())?;
    Ok(Discretization { transition, noise_cov })
}

/// A linear Gaussian chain `G_{k+1} = T G_k + L ε_k`, `Y_k = C G_k`, with
/// `G_0 = L_0 ε_{-1}` and standard normal `ε`.
#[derive(Clone, Debug)]
pub struct GaussianChain {
    transition: Mat,
    noise_factor: Mat,
    init_factor: Mat,
    observe: Mat,
}

impl GaussianChain {
    pub fn from_model(model: &McarmaModel, delta: f64) -> Result<Self> {
        let ss = model::state_space(model);
        let cov = stationary_state_cov(&ss, model.sigma_l())?;
        let disc = discretize(&ss, &cov.gamma_g, delta)?;
        Ok(Self {
            transition: disc.transition,
            noise_factor: linalg::psd_factor(&disc.noise_cov),
            init_factor: linalg::psd_factor(&cov.gamma_g),
            observe: ss.c_mat,
        })
    }

    /// `T = 0`: i.i.d. `N(0, cov)` observations.
    pub fn white_noise(cov: &Mat) -> Self {
        let d = cov.nrows();
        let factor = linalg::psd_factor(cov);
        Self { transition: Mat::zeros(d, d), noise_factor: factor.clone(), init_factor: factor, observe: Mat::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.observe.nrows()
    }

    /// `n` observations as the columns of a `d × n` matrix.
    ///
    /// The generator is ChaCha8 seeded with `seed` on stream `replication_id`,
    /// so every `(seed, replication_id)` pair gives a reproducible, independent path.
    pub fn run(&self, n: usize, seed: u64, replication_id: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replication_id);
        let k = self.transition.nrows();
        let draw = |rng: &mut ChaCha8Rng| {
            nalgebra::DVector::from_iterator(k, (0..k).map(|_| StandardNormal.sample(rng)))
        };
        let mut state = &self.init_factor * draw(&mut rng);
        let mut obs = Mat::zeros(self.dim(), n);
        for col in 0..n {
            obs.set_column(col, &(&self.observe * &state));
            state = &self.transition * &state + &self.noise_factor * draw(&mut rng);
        }
        obs
    }
}

/// Equidistant observations `Y_{kΔ}`, `k = 0..n-1`, and what produced them.
#[derive(Clone, Debug)]
pub struct SimulationPath {
    pub delta: f64,
    pub n: usize,
    pub seed: u64,
    pub replication_id: u64,
    /// `d × n`.
    pub obs: Mat,
}

pub fn simulate_path(model: &McarmaModel, delta: f64, n: usize, seed: u64, replication_id: u64) -> Result<SimulationPath> {
    if n == 0 {
        return Err(Error::InvalidArgument("path length must be at least 1".into()));
    }
    let chain = GaussianChain::from_model(model, delta)?;
    Ok(SimulationPath { delta, n, seed, replication_id, obs: chain.run(n, seed, replication_id) })
}

/// Replications `0..count` in parallel; identical output for any thread count.
pub fn simulate_replications(model: &McarmaModel, delta: f64, n: usize, seed: u64, count: u64) -> Result<Vec<SimulationPath>> {
    if n == 0 {
        return Err(Error::InvalidArgument("path length must be at least 1".into()));
    }
    let chain = GaussianChain::from_model(model, delta)?;
    Ok((0..count)
        .into_par_iter()
        .map(|r| SimulationPath { delta, n, seed, replication_id: r, obs: chain.run(n, seed, r) })
        .collect())
}

/// `Γ̂(h) = (1/n) Σ_k Y_{k+h} Y_kᵀ` for `h = 0..=h_max`.
pub fn sample_acov(obs: &Mat, h_max: usize) -> Result<Vec<Mat>> {
    let n = obs.ncols();
    if h_max * 10 >= n {
        return Err(Error::InvalidArgument(format!("h_max = {h_max} must be below n/10 = {}", n / 10)));
    }
    Ok((0..=h_max).map(|h| lagged_product(obs, h, 0, n) / n as f64).collect())
}

/// `Σ_{k=start}^{end-h-1} Y_{k+h} Y_kᵀ`.
fn lagged_product(obs: &Mat, h: usize, start: usize, end: usize) -> Mat {
    let d = obs.nrows();
    let mut acc = Mat::zeros(d, d);
    for k in start..end.saturating_sub(h) {
        acc += obs.column(k + h) * obs.column(k).transpose();
    }
    acc
}

/// Batches used for the dependence-aware standard errors.
pub const BATCHES: usize = 20;

/// Largest |z| that still passes.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub quantity: String,
    pub lag: usize,
    pub z: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerifyReport {
    fn from_checks(checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { checks, pass }
    }

    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

/// Componentwise z-scores of the sample autocovariances of `obs` against
/// `expected[h]`, with batch-means standard errors over [`BATCHES`] batches.
pub fn acov_z_scores(obs: &Mat, expected: &[Mat], name: &str) -> Result<Vec<Check>> {
    let h_max = expected.len().checked_sub(1).ok_or_else(|| Error::InvalidArgument("no lags to check".into()))?;
    let estimate = sample_acov(obs, h_max)?;
    let n = obs.ncols();
    let len = n / BATCHES;
    if len <= h_max {
        return Err(Error::InvalidArgument(format!("path of length {n} is too short for {BATCHES} batches")));
    }
    let d = obs.nrows();
    let mut checks = Vec::with_capacity(expected.len() * d * d);
    for (h, want) in expected.iter().enumerate() {
        let batches: Vec<Mat> = (0..BATCHES)
            .map(|b| lagged_product(obs, h, b * len, (b + 1) * len) / (len - h) as f64)
            .collect();
        for i in 0..d {
            for j in 0..d {
                let vals: Vec<f64> = batches.iter().map(|m| m[(i, j)]).collect();
                let mean = vals.iter().sum::<f64>() / BATCHES as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
                let se = (var / BATCHES as f64).sqrt();
                let diff = estimate[h][(i, j)] - want[(i, j)];
                let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
                checks.push(Check { quantity: format!("{name}[{i},{j}]"), lag: h, z, pass: z.abs() <= Z_LIMIT });
            }
        }
    }
    Ok(checks)
}

/// Simulates one path and checks the sample autocovariances of `Y` (lags
/// `0..=h_max`) and of the filtered `X` (lags `0..=max(h_max, pd)`) against
/// the analytic values.
pub fn verify_model(model: &McarmaModel, delta: f64, n: usize, seed: u64, h_max: usize) -> Result<VerifyReport> {
    let spectrum = RationalSpectrum::new(model)?;
    let path = simulate_path(model, delta, n, seed, 0)?;
    let expected_y: Vec<Mat> = (0..=h_max).map(|h| spectrum.autocovariance(delta * h as f64)).collect();
    let mut checks = acov_z_scores(&path.obs, &expected_y, "gamma_y")?;

    let filter = filter_ma::sampling_filter(&spectrum, delta)?;
    let x = filter.apply(&path.obs);
    let x_lags = h_max.max(model.pd());
    let expected_x = (0..=x_lags)
        .map(|h| filter_ma::filtered_acov(&spectrum, delta, h as isize))
        .collect::<Result<Vec<_>>>()?;
    checks.extend(acov_z_scores(&x, &expected_x, "gamma_x")?);
    Ok(VerifyReport::from_checks(checks))
}
