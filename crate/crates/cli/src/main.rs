//! `mcarma`: batch front end for the sampling pipeline.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 for numerical failure,
//! 4 when a verification or golden run reports FAIL.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mcarma::eulerian::{self, IntPolynomial};
use mcarma::filter_ma;
use mcarma::golden;
use mcarma::io::{self as mio, fmt_num};
use mcarma::linalg::{CMat, Mat};
use mcarma::model::McarmaModel;
use mcarma::simulate;
use mcarma::spectral::RationalSpectrum;
use mcarma::Error;
use num_complex::Complex64;

#[derive(Parser, Debug)]
#[command(name = "mcarma", version, about = "Spectra, filters and simulation of high-frequency sampled MCARMA processes")]
struct Cli {
    /// Model file (JSON with p, q, d, A, B, SigmaL).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Output file, written atomically. Standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format. Each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Model file checks.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Spectral densities on a frequency grid.
    Spectrum(SpectrumArgs),
    /// Laurent coefficients Θ_k of R(z) at infinity.
    Theta {
        /// Largest k.
        #[arg(long, default_value_t = 10)]
        order: usize,
    },
    /// Partial fraction coefficients α(ℓ, j) of R(z).
    Pfrac,
    /// Autocovariances of the sampled process, or of the filtered process with --filtered.
    Acov {
        #[arg(long)]
        delta: f64,
        /// Lags 0..=lags.
        #[arg(long, default_value_t = 10)]
        lags: usize,
        #[arg(long)]
        filtered: bool,
    },
    /// The integer polynomials q_{k-1}, r_{k-1} for k = 1..=K and their roots.
    Polys {
        #[arg(long, default_value_t = 6)]
        k: usize,
    },
    /// Coefficients of the sampling filter ∏(1 - e^{Δλ} z).
    Filter {
        #[arg(long)]
        delta: f64,
    },
    /// Moving average factorization of the filtered autocovariances.
    Ma {
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = MaMethod::Auto)]
        method: MaMethod,
        /// Convergence tolerance of the innovations recursion.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Iteration budget; defaults to min(ceil(200/Δ), 1e5).
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// First-order small-Δ limit of the MA representation.
    Asymptotic {
        /// Also evaluate Σ_Z at this step.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Exact Gaussian simulation of Y_{kΔ}, k = 0..n-1.
    Simulate {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random stream within the seed.
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
    /// Monte Carlo check of sample against analytic autocovariances.
    Verify {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 200_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Lags 0..=lags of Y; X is checked up to max(lags, pd).
        #[arg(long, default_value_t = 5)]
        lags: usize,
    },
    /// Generic pipeline against hand-derived closed forms for the 2×2 example.
    Golden,
}

#[derive(Subcommand, Debug)]
enum ModelAction {
    /// Parse and validate the model, then print its orders and roots.
    Validate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SpectrumKind {
    /// Continuous-time density f_Y(ω).
    Exact,
    /// Sampled density, using the series where it converges fast and the closed form elsewhere.
    Sampled,
    /// Sampled density from the Θ series, truncated at --order.
    SampledTaylor,
    /// Sampled density in closed form.
    SampledExact,
    /// Sampled density by direct summation of the autocovariances.
    Reference,
    /// Spectral density of the filtered sampled process.
    Filtered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MaMethod {
    /// Root flipping when d = 1, innovations otherwise.
    Auto,
    Innovations,
    Scalar,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long, value_enum, default_value_t = SpectrumKind::Sampled)]
    kind: SpectrumKind,
    /// Sampling step; required by every kind except exact.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    omega_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    omega_max: f64,
    #[arg(long, default_value_t = 121)]
    omega_count: usize,
    /// Taylor truncation order K.
    #[arg(long, default_value_t = 40)]
    order: usize,
    /// Relative tolerance of the reference sum.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

/// Whether a completed command passed its own checks.
enum Outcome {
    Done,
    Failed,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidArgument(msg.into()).into()
}

fn check_delta(delta: f64) -> anyhow::Result<f64> {
    if delta > 0.0 && delta.is_finite() {
        Ok(delta)
    } else {
        Err(invalid(format!("--delta must be positive and finite, got {delta}")))
    }
}

fn load_model(cli: &Cli) -> anyhow::Result<McarmaModel> {
    let path = cli.model.as_ref().ok_or_else(|| invalid("--model PATH is required for this command"))?;
    McarmaModel::from_path(path).with_context(|| format!("loading model {}", path.display()))
}

fn grid(args: &SpectrumArgs) -> anyhow::Result<Vec<f64>> {
    let (lo, hi, n) = (args.omega_min, args.omega_max, args.omega_count);
    if n < 2 {
        return Err(invalid(format!("--omega-count must be at least 2, got {n}")));
    }
    if !(lo >= -PI && hi <= PI && lo < hi) {
        return Err(invalid(format!("frequency grid [{lo}, {hi}] must be increasing and inside [-π, π]")));
    }
    let mut omegas: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    if args.kind == SpectrumKind::SampledTaylor {
        omegas.retain(|&w| w != 0.0);
    }
    Ok(omegas)
}

/// Writes `content` to `out` through a temporary file in the same directory,
/// or to standard output.
fn emit(out: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
            tmp.write_all(content.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn to_json(value: &Value) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn cmat_json(m: &CMat) -> Value {
    serde_json::to_value(mio::cmat_rows(m)).expect("plain numbers serialize")
}

fn mat_json(m: &Mat) -> Value {
    json!(mio::mat_rows(m))
}

fn root_text(z: Complex64) -> String {
    if z.im.abs() <= 1e-12 * z.norm().max(1.0) {
        fmt_num(z.re)
    } else {
        format!("{}{:+.16e}i", fmt_num(z.re), z.im)
    }
}

fn descending_text(p: &IntPolynomial) -> Vec<String> {
    p.descending().iter().map(|c| c.to_string()).collect()
}

fn spectrum(cli: &Cli, args: &SpectrumArgs, format: Format) -> anyhow::Result<String> {
    let model = load_model(cli)?;
    let spectrum = RationalSpectrum::new(&model)?;
    let omegas = grid(args)?;
    let delta = match (args.kind, args.delta) {
        (SpectrumKind::Exact, d) => d.map(check_delta).transpose()?,
        (_, Some(d)) => Some(check_delta(d)?),
        (_, None) => return Err(invalid("--delta is required for sampled and filtered spectra")),
    };
    let values: Vec<CMat> = match args.kind {
        SpectrumKind::Exact => omegas.iter().map(|&w| spectrum.f_y(w)).collect(),
        SpectrumKind::SampledTaylor => {
            let d = delta.expect("checked above");
            omegas.iter().map(|&w| spectrum.f_sampled_taylor(d, w, args.order)).collect::<Result<_, _>>()?
        }
        SpectrumKind::Sampled => {
            let d = delta.expect("checked above");
            omegas.iter().map(|&w| spectrum.f_sampled(d, w)).collect::<Result<_, _>>()?
        }
        SpectrumKind::SampledExact => {
            let d = delta.expect("checked above");
            omegas.iter().map(|&w| spectrum.f_sampled_exact(d, w)).collect::<Result<_, _>>()?
        }
        SpectrumKind::Reference => {
            let d = delta.expect("checked above");
            omegas.iter().map(|&w| spectrum.f_sampled_reference(d, w, args.tol)).collect::<Result<_, _>>()?
        }
        SpectrumKind::Filtered => {
            let f = filter_ma::filtered_spectrum(&spectrum, delta.expect("checked above"))?;
            omegas.iter().map(|&w| f.eval(w)).collect()
        }
    };
    match format {
        Format::Csv => Ok(mio::spectrum_csv(&omegas, &values)),
        Format::Json => {
            let kind = args.kind.to_possible_value().expect("no skipped variants").get_name().to_string();
            let points: Vec<Value> = omegas
                .iter()
                .zip(&values)
                .map(|(w, m)| {
                    let mut v = cmat_json(m);
                    v["omega"] = json!(w);
                    v
                })
                .collect();
            to_json(&json!({ "kind": kind, "delta": delta, "points": points }))
        }
    }
}

fn theta(cli: &Cli, order: usize, format: Format) -> anyhow::Result<String> {
    let model = load_model(cli)?;
    let spectrum = RationalSpectrum::new(&model)?;
    let series = spectrum.theta_series(order.max(spectrum.leading_order()))?;
    let ks: Vec<usize> = (1..=order).collect();
    let values: Vec<Mat> = ks.iter().map(|&k| series.get(k)).collect();
    match format {
        Format::Csv => {
            let keys: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
            Ok(mio::matrix_table_csv("k", "theta_", &keys, &values))
        }
        Format::Json => {
            let coeffs: Vec<Value> = ks.iter().zip(&values).map(|(k, m)| json!({ "k": k, "theta": mat_json(m) })).collect();
            to_json(&json!({ "start": series.start(), "coefficients": coeffs }))
        }
    }
}

fn pfrac(cli: &Cli, format: Format) -> anyhow::Result<String> {
    let model = load_model(cli)?;
    let spectrum = RationalSpectrum::new(&model)?;
    let pf = spectrum.partial_fractions();
    match format {
        Format::Csv => {
            let rows: Vec<(Vec<String>, CMat)> = pf
                .terms
                .iter()
                .flat_map(|t| {
                    t.alphas.iter().enumerate().map(move |(j, a)| {
                        (vec![fmt_num(t.lambda.re), fmt_num(t.lambda.im), (j + 1).to_string()], a.clone())
                    })
                })
                .collect();
            Ok(mio::complex_table_csv(&["lambda_re", "lambda_im", "j"], &rows))
        }
        Format::Json => {
            let terms: Vec<Value> = pf
                .terms
                .iter()
                .map(|t| {
                    json!({
                        "lambda": complex_json(t.lambda),
                        "multiplicity": t.multiplicity,
                        "alphas": t.alphas.iter().map(cmat_json).collect::<Vec<_>>(),
                    })
                })
                .collect();
            to_json(&json!({ "terms": terms, "residue_asymmetry": pf.residue_asymmetry() }))
        }
    }
}

fn acov(cli: &Cli, delta: f64, lags: usize, filtered: bool, format: Format) -> anyhow::Result<String> {
    let delta = check_delta(delta)?;
    let model = load_model(cli)?;
    let spectrum = RationalSpectrum::new(&model)?;
    let values: Vec<Mat> = if filtered {
        (0..=lags).map(|h| filter_ma::filtered_acov(&spectrum, delta, h as isize)).collect::<Result<_, _>>()?
    } else {
        (0..=lags).map(|h| spectrum.autocovariance(delta * h as f64)).collect()
    };
    match format {
        Format::Csv if filtered => {
            let keys: Vec<String> = (0..=lags).map(|h| h.to_string()).collect();
            Ok(mio::matrix_table_csv("h", "gamma_", &keys, &values))
        }
        Format::Csv => {
            let ts: Vec<f64> = (0..=lags).map(|h| delta * h as f64).collect();
            Ok(mio::acov_csv(&ts, &values))
        }
        Format::Json => {
            let rows: Vec<Value> = values.iter().enumerate().map(|(h, m)| json!({ "lag": h, "gamma": mat_json(m) })).collect();
            to_json(&json!({ "delta": delta, "filtered": filtered, "autocovariances": rows }))
        }
    }
}

fn polys(k_max: usize, format: Format) -> anyhow::Result<String> {
    if k_max == 0 {
        return Err(invalid("--k must be at least 1"));
    }
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let (q, r) = eulerian::qr_polys(k)?;
        rows.push(("q", k - 1, q));
        rows.push(("r", k - 1, r));
    }
    rows.sort_by_key(|(name, i, _)| (*name, *i));
    match format {
        Format::Csv => {
            let mut out = String::from("poly,index,coefficients,roots\n");
            for (name, i, p) in &rows {
                let roots: Vec<String> = p.roots().into_iter().map(root_text).collect();
                out.push_str(&format!("{name},{i},\"{}\",\"{}\"\n", descending_text(p).join(","), roots.join(",")));
            }
            Ok(out)
        }
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|(name, i, p)| {
                    json!({
                        "poly": name,
                        "index": i,
                        "coefficients_descending": descending_text(p),
                        "roots": p.roots().into_iter().map(complex_json).collect::<Vec<_>>(),
                    })
                })
                .collect();
            to_json(&json!({ "polynomials": items }))
        }
    }
}

fn filter(cli: &Cli, delta: f64, format: Format) -> anyhow::Result<String> {
    let delta = check_delta(delta)?;
    let model = load_model(cli)?;
    let spectrum = RationalSpectrum::new(&model)?;
    let f = filter_ma::sampling_filter(&spectrum, delta)?;
    match format {
        Format::Csv => {
            let mut out = String::from("j,phi_j\n");
            for (j, c) in f.coeffs().iter().enumerate() {
                out.push_str(&format!("{j},{}\n", fmt_num(*c)));
            }
            Ok(out)
        }
        Format::Json => to_json(&json!({ "delta": delta, "order": f.order(), "coefficients": f.coeffs() })),
    }
}

fn ma(cli: &Cli, delta: f64, method: MaMethod, tol: f64, max_iters: Option<usize>) -> anyhow::Result<String> {
    let delta = check_delta(delta)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid(format!("--tol must be positive, got {tol}")));
    }
    let model = load_model(cli)?;
    let spectrum = RationalSpectrum::new(&model)?;
    // The filtered process is a moving average of order pd - 1.
    let acov: Vec<Mat> = (0..model.pd())
        .map(|h| filter_ma::filtered_acov(&spectrum, delta, h as isize))
        .collect::<Result<_, _>>()?;
    let method = match method {
        MaMethod::Auto if model.d() == 1 => MaMethod::Scalar,
        MaMethod::Auto => MaMethod::Innovations,
        m => m,
    };
    let rep = match method {
        MaMethod::Scalar => {
            if model.d() != 1 {
                return Err(invalid("--method scalar needs a one-dimensional model"));
            }
            filter_ma::scalar_factorization(&acov.iter().map(|m| m[(0, 0)]).collect::<Vec<_>>())?
        }
        _ => filter_ma::innovations_factorization(&acov, tol, max_iters.unwrap_or_else(|| filter_ma::default_max_iters(delta)))?,
    };
    let name = if method == MaMethod::Scalar { "scalar" } else { "innovations" };
    to_json(&json!({
        "delta": delta,
        "method": name,
        "psi": rep.psi.iter().map(mat_json).collect::<Vec<_>>(),
        "sigma_z": mat_json(&rep.sigma_z),
        "residual": rep.residual,
        "iterations": rep.iterations,
    }))
}

fn asymptotic(cli: &Cli, delta: Option<f64>) -> anyhow::Result<String> {
    let delta = delta.map(check_delta).transpose()?;
    let model = load_model(cli)?;
    let asym = filter_ma::asymptotic_ma(&model)?;
    let mut out = json!({
        "unit_root_multiplicity": asym.unit_root_multiplicity,
        "eta": asym.eta_roots.iter().map(|&e| complex_json(e)).collect::<Vec<_>>(),
        "polynomial": asym.scalar_polynomial()?,
        "sigma_z_law": {
            "delta_exponent": asym.leading_order,
            "factor": asym.sigma_scale(1.0),
            "leading_noise": mat_json(&asym.leading_noise),
        },
    });
    if let Some(d) = delta {
        out["delta"] = json!(d);
        out["sigma_z"] = mat_json(&asym.sigma_z(d));
    }
    to_json(&out)
}

fn model_validate(cli: &Cli) -> anyhow::Result<String> {
    let model = load_model(cli)?;
    let spectrum = RationalSpectrum::new(&model)?;
    let roots: Vec<Value> = spectrum
        .roots()
        .roots
        .iter()
        .map(|&(z, m)| json!({ "re": z.re, "im": z.im, "multiplicity": m }))
        .collect();
    to_json(&json!({
        "valid": true,
        "p": model.p(),
        "q": model.q(),
        "d": model.d(),
        "pd": model.pd(),
        "roots": roots,
    }))
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let fmt = |default: Format| cli.format.unwrap_or(default);
    let json_only = |name: &str| -> anyhow::Result<()> {
        if cli.format == Some(Format::Csv) {
            bail!(invalid(format!("{name} only writes JSON")));
        }
        Ok(())
    };
    let out = cli.out.as_deref();
    let mut outcome = Outcome::Done;
    let text = match &cli.command {
        Command::Model { action: ModelAction::Validate } => {
            json_only("model validate")?;
            model_validate(cli)?
        }
        Command::Spectrum(args) => spectrum(cli, args, fmt(Format::Csv))?,
        Command::Theta { order } => theta(cli, *order, fmt(Format::Csv))?,
        Command::Pfrac => pfrac(cli, fmt(Format::Json))?,
        Command::Acov { delta, lags, filtered } => acov(cli, *delta, *lags, *filtered, fmt(Format::Csv))?,
        Command::Polys { k } => polys(*k, fmt(Format::Csv))?,
        Command::Filter { delta } => filter(cli, *delta, fmt(Format::Csv))?,
        Command::Ma { delta, method, tol, max_iters } => {
            json_only("ma")?;
            ma(cli, *delta, *method, *tol, *max_iters)?
        }
        Command::Asymptotic { delta } => {
            json_only("asymptotic")?;
            asymptotic(cli, *delta)?
        }
        Command::Simulate { delta, n, seed, replication } => {
            let delta = check_delta(*delta)?;
            let model = load_model(cli)?;
            let path = simulate::simulate_path(&model, delta, *n, *seed, *replication)?;
            match fmt(Format::Csv) {
                Format::Csv => mio::path_csv(&path),
                Format::Json => to_json(&json!({
                    "delta": delta,
                    "seed": seed,
                    "replication": replication,
                    "y": (0..path.obs.nrows()).map(|i| path.obs.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
                }))?,
            }
        }
        Command::Verify { delta, n, seed, lags } => {
            json_only("verify")?;
            let delta = check_delta(*delta)?;
            let model = load_model(cli)?;
            let report = simulate::verify_model(&model, delta, *n, *seed, *lags)?;
            if !report.pass {
                outcome = Outcome::Failed;
            }
            to_json(&serde_json::to_value(&report)?)?
        }
        Command::Golden => {
            json_only("golden")?;
            let report = golden::run_golden()?;
            if !report.pass {
                outcome = Outcome::Failed;
            }
            to_json(&serde_json::to_value(&report)?)?
        }
    };
    emit(out, &text)?;
    Ok(outcome)
}

/// Caps the worker pool at `MCARMA_THREADS` when it is set.
fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("MCARMA_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| invalid(format!("MCARMA_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return if e.is_validation() { 2 } else { 3 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<tempfile::PersistError>().is_some() {
            return 2;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| run(&cli));
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => {
            eprintln!("mcarma: verification FAIL");
            ExitCode::from(4)
        }
        Err(err) => {
            eprintln!("mcarma: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
