//! Monte Carlo studies and quadrature checks of the limit theory.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{ExperimentConfig, Gamma2Mode};
use crate::dsp;
use crate::error::{Error, Result};
use crate::levy_noise::{self, KernelSpec, LevyDriverSpec, NoisePath};
use crate::quad::{self, QuadOptions};
use crate::regression::{LseFit, LseOptions, RegressionFamily, RegressionModel};
use crate::rng;
use crate::spectral::{self, FrequencyGrid, Periodogram};
use crate::whittle::{self, FitStatus, WhittleFit, WhittleOptions};

// ---------------------------------------------------------------------------
// sample statistics

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn central_moment(x: &[f64], k: i32) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(k)).sum::<f64>() / x.len() as f64
}

pub fn skewness(x: &[f64]) -> f64 {
    central_moment(x, 3) / central_moment(x, 2).powf(1.5)
}

pub fn excess_kurtosis(x: &[f64]) -> f64 {
    central_moment(x, 4) / central_moment(x, 2).powi(2) - 3.0
}

/// Kolmogorov sup-distance between the empirical CDF of the standardised
/// sample and the standard normal CDF.
pub fn ks_normal_distance(x: &[f64]) -> f64 {
    let m = mean(x);
    let sd = variance(x).sqrt();
    if !(sd > 0.0) {
        return 1.0;
    }
    let mut z: Vec<f64> = x.iter().map(|v| (v - m) / sd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let normal = Normal::standard();
    z.iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = normal.cdf(v);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Sample covariance of the rows of `samples`, symmetrised.
pub fn sample_covariance(samples: &[Vec<f64>]) -> DMatrix<f64> {
    let m = samples.first().map_or(0, Vec::len);
    let n = samples.len() as f64;
    let means: Vec<f64> = (0..m).map(|i| samples.iter().map(|s| s[i]).sum::<f64>() / n).collect();
    let mut cov = DMatrix::zeros(m, m);
    for s in samples {
        for i in 0..m {
            for j in 0..=i {
                cov[(i, j)] += (s[i] - means[i]) * (s[j] - means[j]);
            }
        }
    }
    for i in 0..m {
        for j in 0..=i {
            let v = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

// ---------------------------------------------------------------------------
// Monte Carlo reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub index: u64,
    pub seed: u64,
    pub status: String,
    pub estimate: Option<Vec<f64>>,
    /// Whether each coordinate's interval covered the truth.
    pub covered: Option<Vec<bool>>,
}

impl Replicate {
    /// Successful and interior.
    fn counts(&self) -> bool {
        self.estimate.is_some() && self.status != "boundary"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub horizon: f64,
    pub replicates: usize,
    pub failures: usize,
    /// Fits that ended on the boundary of the parameter box. They stay in
    /// `rows` but are left out of every summary statistic.
    pub boundary: usize,
    pub truth: Vec<f64>,
    /// Per-coordinate factors turning `θ̂ - θ₀` into normalised errors.
    pub normalizer: Vec<f64>,
    pub mean: Vec<f64>,
    pub bias: Vec<f64>,
    /// Covariance of the normalised errors.
    pub empirical_cov: Vec<Vec<f64>>,
    pub target_cov: Vec<Vec<f64>>,
    pub coverage: Vec<f64>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    pub ks_distance: Vec<f64>,
    pub rows: Vec<Replicate>,
}

impl McReport {
    pub fn assemble(horizon: f64, truth: Vec<f64>, normalizer: Vec<f64>, target: &DMatrix<f64>, rows: Vec<Replicate>) -> Self {
        let q = truth.len();
        let failures = rows.iter().filter(|r| r.estimate.is_none()).count();
        let boundary = rows.iter().filter(|r| r.estimate.is_some() && r.status == "boundary").count();
        let ok: Vec<&Vec<f64>> = rows.iter().filter(|r| r.counts()).filter_map(|r| r.estimate.as_ref()).collect();
        let errors: Vec<Vec<f64>> = ok
            .iter()
            .map(|e| (0..q).map(|i| normalizer[i] * (e[i] - truth[i])).collect())
            .collect();
        let mean_est: Vec<f64> = (0..q).map(|i| ok.iter().map(|e| e[i]).sum::<f64>() / ok.len().max(1) as f64).collect();
        let bias = mean_est.iter().zip(&truth).map(|(m, t)| m - t).collect();
        let cov = if errors.len() > 1 { sample_covariance(&errors) } else { DMatrix::zeros(q, q) };
        let column = |i: usize| -> Vec<f64> { errors.iter().map(|e| e[i]).collect() };
        let covered: Vec<&Vec<bool>> = rows.iter().filter(|r| r.counts()).filter_map(|r| r.covered.as_ref()).collect();
        let coverage = (0..q)
            .map(|i| {
                if covered.is_empty() {
                    f64::NAN
                } else {
                    covered.iter().filter(|c| c[i]).count() as f64 / covered.len() as f64
                }
            })
            .collect();
        Self {
            horizon,
            replicates: rows.len(),
            failures,
            boundary,
            truth,
            normalizer,
            mean: mean_est,
            bias,
            empirical_cov: to_rows(&cov),
            target_cov: to_rows(target),
            coverage,
            skewness: (0..q).map(|i| skewness(&column(i))).collect(),
            excess_kurtosis: (0..q).map(|i| excess_kurtosis(&column(i))).collect(),
            ks_distance: (0..q).map(|i| ks_normal_distance(&column(i))).collect(),
            rows,
        }
    }

    pub fn empirical(&self) -> DMatrix<f64> {
        rows_to_matrix(&self.empirical_cov)
    }

    pub fn target(&self) -> DMatrix<f64> {
        rows_to_matrix(&self.target_cov)
    }

    /// Normalised errors of the replicates that enter the statistics.
    pub fn normalized_errors(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .filter(|r| r.counts())
            .filter_map(|r| r.estimate.as_ref())
            .map(|e| e.iter().zip(&self.truth).zip(&self.normalizer).map(|((a, b), c)| c * (a - b)).collect())
            .collect()
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

// ---------------------------------------------------------------------------
// ergodicity and the Fejér limit

/// `ν*_T = T⁻¹∫₀^T ε²` and `|ν*_T - B(0)| / B(0)`.
pub fn mean_square_check(path: &NoisePath, b0: f64) -> (f64, f64) {
    let nu = path.mean_square();
    (nu, (nu - b0).abs() / b0)
}

/// `ν*_T` over `replicates` independent noise paths.
pub fn mean_square_samples(
    driver: &LevyDriverSpec,
    kernel: &KernelSpec,
    horizon: f64,
    step: f64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let path = levy_noise::simulate_linear_noise(driver, kernel, horizon, step, rng::replicate_seed(seed, i))?;
            Ok(path.mean_square())
        })
        .collect()
}

/// Fejér panels per side; the neglected tails are below `sup|G| / (π² · FEJER_PANELS)`
/// after the mean-value tail correction.
const FEJER_PANELS: usize = 200_000;

/// `∫ F_T(u) G(u) du` with `F_T(u) = (2πT)⁻¹ (sin(Tu/2) / (u/2))²`.
pub fn fejer_limit_check(g: impl Fn(f64) -> f64, horizon: f64) -> Result<f64> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::domain("horizon", horizon, "(0, ∞)"));
    }
    let t = horizon;
    let kernel = |u: f64| -> f64 {
        if u.abs() < 1e-8 / t {
            t / (2.0 * PI)
        } else {
            let s = (0.5 * t * u).sin() / (0.5 * u);
            s * s / (2.0 * PI * t)
        }
    };
    let width = 2.0 * PI / t;
    let mut f = |u: f64| kernel(u) * g(u);
    let mut acc = 0.0;
    for k in 0..FEJER_PANELS {
        let a = k as f64 * width;
        acc += quad::gk15(&mut f, a, a + width).0;
        acc += quad::gk15(&mut f, -a - width, -a).0;
    }
    // beyond U the squared sine averages to 1/2
    let u = FEJER_PANELS as f64 * width;
    acc += (g(u) + g(-u)) / (PI * t * u);
    Ok(acc)
}

// ---------------------------------------------------------------------------
// quadratic functional of the noise

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltCheck {
    pub sample_mean: f64,
    pub sample_var: f64,
    pub sigma2_target: f64,
    /// `T^{-1/2} Q_T` per replicate.
    pub values: Vec<f64>,
}

/// Frequency beyond which `|b|` stays below `1e-14` of its scanned maximum.
fn negligible_cut(b: &impl Fn(f64) -> f64) -> f64 {
    let mut peak = b(0.0).abs();
    let mut l = 1.0;
    while l < 1e6 {
        peak = peak.max(b(l).abs());
        if b(l).abs() <= 1e-14 * peak && b(2.0 * l).abs() <= 1e-14 * peak {
            return l;
        }
        l *= 2.0;
    }
    l
}

/// `b̂(t) = ∫ b(λ) e^{iλt} dλ` for even `b`.
fn b_transform(b: &impl Fn(f64) -> f64, t: f64, cut: f64) -> Result<f64> {
    let width = if t.abs() > 0.0 { (PI / t.abs()).min(0.5) } else { 0.5 };
    let breaks = quad::uniform_breaks(0.0, cut, width);
    let est = quad::integrate_partition(|l| b(l) * (l * t).cos(), &breaks, QuadOptions::default().with_abs_tol(1e-13))?;
    Ok(2.0 * est.value)
}

/// Simulates `T^{-1/2} Q_T` with `Q_T = ∫₀^T∫₀^T b̂(t-s)(ε(t)ε(s) - B(t-s)) dt ds`
/// and returns its sample variance next to
/// `σ² = 16π³∫b²f² + γ₂(2π∫bf)²`.
#[allow(clippy::too_many_arguments)]
pub fn clt_functional_check(
    driver: &LevyDriverSpec,
    kernel: &KernelSpec,
    b: impl Fn(f64) -> f64 + Sync,
    horizon: f64,
    step: f64,
    replicates: usize,
    seed: u64,
) -> Result<CltCheck> {
    let c = driver.cumulants()?;
    kernel.validate()?;
    let n = levy_noise::lattice_len(horizon, step)?;
    let cut = negligible_cut(&b);
    let f = |l: f64| c.d2 * kernel.transform(l).norm_sqr() / (2.0 * PI);

    let opts = QuadOptions::default().with_abs_tol(1e-14).with_rel_tol(1e-11);
    let breaks = quad::uniform_breaks(0.0, cut, 0.25);
    let bf2 = 2.0 * quad::integrate_partition(|l| (b(l) * f(l)).powi(2), &breaks, opts)?.value;
    let bf = 2.0 * quad::integrate_partition(|l| b(l) * f(l), &breaks, opts)?.value;
    let sigma2 = 16.0 * PI.powi(3) * bf2 + c.gamma2 * (2.0 * PI * bf).powi(2);

    let mut bhat = vec![b_transform(&b, 0.0, cut)?];
    let scale = bhat[0].abs();
    if scale > 0.0 {
        let mut quiet = 0;
        let mut l = 1;
        while l < n && quiet < 20 {
            let v = b_transform(&b, l as f64 * step, cut)?;
            quiet = if v.abs() < 1e-12 * scale { quiet + 1 } else { 0 };
            bhat.push(v);
            l += 1;
        }
    }
    let lags = bhat.len() - 1;
    let cov: Vec<f64> = (0..=lags)
        .map(|l| levy_noise::covariance(kernel, driver, l as f64 * step))
        .collect::<Result<_>>()?;
    let nf = n as f64;
    let centre = step * step * (nf * bhat[0] * cov[0] + 2.0 * (1..=lags).map(|l| (nf - l as f64) * bhat[l] * cov[l]).sum::<f64>());

    let values: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let path = levy_noise::simulate_linear_noise(driver, kernel, horizon, step, rng::replicate_seed(seed, i))?;
            let s = dsp::lagged_products(&path.values, lags);
            let q = step * step * (bhat[0] * s[0] + 2.0 * (1..=lags).map(|l| bhat[l] * s[l]).sum::<f64>());
            Ok((q - centre) / horizon.sqrt())
        })
        .collect::<Result<_>>()?;
    let (sample_mean, sample_var) = if values.len() > 1 { (mean(&values), variance(&values)) } else { (f64::NAN, f64::NAN) };
    Ok(CltCheck {
        sample_mean,
        sample_var,
        sigma2_target: sigma2,
        values,
    })
}

// ---------------------------------------------------------------------------
// trigonometric least squares

/// Block-diagonal limit covariance of
/// `(√T(Â_k - A_k), √T(B̂_k - B_k), T^{3/2}(φ̂_k - φ_k))`, one block per harmonic
/// with `f_values[k] = f(φ_k)`.
pub fn sigma_trig(alpha0: &[f64], f_values: &[f64]) -> Result<DMatrix<f64>> {
    if alpha0.len() % 3 != 0 || alpha0.len() / 3 != f_values.len() {
        return Err(Error::Shape {
            expected: 3 * f_values.len(),
            got: alpha0.len(),
        });
    }
    let n = alpha0.len();
    let mut s = DMatrix::zeros(n, n);
    for (k, &f) in f_values.iter().enumerate() {
        let (a, b) = (alpha0[3 * k], alpha0[3 * k + 1]);
        let c2 = a * a + b * b;
        if c2 == 0.0 {
            return Err(Error::DegenerateHarmonic { harmonic: k });
        }
        if !(f > 0.0) {
            return Err(Error::domain(format!("f(φ_{k})"), f, "(0, ∞)"));
        }
        let block = [
            [a * a + 4.0 * b * b, -3.0 * a * b, -6.0 * b],
            [-3.0 * a * b, b * b + 4.0 * a * a, 6.0 * a],
            [-6.0 * b, 6.0 * a, 12.0],
        ];
        let scale = 4.0 * PI * f / c2;
        for i in 0..3 {
            for j in 0..3 {
                s[(3 * k + i, 3 * k + j)] = scale * block[i][j];
            }
        }
    }
    Ok(s)
}

fn trig_normalizer(harmonics: usize, horizon: f64) -> Vec<f64> {
    (0..harmonics)
        .flat_map(|_| [horizon.sqrt(), horizon.sqrt(), horizon.powf(1.5)])
        .collect()
}

/// Monte Carlo law of the normalised trigonometric LSE errors against
/// [`sigma_trig`].
#[allow(clippy::too_many_arguments)]
pub fn lse_normality_check(
    model: &RegressionModel,
    alpha0: &[f64],
    driver: &LevyDriverSpec,
    kernel: &KernelSpec,
    horizon: f64,
    step: f64,
    replicates: usize,
    seed: u64,
) -> Result<McReport> {
    let RegressionFamily::TrigonometricSum { harmonics } = model.family else {
        return Err(Error::InvalidSpec("normality check needs a trigonometric model".into()));
    };
    model.validate()?;
    model.check_alpha(alpha0)?;
    let d2 = driver.cumulant(2)?;
    let f_values: Vec<f64> = (0..harmonics)
        .map(|k| d2 * kernel.transform(alpha0[3 * k + 2]).norm_sqr() / (2.0 * PI))
        .collect();
    let target = sigma_trig(alpha0, &f_values)?;
    let n = levy_noise::lattice_len(horizon, step)?;
    let signal = model.signal(alpha0, step, n)?;
    let normalizer = trig_normalizer(harmonics, horizon);
    let z = Normal::standard().inverse_cdf(0.975);

    let rows: Vec<Replicate> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let seed = rng::replicate_seed(seed, i);
            let outcome = levy_noise::simulate_linear_noise(driver, kernel, horizon, step, seed).and_then(|noise| {
                let data = NoisePath::new(step, signal.iter().zip(&noise.values).map(|(g, e)| g + e).collect());
                model.lse_fit(&data, alpha0, LseOptions::default())
            });
            match outcome {
                Ok(fit) => {
                    let covered = (0..alpha0.len())
                        .map(|c| (normalizer[c] * (fit.alpha_hat[c] - alpha0[c])).abs() <= z * target[(c, c)].sqrt())
                        .collect();
                    Replicate {
                        index: i,
                        seed,
                        status: if fit.converged { "converged".into() } else { "stalled".into() },
                        estimate: Some(fit.alpha_hat),
                        covered: Some(covered),
                    }
                }
                Err(e) => failed(i, seed, &e),
            }
        })
        .collect();
    Ok(McReport::assemble(horizon, alpha0.to_vec(), normalizer, &target, rows))
}

fn failed(index: u64, seed: u64, e: &Error) -> Replicate {
    Replicate {
        index,
        seed,
        status: format!("failed: {e}"),
        estimate: None,
        covered: None,
    }
}

// ---------------------------------------------------------------------------
// full pipeline

#[derive(Debug, Clone)]
pub struct PipelineFit {
    pub lse: LseFit,
    pub periodogram: Periodogram,
    pub gamma2: f64,
    pub whittle: WhittleFit,
}

/// Observations `X = g(·, α₀) + ε` for one seed.
pub fn simulate_observations(cfg: &ExperimentConfig, horizon: f64, seed: u64) -> Result<NoisePath> {
    let noise = levy_noise::simulate_linear_noise(&cfg.driver, &cfg.kernel, horizon, cfg.step, seed)?;
    let signal = cfg.regression.signal(&cfg.alpha0, cfg.step, noise.len())?;
    let mut data = noise;
    data.values.iter_mut().zip(&signal).for_each(|(x, g)| *x += g);
    Ok(data)
}

/// LSE, residual periodogram up to `Λ_max`, then the Whittle fit.
pub fn fit_pipeline(cfg: &ExperimentConfig, data: &NoisePath) -> Result<PipelineFit> {
    let lse = cfg.regression.lse_fit(data, &cfg.alpha0, LseOptions::default())?;
    let residuals = cfg.regression.residuals(data, &lse.alpha_hat)?;
    let grid = FrequencyGrid::up_to(cfg.weights.lambda_max(), residuals.horizon());
    let periodogram = spectral::residual_periodogram(&residuals, grid)?;
    let gamma2 = match cfg.gamma2 {
        Gamma2Mode::EstimateFromResiduals => whittle::estimate_gamma2(&residuals, &cfg.kernel)?,
        _ => cfg.fixed_gamma2()?.unwrap_or(0.0),
    };
    let opts = WhittleOptions {
        gamma2,
        level: cfg.level,
        ..WhittleOptions::default()
    };
    let whittle = whittle::whittle_fit(&periodogram, &cfg.spectral, &cfg.weights, &cfg.theta_init(), opts)?;
    Ok(PipelineFit {
        lse,
        periodogram,
        gamma2,
        whittle,
    })
}

/// Seed of replicate `index` at rung `rung` of the horizon ladder.
pub fn study_seed(master: u64, rung: usize, index: u64) -> u64 {
    rng::replicate_seed(master, ((rung as u64) << 32) | index)
}

/// Runs the whole pipeline `replicates` times per horizon and compares the
/// law of `√T(θ̂ - θ₀)` with the sandwich `W` at `θ₀`.
pub fn mce_normality_study(cfg: &ExperimentConfig, horizons: &[f64], replicates: usize, seed: u64) -> Result<Vec<McReport>> {
    cfg.validate()?;
    let theta0 = cfg
        .spectral
        .truth
        .clone()
        .ok_or_else(|| Error::ConfigRejected("spectral.truth is required for a Monte Carlo study".into()))?;
    let target_gamma2 = match cfg.gamma2 {
        Gamma2Mode::UserValue { value } => value,
        _ => cfg.driver.cumulants()?.gamma2,
    };
    let mats = whittle::asymptotic_matrices(&cfg.spectral, &cfg.weights, target_gamma2, &theta0)?;
    let target = whittle::mce_covariance(&mats.w1, &mats.w2, &mats.v)?;

    horizons
        .iter()
        .enumerate()
        .map(|(rung, &horizon)| {
            levy_noise::lattice_len(horizon, cfg.step)?;
            let rows: Vec<Replicate> = (0..replicates as u64)
                .into_par_iter()
                .map(|i| {
                    let seed = study_seed(seed, rung, i);
                    match simulate_observations(cfg, horizon, seed).and_then(|d| fit_pipeline(cfg, &d)) {
                        Ok(fit) => {
                            let w = &fit.whittle;
                            let covered = w.ci.iter().zip(&theta0).map(|((lo, hi), t)| lo <= t && t <= hi).collect();
                            let status = match w.status {
                                FitStatus::Converged => "converged",
                                FitStatus::Boundary => "boundary",
                                FitStatus::Stalled => "stalled",
                            };
                            Replicate {
                                index: i,
                                seed,
                                status: status.into(),
                                estimate: Some(w.theta_hat.clone()),
                                covered: Some(covered),
                            }
                        }
                        Err(e) => failed(i, seed, &e),
                    }
                })
                .collect();
            let normalizer = vec![horizon.sqrt(); theta0.len()];
            Ok(McReport::assemble(horizon, theta0.clone(), normalizer, &target, rows))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Levitan polynomials

/// `T_n(F; z) = Σ_j c_j e^{ijsz}` with `s = σ/n` and
/// `c_j = s E_s(js)`, `E_s(x) = (2π)⁻¹ ∫ e^{-ixu} (2 sin(su/2)/(su))² F(u) du`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevitanPolynomial {
    pub s: f64,
    /// `c_j` for `j = -J..=J`.
    pub coefficients: Vec<Complex64>,
}

/// Fejér lobes kept on each side when computing `E_s`.
const LEVITAN_LOBES: f64 = 100.0;

impl LevitanPolynomial {
    /// `F` real and bounded, of exponential type at most `sigma`.
    pub fn new(f: impl Fn(f64) -> f64, sigma: f64, n: usize) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain("sigma", sigma, "(0, ∞)"));
        }
        if n == 0 {
            return Err(Error::domain("n", 0.0, "n ≥ 1"));
        }
        let s = sigma / n as f64;
        let fejer = |u: f64| -> f64 {
            let h = 0.5 * s * u;
            if h.abs() < 1e-8 {
                1.0
            } else {
                (h.sin() / h).powi(2)
            }
        };
        let big_u = LEVITAN_LOBES * 2.0 * PI / s;
        // E_s vanishes beyond σ + s, so |j| ≤ n + 1
        let top = n + 1;
        let mut half = Vec::with_capacity(top + 1);
        for j in 0..=top {
            let x = j as f64 * s;
            let width = (PI / (sigma + s + x)).min(2.0 * PI / s);
            let panels = (big_u / width).ceil() as usize;
            let width = big_u / panels as f64;
            let mut even = |u: f64| fejer(u) * (f(u) + f(-u)) * (x * u).cos();
            let mut odd = |u: f64| fejer(u) * (f(u) - f(-u)) * (x * u).sin();
            let (mut re, mut im) = (0.0, 0.0);
            for p in 0..panels {
                let a = p as f64 * width;
                re += quad::gk15(&mut even, a, a + width).0;
                if x != 0.0 {
                    im -= quad::gk15(&mut odd, a, a + width).0;
                }
            }
            // beyond U the Fejér factor is 2(1 - cos su)/(su)²; its
            // non-oscillating part survives against cos(xu) for x = 0 and x = s
            let tail = (f(big_u) + f(-big_u)) / (s * s * big_u);
            match j {
                0 => re += 2.0 * tail,
                1 => re -= tail,
                _ => {}
            }
            half.push(Complex64::new(re, im) * (s / (2.0 * PI)));
        }
        let mut coefficients: Vec<Complex64> = half[1..].iter().rev().map(|c| c.conj()).collect();
        coefficients.extend(&half);
        Ok(Self { s, coefficients })
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let top = (self.coefficients.len() / 2) as i64;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let j = i as i64 - top;
                (c * Complex64::from_polar(1.0, j as f64 * self.s * lambda)).re
            })
            .sum()
    }
}

pub fn levitan_polynomial(f: impl Fn(f64) -> f64, sigma: f64, n: usize, lambda: f64) -> Result<f64> {
    Ok(LevitanPolynomial::new(f, sigma, n)?.eval(lambda))
}
