//! Regression functions `g(t, α)` and their least-squares estimation.
//!
//! Two families are supported: the exponential-inner model
//! `g = exp⟨α, y(t)⟩` with bounded regressors, and trigonometric sums
//! `g = Σ_k A_k cos φ_k t + B_k sin φ_k t` with `α = (A_1, B_1, φ_1, …)`.
//! All time integrals over the observation window (`S_T`, `Φ_T` and the
//! lattice norming) are Riemann sums on the sampling lattice `kΔ, k < n`,
//! which is the discretisation the data arrive in.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};
use crate::levy_noise::NoisePath;
use crate::optim::{self, Bounds, LmOptions, NormalEquations};
use crate::quad::{self, QuadOptions};
use crate::rng;

/// Floor applied to sample means before taking logarithms.
pub const EPS_FLOOR: f64 = 1e-12;

/// One regressor `y_i(t)` of the exponential-inner model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Regressor {
    Constant { value: f64 },
    Cosine { frequency: f64, phase: f64 },
    /// Piecewise constant on `[kΔ, (k+1)Δ)`; the last value holds beyond the table.
    Table { step: f64, values: Vec<f64> },
}

impl Regressor {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Regressor::Constant { value } => *value,
            Regressor::Cosine { frequency, phase } => (frequency * t + phase).cos(),
            Regressor::Table { step, values } => {
                if values.is_empty() {
                    return 0.0;
                }
                let k = (t / step).floor().max(0.0) as usize;
                values[k.min(values.len() - 1)]
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Regressor::Constant { value } if !value.is_finite() => Err(Error::domain("constant regressor", *value, "finite")),
            Regressor::Cosine { frequency, phase } if !(frequency.is_finite() && phase.is_finite()) => {
                Err(Error::InvalidSpec("cosine regressor needs finite frequency and phase".into()))
            }
            Regressor::Table { step, values } => {
                if !(step.is_finite() && *step > 0.0) {
                    return Err(Error::domain("regressor table step", *step, "(0, ∞)"));
                }
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpec("regressor table must hold finite values".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegressionFamily {
    ExponentialInner { regressors: Vec<Regressor> },
    TrigonometricSum { harmonics: usize },
}

/// Closed parameter box `𝒜`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.bounds().contains(x)
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.lower.clone(), self.upper.clone())
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub(crate) fn validate(&self, expected: usize, name: &str) -> Result<()> {
        if self.lower.len() != expected || self.upper.len() != expected {
            return Err(Error::Shape {
                expected,
                got: self.lower.len().max(self.upper.len()),
            });
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidSpec(format!("{name} box coordinate {i}: [{lo}, {hi}] is not a closed finite interval")));
            }
        }
        Ok(())
    }

    pub(crate) fn check(&self, x: &[f64], name: &str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (i, ((&v, &lo), &hi)) in x.iter().zip(&self.lower).zip(&self.upper).enumerate() {
            if !(v >= lo && v <= hi) {
                return Err(Error::domain(format!("{name}[{i}]"), v, format!("[{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionModel {
    pub family: RegressionFamily,
    #[serde(rename = "box")]
    pub bounds: ParamBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LseFit {
    pub alpha_hat: Vec<f64>,
    /// `S_T(α̂)`.
    pub sse: f64,
    /// `d_T(α̂)`.
    pub norming: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LseOptions {
    pub lm: LmOptions,
    /// Periodogram peaks tried as frequency seeds beyond the leading ones.
    pub extra_peaks: usize,
}

impl Default for LseOptions {
    fn default() -> Self {
        Self {
            lm: LmOptions::default(),
            extra_peaks: 2,
        }
    }
}

impl RegressionModel {
    pub fn trigonometric(harmonics: usize, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            family: RegressionFamily::TrigonometricSum { harmonics },
            bounds: ParamBox::new(lower, upper),
        }
    }

    pub fn exponential(regressors: Vec<Regressor>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            family: RegressionFamily::ExponentialInner { regressors },
            bounds: ParamBox::new(lower, upper),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.family {
            RegressionFamily::ExponentialInner { regressors } => regressors.len(),
            RegressionFamily::TrigonometricSum { harmonics } => 3 * harmonics,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            RegressionFamily::ExponentialInner { regressors } => {
                if regressors.is_empty() {
                    return Err(Error::InvalidSpec("exponential model needs at least one regressor".into()));
                }
                regressors.iter().try_for_each(Regressor::validate)?;
            }
            RegressionFamily::TrigonometricSum { harmonics } => {
                if *harmonics == 0 {
                    return Err(Error::InvalidSpec("trigonometric model needs at least one harmonic".into()));
                }
            }
        }
        self.bounds.validate(self.dim(), "regression")?;
        if let RegressionFamily::TrigonometricSum { harmonics } = self.family {
            for k in 0..harmonics {
                if self.bounds.lower[3 * k + 2] <= 0.0 {
                    return Err(Error::InvalidSpec(format!("frequency of harmonic {k} must be bounded away from zero")));
                }
            }
        }
        Ok(())
    }

    pub fn check_alpha(&self, alpha: &[f64]) -> Result<()> {
        self.bounds.check(alpha, "alpha")
    }

    /// Largest frequency the model can produce.
    pub fn max_frequency(&self) -> f64 {
        match &self.family {
            RegressionFamily::TrigonometricSum { harmonics } => {
                (0..*harmonics).map(|k| self.bounds.upper[3 * k + 2]).fold(0.0, f64::max)
            }
            RegressionFamily::ExponentialInner { regressors } => regressors
                .iter()
                .map(|r| match r {
                    Regressor::Cosine { frequency, .. } => frequency.abs(),
                    _ => 0.0,
                })
                .fold(0.0, f64::max),
        }
    }

    /// `g(t, α)`.
    pub fn eval(&self, t: f64, alpha: &[f64]) -> Result<f64> {
        self.check_alpha(alpha)?;
        Ok(self.value(t, alpha))
    }

    /// `∇_α g(t, α)`.
    pub fn gradient(&self, t: f64, alpha: &[f64]) -> Result<Vec<f64>> {
        self.check_alpha(alpha)?;
        let mut g = vec![0.0; self.dim()];
        self.value_and_gradient(t, alpha, &mut g);
        Ok(g)
    }

    /// `∂²g / ∂α_i ∂α_l`.
    pub fn hessian_entry(&self, t: f64, alpha: &[f64], i: usize, l: usize) -> Result<f64> {
        self.check_alpha(alpha)?;
        let q = self.dim();
        if i >= q || l >= q {
            return Err(Error::Shape {
                expected: q,
                got: i.max(l) + 1,
            });
        }
        Ok(match &self.family {
            RegressionFamily::ExponentialInner { regressors } => {
                regressors[i].eval(t) * regressors[l].eval(t) * self.value(t, alpha)
            }
            RegressionFamily::TrigonometricSum { .. } => {
                if i / 3 != l / 3 {
                    return Ok(0.0);
                }
                let k = i / 3;
                let (a, b, phi) = (alpha[3 * k], alpha[3 * k + 1], alpha[3 * k + 2]);
                let (s, c) = (phi * t).sin_cos();
                let (i, l) = (i % 3, l % 3);
                match (i.min(l), i.max(l)) {
                    (0, 2) => -t * s,
                    (1, 2) => t * c,
                    (2, 2) => -t * t * (a * c + b * s),
                    _ => 0.0,
                }
            }
        })
    }

    pub(crate) fn value(&self, t: f64, alpha: &[f64]) -> f64 {
        match &self.family {
            RegressionFamily::ExponentialInner { regressors } => {
                regressors.iter().zip(alpha).map(|(r, a)| a * r.eval(t)).sum::<f64>().exp()
            }
            RegressionFamily::TrigonometricSum { harmonics } => (0..*harmonics)
                .map(|k| {
                    let (s, c) = (alpha[3 * k + 2] * t).sin_cos();
                    alpha[3 * k] * c + alpha[3 * k + 1] * s
                })
                .sum(),
        }
    }

    pub(crate) fn value_and_gradient(&self, t: f64, alpha: &[f64], grad: &mut [f64]) -> f64 {
        match &self.family {
            RegressionFamily::ExponentialInner { regressors } => {
                let mut inner = 0.0;
                for (slot, (r, a)) in grad.iter_mut().zip(regressors.iter().zip(alpha)) {
                    let y = r.eval(t);
                    *slot = y;
                    inner += a * y;
                }
                let g = inner.exp();
                grad.iter_mut().for_each(|v| *v *= g);
                g
            }
            RegressionFamily::TrigonometricSum { harmonics } => {
                let mut g = 0.0;
                for k in 0..*harmonics {
                    let (a, b, phi) = (alpha[3 * k], alpha[3 * k + 1], alpha[3 * k + 2]);
                    let (s, c) = (phi * t).sin_cos();
                    grad[3 * k] = c;
                    grad[3 * k + 1] = s;
                    grad[3 * k + 2] = t * (b * c - a * s);
                    g += a * c + b * s;
                }
                g
            }
        }
    }

    /// `d_T(α)` with `d_iT² = ∫₀^T g_i(t, α)² dt`, by adaptive quadrature.
    pub fn norming(&self, alpha: &[f64], horizon: f64) -> Result<Vec<f64>> {
        self.check_alpha(alpha)?;
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::domain("horizon", horizon, "(0, ∞)"));
        }
        let q = self.dim();
        let breaks = self.quadrature_breaks(alpha, horizon);
        let mut out = Vec::with_capacity(q);
        let mut grad = vec![0.0; q];
        for i in 0..q {
            let est = quad::integrate_partition(
                |t| {
                    self.value_and_gradient(t, alpha, &mut grad);
                    grad[i] * grad[i]
                },
                &breaks,
                QuadOptions::default().with_rel_tol(1e-10),
            )?;
            if est.value <= 0.0 {
                return Err(Error::SingularNorming { coordinate: i });
            }
            out.push(est.value.sqrt());
        }
        Ok(out)
    }

    fn quadrature_breaks(&self, alpha: &[f64], horizon: f64) -> Vec<f64> {
        match &self.family {
            RegressionFamily::TrigonometricSum { harmonics } => {
                let fastest = (0..*harmonics).map(|k| alpha[3 * k + 2].abs()).fold(0.0, f64::max);
                let width = if fastest > 0.0 { PI / fastest } else { horizon };
                quad::uniform_breaks(0.0, horizon, width)
            }
            RegressionFamily::ExponentialInner { regressors } => {
                let mut width = horizon;
                let mut breaks = vec![0.0, horizon];
                for r in regressors {
                    match r {
                        Regressor::Cosine { frequency, .. } if *frequency != 0.0 => width = width.min(PI / frequency.abs()),
                        Regressor::Table { step, values } => {
                            let end = (*step * values.len() as f64).min(horizon);
                            let mut t = *step;
                            while t < end {
                                breaks.push(t);
                                t += step;
                            }
                        }
                        _ => {}
                    }
                }
                let mut all = quad::uniform_breaks(0.0, horizon, width);
                all.extend(breaks);
                all.sort_by(f64::total_cmp);
                all.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * horizon);
                all
            }
        }
    }

    /// `d_T(α)` on the sampling lattice of `path`.
    pub fn lattice_norming(&self, alpha: &[f64], step: f64, n: usize) -> Result<Vec<f64>> {
        self.check_alpha(alpha)?;
        let q = self.dim();
        let mut acc = vec![0.0; q];
        let mut grad = vec![0.0; q];
        for k in 0..n {
            self.value_and_gradient(k as f64 * step, alpha, &mut grad);
            for (a, g) in acc.iter_mut().zip(&grad) {
                *a += g * g;
            }
        }
        acc.iter()
            .enumerate()
            .map(|(i, &v)| {
                if v > 0.0 {
                    Ok((v * step).sqrt())
                } else {
                    Err(Error::SingularNorming { coordinate: i })
                }
            })
            .collect()
    }

    /// `S_T(α) = ∫₀^T (X - g)² dt` on the lattice.
    pub fn sse(&self, data: &NoisePath, alpha: &[f64]) -> f64 {
        data.values
            .iter()
            .enumerate()
            .map(|(k, x)| (x - self.value(k as f64 * data.step, alpha)).powi(2))
            .sum::<f64>()
            * data.step
    }

    /// `Φ_T(α₁, α₂) = ∫₀^T (g(·,α₁) - g(·,α₂))² dt` on the lattice.
    pub fn separation(&self, alpha1: &[f64], alpha2: &[f64], step: f64, n: usize) -> f64 {
        (0..n)
            .map(|k| {
                let t = k as f64 * step;
                (self.value(t, alpha1) - self.value(t, alpha2)).powi(2)
            })
            .sum::<f64>()
            * step
    }

    fn normal_equations(&self, data: &NoisePath, alpha: &[f64]) -> NormalEquations {
        let q = self.dim();
        let mut jtj = DMatrix::zeros(q, q);
        let mut rhs = DVector::zeros(q);
        let mut grad = vec![0.0; q];
        let mut value = 0.0;
        for (k, x) in data.values.iter().enumerate() {
            let g = self.value_and_gradient(k as f64 * data.step, alpha, &mut grad);
            let r = x - g;
            value += r * r;
            for a in 0..q {
                rhs[a] += grad[a] * r;
                for b in 0..=a {
                    jtj[(a, b)] += grad[a] * grad[b];
                }
            }
        }
        for a in 0..q {
            for b in 0..a {
                jtj[(b, a)] = jtj[(a, b)];
            }
        }
        let dt = data.step;
        NormalEquations {
            value: value * dt,
            jtj: jtj * dt,
            rhs: rhs * dt,
        }
    }

    /// Least-squares estimate of `α` from observations `X(kΔ)`.
    ///
    /// Trigonometric models are multimodal in the frequencies, so besides
    /// `init` the fit is restarted from the leading peaks of the data's
    /// periodogram. Among restarts whose `S_T` agree to 1e-9 relative, the one
    /// with the lexicographically smallest frequency vector wins.
    pub fn lse_fit(&self, data: &NoisePath, init: &[f64], opts: LseOptions) -> Result<LseFit> {
        self.validate()?;
        self.check_alpha(init)?;
        if data.is_empty() {
            return Err(Error::Shape { expected: 1, got: 0 });
        }
        if data.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("observations contain non-finite values".into()));
        }
        let bounds = self.bounds.bounds();
        let mut starts = vec![init.to_vec()];
        if let RegressionFamily::TrigonometricSum { harmonics } = self.family {
            starts.extend(self.frequency_seeds(data, harmonics, opts.extra_peaks));
        }

        let mut best: Option<(optim::Minimum, usize)> = None;
        let mut total_iterations = 0;
        for start in starts {
            let m = optim::levenberg_marquardt(|a| self.normal_equations(data, a), &start, &bounds, opts.lm);
            total_iterations += m.iterations;
            best = Some(match best {
                None => (m, 0),
                Some((b, _)) => {
                    if self.prefer(&m, &b) {
                        (m, 0)
                    } else {
                        (b, 0)
                    }
                }
            });
        }
        let (m, _) = best.expect("at least one start");
        let norming = self.lattice_norming(&m.x, data.step, data.len())?;
        Ok(LseFit {
            alpha_hat: m.x,
            sse: m.value,
            norming,
            converged: m.converged,
            iterations: total_iterations,
        })
    }

    fn prefer(&self, cand: &optim::Minimum, best: &optim::Minimum) -> bool {
        let scale = cand.value.abs().max(best.value.abs()).max(f64::MIN_POSITIVE);
        if (cand.value - best.value).abs() <= 1e-9 * scale {
            let freqs = |x: &[f64]| -> Vec<f64> {
                match self.family {
                    RegressionFamily::TrigonometricSum { harmonics } => (0..harmonics).map(|k| x[3 * k + 2]).collect(),
                    _ => x.to_vec(),
                }
            };
            let (a, b) = (freqs(&cand.x), freqs(&best.x));
            a.iter().zip(&b).find(|(x, y)| x != y).map_or(false, |(x, y)| x < y)
        } else {
            cand.value < best.value
        }
    }

    /// Starting points built from periodogram peaks: frequencies from the
    /// peaks, amplitudes from a linear least-squares solve at those frequencies.
    fn frequency_seeds(&self, data: &NoisePath, harmonics: usize, extra: usize) -> Vec<Vec<f64>> {
        let lo = (0..harmonics).map(|k| self.bounds.lower[3 * k + 2]).fold(f64::INFINITY, f64::min);
        let hi = (0..harmonics).map(|k| self.bounds.upper[3 * k + 2]).fold(0.0, f64::max);
        let peaks = periodogram_peaks(data, lo, hi, harmonics + extra);
        if peaks.is_empty() {
            return Vec::new();
        }
        let mut freq_sets: Vec<Vec<f64>> = Vec::new();
        let lead = harmonics.min(peaks.len());
        let mut base: Vec<f64> = peaks[..lead].to_vec();
        base.sort_by(f64::total_cmp);
        if lead == harmonics {
            freq_sets.push(base.clone());
        }
        for &alt in peaks.iter().skip(lead) {
            if harmonics == 1 {
                freq_sets.push(vec![alt]);
            } else if lead == harmonics {
                // swap in for the weakest leading peak
                let weakest = peaks[lead - 1];
                let mut set: Vec<f64> = base.iter().map(|&f| if f == weakest { alt } else { f }).collect();
                set.sort_by(f64::total_cmp);
                freq_sets.push(set);
            }
        }
        freq_sets
            .into_iter()
            .map(|freqs| {
                let freqs: Vec<f64> = freqs
                    .iter()
                    .enumerate()
                    .map(|(k, f)| f.clamp(self.bounds.lower[3 * k + 2], self.bounds.upper[3 * k + 2]))
                    .collect();
                let amps = linear_amplitudes(data, &freqs);
                let mut alpha = vec![0.0; 3 * harmonics];
                for k in 0..harmonics {
                    alpha[3 * k] = amps[2 * k];
                    alpha[3 * k + 1] = amps[2 * k + 1];
                    alpha[3 * k + 2] = freqs[k];
                }
                self.bounds.bounds().project(&mut alpha);
                alpha
            })
            .collect()
    }

    /// `X(kΔ) - g(kΔ, α̂)`.
    pub fn residuals(&self, data: &NoisePath, alpha_hat: &[f64]) -> Result<NoisePath> {
        self.check_alpha(alpha_hat)?;
        let values = data
            .values
            .iter()
            .enumerate()
            .map(|(k, x)| x - self.value(k as f64 * data.step, alpha_hat))
            .collect();
        Ok(NoisePath {
            step: data.step,
            values,
            seed: data.seed,
            coarse_step: data.coarse_step,
        })
    }

    /// Samples the noiseless signal `g(kΔ, α)`, `k < n`.
    pub fn signal(&self, alpha: &[f64], step: f64, n: usize) -> Result<Vec<f64>> {
        self.check_alpha(alpha)?;
        Ok((0..n).map(|k| self.value(k as f64 * step, alpha)).collect())
    }

    /// Empirical constant of the separation bound
    /// `Φ_T(α, α₀) ≤ c₀ ‖d_T(α₀)(α - α₀)‖²` over `samples` uniform draws from
    /// the box. Returns the largest observed ratio.
    pub fn separation_constant(&self, alpha0: &[f64], step: f64, n: usize, samples: usize, seed: u64) -> Result<f64> {
        self.check_alpha(alpha0)?;
        let d = self.lattice_norming(alpha0, step, n)?;
        let mut rng = rng::seeded(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let alpha: Vec<f64> = self
                .bounds
                .lower
                .iter()
                .zip(&self.bounds.upper)
                .map(|(&lo, &hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
                .collect();
            let norm: f64 = d.iter().zip(alpha.iter().zip(alpha0)).map(|(di, (a, b))| (di * (a - b)).powi(2)).sum();
            if norm > 0.0 {
                worst = worst.max(self.separation(&alpha, alpha0, step, n) / norm);
            }
        }
        Ok(worst)
    }

    /// `‖T^{-1/2} d_T(α₀)(α̂ - α₀)‖`, the quantity that must vanish for the
    /// LSE to be consistent in the normed sense.
    pub fn normed_error(&self, alpha0: &[f64], alpha_hat: &[f64], step: f64, n: usize) -> Result<f64> {
        let d = self.lattice_norming(alpha0, step, n)?;
        let horizon = step * n as f64;
        Ok(d.iter()
            .zip(alpha_hat.iter().zip(alpha0))
            .map(|(di, (a, b))| (di * (a - b)).powi(2))
            .sum::<f64>()
            .sqrt()
            / horizon.sqrt())
    }
}

/// Frequencies of the `count` largest local maxima of `|Σ x_k e^{-iλkΔ}|²`
/// inside `[lo, hi]`, on a 4× zero-padded FFT grid, strongest first.
pub fn periodogram_peaks(data: &NoisePath, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let n = data.len();
    if n < 4 || count == 0 {
        return Vec::new();
    }
    let size = (4 * n).next_power_of_two();
    let mut padded = data.values.clone();
    padded.resize(size, 0.0);
    let spec = dsp::real_dft(&padded);
    let bin = 2.0 * PI / (size as f64 * data.step);
    let power: Vec<f64> = spec[..size / 2].iter().map(|c| c.norm_sqr()).collect();
    let mut peaks: Vec<(f64, f64)> = (1..power.len() - 1)
        .filter(|&k| power[k] >= power[k - 1] && power[k] > power[k + 1])
        .map(|k| (k as f64 * bin, power[k]))
        .filter(|(f, _)| *f >= lo && *f <= hi)
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.into_iter().take(count).map(|(f, _)| f).collect()
}

/// Least-squares amplitudes `(A_1, B_1, …)` at fixed frequencies.
fn linear_amplitudes(data: &NoisePath, freqs: &[f64]) -> Vec<f64> {
    let m = 2 * freqs.len();
    let mut ata = DMatrix::<f64>::zeros(m, m);
    let mut atb = DVector::<f64>::zeros(m);
    let mut row = vec![0.0; m];
    for (k, x) in data.values.iter().enumerate() {
        let t = k as f64 * data.step;
        for (j, f) in freqs.iter().enumerate() {
            let (s, c) = (f * t).sin_cos();
            row[2 * j] = c;
            row[2 * j + 1] = s;
        }
        for a in 0..m {
            atb[a] += row[a] * x;
            for b in 0..m {
                ata[(a, b)] += row[a] * row[b];
            }
        }
    }
    ata.clone()
        .cholesky()
        .map(|c| c.solve(&atb).iter().copied().collect())
        .unwrap_or_else(|| vec![0.0; m])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trig1() -> RegressionModel {
        RegressionModel::trigonometric(1, vec![-5.0, -5.0, 0.5], vec![5.0, 5.0, 3.0])
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(trig1().eval(0.0, &[1.0, 0.0, 2.0]).unwrap(), 1.0);
        let exp = RegressionModel::exponential(vec![Regressor::Constant { value: 1.0 }], vec![-1.0], vec![1.0]);
        assert_eq!(exp.eval(3.0, &[0.0]).unwrap(), 1.0);
        let trig2 = RegressionModel::trigonometric(2, vec![-5.0, -5.0, 0.5, -5.0, -5.0, 0.5], vec![5.0, 5.0, 3.0, 5.0, 5.0, 3.0]);
        let v = trig2.eval(PI, &[1.0, 0.0, 1.0, 0.0, 1.0, 2.0]).unwrap();
        assert!((v + 1.0).abs() < 1e-14);
    }

    #[test]
    fn out_of_box_is_a_domain_error() {
        assert!(matches!(trig1().eval(0.0, &[1.0, 0.0, 4.0]), Err(Error::Domain { .. })));
        assert!(matches!(trig1().gradient(0.0, &[1.0, 0.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn trig_gradient_entries() {
        let m = trig1();
        let g = m.gradient(0.7, &[1.0, 0.0, 2.0]).unwrap();
        assert!((g[0] - (1.4f64).cos()).abs() < 1e-15);
        assert!((g[2] + 0.7 * (1.4f64).sin()).abs() < 1e-15);
    }

    #[test]
    fn exponential_norming_is_horizon() {
        let exp = RegressionModel::exponential(vec![Regressor::Constant { value: 1.0 }], vec![-1.0], vec![1.0]);
        let d = exp.norming(&[0.0], 10.0).unwrap();
        assert!((d[0] * d[0] - 10.0).abs() < 1e-10);
    }

    #[test]
    fn zero_amplitude_makes_frequency_norming_singular() {
        let err = trig1().norming(&[0.0, 0.0, 1.0], 20.0).unwrap_err();
        assert!(matches!(err, Error::SingularNorming { coordinate: 2 }));
    }

    #[test]
    fn noiseless_fit_is_a_fixed_point() {
        let m = trig1();
        let alpha0 = [2.0, 1.0, 1.5];
        let values = m.signal(&alpha0, 0.05, 4000).unwrap();
        let data = NoisePath::new(0.05, values);
        let fit = m.lse_fit(&data, &alpha0, LseOptions::default()).unwrap();
        for (a, b) in fit.alpha_hat.iter().zip(&alpha0) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(fit.sse < 1e-12);
        let res = m.residuals(&data, &fit.alpha_hat).unwrap();
        assert!(res.values.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn multistart_recovers_frequency_from_poor_init() {
        let m = trig1();
        let alpha0 = [2.0, 1.0, 1.5];
        let values = m.signal(&alpha0, 0.05, 4000).unwrap();
        let data = NoisePath::new(0.05, values);
        let fit = m.lse_fit(&data, &[0.5, 0.5, 2.8], LseOptions::default()).unwrap();
        assert!((fit.alpha_hat[2] - 1.5).abs() < 1e-9, "{:?}", fit.alpha_hat);
    }

    #[test]
    fn residual_mean_square_is_sse_over_horizon() {
        let m = trig1();
        let values: Vec<f64> = (0..500).map(|k| (0.3 * k as f64).sin() + 0.1 * ((k * 17 % 7) as f64 - 3.0)).collect();
        let data = NoisePath::new(0.1, values);
        let fit = m.lse_fit(&data, &[0.0, 1.0, 3.0], LseOptions::default()).unwrap();
        let res = m.residuals(&data, &fit.alpha_hat).unwrap();
        assert!((res.mean_square() - fit.sse / data.horizon()).abs() < 1e-12);
    }
}
