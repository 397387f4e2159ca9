//! Periodograms, parametric spectral densities and weight functions.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};
use crate::levy_noise::NoisePath;
use crate::regression::ParamBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodogramSource {
    Raw,
    Residual,
}

/// Fourier frequencies `λ_k = 2πk/T` for `|k| ≤ max_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyGrid {
    pub max_index: usize,
}

impl FrequencyGrid {
    /// All Fourier frequencies with `|λ_k| ≤ lambda_max`.
    pub fn up_to(lambda_max: f64, horizon: f64) -> Self {
        let k = (lambda_max * horizon / (2.0 * PI) + 1e-9).floor();
        Self {
            max_index: k.max(0.0) as usize,
        }
    }
}

/// `I_T(λ_k)` on a symmetric Fourier grid, ordered by increasing `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub horizon: f64,
    pub step: f64,
    pub source: PeriodogramSource,
}

impl Periodogram {
    /// Spacing `2π/T` of the Fourier grid.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.horizon
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Builds a periodogram from given values on the grid, e.g. `f(λ_k, θ*)`
    /// for oracle checks of the contrast minimiser.
    pub fn from_fn(grid: FrequencyGrid, horizon: f64, step: f64, mut value: impl FnMut(f64) -> f64) -> Self {
        let k = grid.max_index as i64;
        let frequencies: Vec<f64> = (-k..=k).map(|j| 2.0 * PI * j as f64 / horizon).collect();
        let values = frequencies.iter().map(|&l| value(l)).collect();
        Self {
            frequencies,
            values,
            horizon,
            step,
            source: PeriodogramSource::Raw,
        }
    }

    /// Trapezoid rule `∫ h(λ) dλ` over the grid.
    pub fn trapezoid(&self, mut h: impl FnMut(f64, f64) -> f64) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let mut acc = 0.0;
        for (i, (&l, &v)) in self.frequencies.iter().zip(&self.values).enumerate() {
            let wgt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += wgt * h(l, v);
        }
        acc * self.spacing()
    }
}

/// `(2πT)^{-1} Δ² |Σ_j x_j e^{-2πijk/n}|²` at every FFT bin `k = 0..n`.
pub fn full_periodogram(path: &NoisePath) -> Vec<f64> {
    let scale = path.step * path.step / (2.0 * PI * path.horizon());
    dsp::real_dft(&path.values).iter().map(|c| c.norm_sqr() * scale).collect()
}

/// `I_T(λ_k) = (2πT)^{-1} |∫₀^T x(t) e^{-iλ_k t} dt|²` with the integral
/// replaced by its lattice sum; negative frequencies are mirrored.
pub fn periodogram(path: &NoisePath, grid: FrequencyGrid, source: PeriodogramSource) -> Result<Periodogram> {
    let n = path.len();
    if n == 0 {
        return Err(Error::Shape { expected: 1, got: 0 });
    }
    if 2 * grid.max_index > n {
        let lambda = 2.0 * PI * grid.max_index as f64 / path.horizon();
        return Err(Error::domain("periodogram frequency", lambda, format!("|λ| ≤ π/Δ = {}", PI / path.step)));
    }
    let full = full_periodogram(path);
    let k = grid.max_index;
    let mut values = Vec::with_capacity(2 * k + 1);
    values.extend(full[1..=k].iter().rev());
    values.extend(&full[..=k]);
    let t = path.horizon();
    let frequencies = (-(k as i64)..=k as i64).map(|j| 2.0 * PI * j as f64 / t).collect();
    Ok(Periodogram {
        frequencies,
        values,
        horizon: t,
        step: path.step,
        source,
    })
}

pub fn residual_periodogram(residuals: &NoisePath, grid: FrequencyGrid) -> Result<Periodogram> {
    periodogram(residuals, grid, PeriodogramSource::Residual)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectralFamily {
    /// `θ = (α, β, γ)`, `f = β / (2π((λ²-α²-γ²)² + 4α²λ²))`.
    Car2Pendulum,
    /// `θ = (κ, β)`, `f = β / (2π(κ² + λ²))`.
    Ou,
    /// `θ = (α, β, γ)`, `f = β / (2π|λ|^{2α}(1+λ²)^γ)`. Evaluation only.
    RieszBessel {
        #[serde(default)]
        eval_only: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralModel {
    pub family: SpectralFamily,
    #[serde(rename = "box")]
    pub bounds: ParamBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
}

impl SpectralModel {
    pub fn car2(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            family: SpectralFamily::Car2Pendulum,
            bounds: ParamBox::new(lower, upper),
            truth: None,
        }
    }

    pub fn ou(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            family: SpectralFamily::Ou,
            bounds: ParamBox::new(lower, upper),
            truth: None,
        }
    }

    /// The long-memory family lies outside the estimation theory; the caller
    /// must acknowledge that it is evaluation-only.
    pub fn riesz_bessel(lower: Vec<f64>, upper: Vec<f64>, eval_only: bool) -> Result<Self> {
        let m = Self {
            family: SpectralFamily::RieszBessel { eval_only },
            bounds: ParamBox::new(lower, upper),
            truth: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_truth(mut self, theta: Vec<f64>) -> Self {
        self.truth = Some(theta);
        self
    }

    pub fn dim(&self) -> usize {
        match self.family {
            SpectralFamily::Ou => 2,
            _ => 3,
        }
    }

    pub fn is_estimable(&self) -> bool {
        !matches!(self.family, SpectralFamily::RieszBessel { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if let SpectralFamily::RieszBessel { eval_only: false } = self.family {
            return Err(Error::InvalidSpec("riesz-bessel density requires eval_only = true".into()));
        }
        self.bounds.validate(self.dim(), "theta")?;
        let positive_from = match self.family {
            SpectralFamily::RieszBessel { .. } => 1,
            _ => 0,
        };
        for i in positive_from..self.dim() {
            if self.bounds.lower[i] <= 0.0 {
                return Err(Error::InvalidSpec(format!("theta box coordinate {i} must be strictly positive")));
            }
        }
        if let Some(t) = &self.truth {
            self.check_theta(t)?;
        }
        Ok(())
    }

    pub(crate) fn require_estimable(&self) -> Result<()> {
        if self.is_estimable() {
            Ok(())
        } else {
            Err(Error::InvalidSpec("riesz-bessel density is evaluation-only".into()))
        }
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        self.bounds.check(theta, "theta")
    }

    /// `f(λ, θ)`.
    pub fn eval(&self, lambda: f64, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.density(lambda, theta))
    }

    /// `∇_θ f(λ, θ)`.
    pub fn gradient(&self, lambda: f64, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        self.require_estimable()?;
        let mut g = vec![0.0; self.dim()];
        self.density_and_gradient(lambda, theta, &mut g);
        Ok(g)
    }

    /// `∂²f / ∂θ_i ∂θ_j`.
    pub fn hessian(&self, lambda: f64, theta: &[f64]) -> Result<DMatrix<f64>> {
        self.check_theta(theta)?;
        self.require_estimable()?;
        let m = self.dim();
        let beta = theta[1];
        let d = self.denominator(lambda, theta);
        let mut h = DMatrix::zeros(m, m);
        let c = 1.0 / (2.0 * PI);
        for i in 0..m {
            for j in 0..m {
                h[(i, j)] = match (i == 1, j == 1) {
                    (true, true) => 0.0,
                    (true, false) => -c * d.ds[j] / (d.s * d.s),
                    (false, true) => -c * d.ds[i] / (d.s * d.s),
                    (false, false) => {
                        c * beta * (2.0 * d.ds[i] * d.ds[j] / (d.s * d.s * d.s) - d.dss[(i, j)] / (d.s * d.s))
                    }
                };
            }
        }
        Ok(h)
    }

    pub(crate) fn density(&self, lambda: f64, theta: &[f64]) -> f64 {
        match self.family {
            SpectralFamily::Car2Pendulum => {
                let (a, b, g) = (theta[0], theta[1], theta[2]);
                let u = lambda * lambda - a * a - g * g;
                b / (2.0 * PI * (u * u + 4.0 * a * a * lambda * lambda))
            }
            SpectralFamily::Ou => theta[1] / (2.0 * PI * (theta[0] * theta[0] + lambda * lambda)),
            SpectralFamily::RieszBessel { .. } => {
                let (a, b, g) = (theta[0], theta[1], theta[2]);
                b / (2.0 * PI * lambda.abs().powf(2.0 * a) * (1.0 + lambda * lambda).powf(g))
            }
        }
    }

    /// Writes `∇_θ f` into `grad` and returns `f`. Not meaningful for the
    /// evaluation-only family.
    pub(crate) fn density_and_gradient(&self, lambda: f64, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.denominator(lambda, theta);
        let f = theta[1] / (2.0 * PI * d.s);
        for (i, slot) in grad.iter_mut().enumerate() {
            *slot = if i == 1 { f / theta[1] } else { -f * d.ds[i] / d.s };
        }
        f
    }

    /// `s(λ, θ)` with `f = β/(2πs)` and its derivatives; the `β` slots are zero.
    fn denominator(&self, lambda: f64, theta: &[f64]) -> Denominator {
        let l2 = lambda * lambda;
        match self.family {
            SpectralFamily::Ou => {
                let k = theta[0];
                let mut dss = DMatrix::zeros(2, 2);
                dss[(0, 0)] = 2.0;
                Denominator {
                    s: k * k + l2,
                    ds: [2.0 * k, 0.0, 0.0],
                    dss,
                }
            }
            _ => {
                let (a, g) = (theta[0], theta[2]);
                let u = l2 - a * a - g * g;
                let mut dss = DMatrix::zeros(3, 3);
                dss[(0, 0)] = 4.0 * l2 + 12.0 * a * a + 4.0 * g * g;
                dss[(2, 2)] = -4.0 * l2 + 4.0 * a * a + 12.0 * g * g;
                dss[(0, 2)] = 8.0 * a * g;
                dss[(2, 0)] = 8.0 * a * g;
                Denominator {
                    s: u * u + 4.0 * a * a * l2,
                    ds: [4.0 * a * (l2 + a * a + g * g), 0.0, -4.0 * g * u],
                    dss,
                }
            }
        }
    }
}

struct Denominator {
    s: f64,
    ds: [f64; 3],
    dss: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    W,
    V,
}

/// `w(λ) = scale·(1+λ²)^{-a}` and `v(λ) = (1+λ²)^{-b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub a: f64,
    pub b: f64,
    #[serde(default = "unit_scale", skip_serializing_if = "is_unit")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

fn is_unit(x: &f64) -> bool {
    *x == 1.0
}

/// Relative level of `w` below which the frequency integrals are truncated.
pub const WEIGHT_TAIL: f64 = 1e-8;

impl WeightSpec {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b, scale: 1.0 }
    }

    pub fn scaled(self, scale: f64) -> Self {
        Self { scale, ..self }
    }

    pub fn eval(&self, lambda: f64, which: WeightKind) -> f64 {
        let base = 1.0 + lambda * lambda;
        match which {
            WeightKind::W => self.scale * base.powf(-self.a),
            WeightKind::V => base.powf(-self.b),
        }
    }

    pub fn w(&self, lambda: f64) -> f64 {
        self.eval(lambda, WeightKind::W)
    }

    /// `Λ_max` with `w(Λ_max) = WEIGHT_TAIL · w(0)`.
    pub fn lambda_max(&self) -> f64 {
        (WEIGHT_TAIL.powf(-1.0 / self.a) - 1.0).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("scale", self.scale)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("weight {name}"), v, "(0, ∞)"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    pub violations: Vec<String>,
    /// Largest `w/f` seen on the log grid over the corners of `Θ`.
    pub sup_w_over_f: f64,
}

impl WeightDiagnostics {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the exponent rules for CAR(2) estimation and spot-checks that
/// `w/f` stays bounded on a log-spaced grid up to `λ = 10⁴`.
pub fn validate_weight_conditions(weights: &WeightSpec, model: &SpectralModel) -> WeightDiagnostics {
    let mut violations = Vec::new();
    if let Err(e) = weights.validate() {
        violations.push(e.to_string());
    }
    if model.family == SpectralFamily::Car2Pendulum {
        let (a, b) = (weights.a, weights.b);
        if !(a > 2.5) {
            violations.push(format!("weight exponent a = {a} violates a > 5/2"));
        }
        if !(a >= b) {
            violations.push(format!("weight exponents a = {a}, b = {b} violate a ≥ b"));
        }
        if !(b > 2.0) {
            violations.push(format!("weight exponent b = {b} violates b > 2"));
        }
    }
    let grid: Vec<f64> = (0..=120).map(|i| 10f64.powf(-2.0 + 6.0 * i as f64 / 120.0)).collect();
    let mut sup: f64 = 0.0;
    let mut growing = false;
    let m = model.dim();
    if model.bounds.dim() == m {
        for corner in 0..(1usize << m) {
            let theta: Vec<f64> = (0..m)
                .map(|i| if corner >> i & 1 == 1 { model.bounds.upper[i] } else { model.bounds.lower[i] })
                .collect();
            let ratio = |l: f64| weights.w(l) / model.density(l, &theta);
            let tail = grid.len() - 21;
            for &l in &grid {
                sup = sup.max(ratio(l));
            }
            if ratio(grid[grid.len() - 1]) > ratio(grid[tail]) * (1.0 + 1e-9) {
                growing = true;
            }
        }
    }
    if growing || !sup.is_finite() {
        violations.push("w/f is not bounded on the spot-check grid".to_string());
    }
    WeightDiagnostics {
        violations,
        sup_w_over_f: sup,
    }
}
