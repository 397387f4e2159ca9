//! Lévy drivers, moving-average kernels and the linear noise
//! `ε(t) = ∫ â(t - s) dL(s)` they generate.
//!
//! Drivers are restricted to zero-mean mixtures of Brownian motion and a
//! compound Poisson process with centred normal jumps, so every cumulant of
//! `L(1)` is available in closed form. Kernels are the Gamma family (with the
//! one-sided Ornstein–Uhlenbeck kernel as the zero-shape member), the
//! two-sided well-balanced Ornstein–Uhlenbeck kernel and the under-damped
//! CAR(2) Green function `e^{-αt} sin(ωt)/ω`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::rng;

/// Relative size of the kernel envelope at the truncation horizon.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverFamily {
    Brownian,
    CompoundPoissonNormal,
    Mixed,
}

/// Zero-mean Lévy driver: Brownian part with variance `brownian_variance`
/// per unit time plus compound Poisson jumps `N(0, jump_std²)` arriving at
/// rate `jump_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyDriverSpec {
    pub family: DriverFamily,
    #[serde(default)]
    pub brownian_variance: f64,
    #[serde(default)]
    pub jump_rate: f64,
    #[serde(default)]
    pub jump_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub d2: f64,
    pub d4: f64,
    pub gamma2: f64,
}

impl LevyDriverSpec {
    pub fn brownian(variance: f64) -> Self {
        Self {
            family: DriverFamily::Brownian,
            brownian_variance: variance,
            jump_rate: 0.0,
            jump_std: 0.0,
        }
    }

    pub fn compound_poisson(rate: f64, jump_std: f64) -> Self {
        Self {
            family: DriverFamily::CompoundPoissonNormal,
            brownian_variance: 0.0,
            jump_rate: rate,
            jump_std,
        }
    }

    pub fn mixed(variance: f64, rate: f64, jump_std: f64) -> Self {
        Self {
            family: DriverFamily::Mixed,
            brownian_variance: variance,
            jump_rate: rate,
            jump_std,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("brownian_variance", self.brownian_variance),
            ("jump_rate", self.jump_rate),
            ("jump_std", self.jump_std),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(name, v, "[0, ∞)"));
            }
        }
        match self.family {
            DriverFamily::Brownian if self.jump_rate > 0.0 && self.jump_std > 0.0 => {
                return Err(Error::InvalidSpec("brownian driver cannot carry jumps".into()))
            }
            DriverFamily::CompoundPoissonNormal if self.brownian_variance > 0.0 => {
                return Err(Error::InvalidSpec(
                    "compound-poisson-normal driver cannot carry a brownian part".into(),
                ))
            }
            _ => {}
        }
        if self.jump_variance_rate() + self.brownian_part() <= 0.0 {
            return Err(Error::DegenerateDriver);
        }
        Ok(())
    }

    fn brownian_part(&self) -> f64 {
        match self.family {
            DriverFamily::CompoundPoissonNormal => 0.0,
            _ => self.brownian_variance,
        }
    }

    fn jump_variance_rate(&self) -> f64 {
        match self.family {
            DriverFamily::Brownian => 0.0,
            _ => self.jump_rate * self.jump_std * self.jump_std,
        }
    }

    /// r-th cumulant of `L(1)`. Odd cumulants vanish (symmetric jumps);
    /// even ones are `λ_p E J^r = λ_p σ_J^r (r-1)!!`, plus `b` for `r = 2`.
    pub fn cumulant(&self, r: usize) -> Result<f64> {
        self.validate()?;
        if r < 2 {
            return Ok(0.0);
        }
        if r % 2 == 1 {
            return Ok(0.0);
        }
        let (rate, std) = match self.family {
            DriverFamily::Brownian => (0.0, 0.0),
            _ => (self.jump_rate, self.jump_std),
        };
        let double_factorial: f64 = (1..r).step_by(2).map(|k| k as f64).product();
        let jumps = rate * std.powi(r as i32) * double_factorial;
        Ok(if r == 2 { jumps + self.brownian_part() } else { jumps })
    }

    pub fn cumulants(&self) -> Result<Cumulants> {
        let d2 = self.cumulant(2)?;
        let d4 = self.cumulant(4)?;
        Ok(Cumulants {
            d2,
            d4,
            gamma2: d4 / (d2 * d2),
        })
    }

    /// Draws `L(t + dt) - L(t)`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, rng: &mut R, dt: f64) -> f64 {
        let mut x = 0.0;
        let b = self.brownian_part();
        if b > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            x += (b * dt).sqrt() * z;
        }
        if !matches!(self.family, DriverFamily::Brownian) && self.jump_rate > 0.0 && self.jump_std > 0.0 {
            let mean = self.jump_rate * dt;
            let count: f64 = Poisson::new(mean).map(|p| p.sample(rng)).unwrap_or(0.0);
            if count > 0.0 {
                // sum of `count` iid N(0, σ²) jumps
                let z: f64 = StandardNormal.sample(rng);
                x += self.jump_std * count.sqrt() * z;
            }
        }
        x
    }
}

/// Moving-average kernel `â`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `e^{-λt}` on `t ≥ 0`.
    Ou { decay: f64 },
    /// `e^{-λ|t|}`.
    WellBalancedOu { decay: f64 },
    /// `t^α e^{-λt}` on `t ≥ 0`, `α > -1/2`.
    Gamma { decay: f64, shape: f64 },
    /// `e^{-αt} sin(ωt)/ω` on `t ≥ 0`.
    Car2Pendulum { decay: f64, frequency: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let decay = self.decay();
        if !(decay.is_finite() && decay > 0.0) {
            return Err(Error::domain("kernel decay", decay, "(0, ∞)"));
        }
        match *self {
            KernelSpec::Gamma { shape, .. } if !(shape.is_finite() && shape > -0.5) => {
                Err(Error::domain("gamma kernel shape", shape, "(-1/2, ∞)"))
            }
            KernelSpec::Car2Pendulum { frequency, .. } if !(frequency.is_finite() && frequency > 0.0) => {
                Err(Error::domain("CAR(2) frequency", frequency, "(0, ∞)"))
            }
            _ => Ok(()),
        }
    }

    pub fn decay(&self) -> f64 {
        match *self {
            KernelSpec::Ou { decay }
            | KernelSpec::WellBalancedOu { decay }
            | KernelSpec::Gamma { decay, .. }
            | KernelSpec::Car2Pendulum { decay, .. } => decay,
        }
    }

    pub fn is_causal(&self) -> bool {
        !matches!(self, KernelSpec::WellBalancedOu { .. })
    }

    /// Largest rate (1/time) on which the kernel varies.
    pub fn fastest_rate(&self) -> f64 {
        match *self {
            KernelSpec::Car2Pendulum { decay, frequency } => decay.max(frequency),
            _ => self.decay(),
        }
    }

    /// Time scale used to partition quadrature ranges.
    fn panel_width(&self) -> f64 {
        match *self {
            KernelSpec::Car2Pendulum { decay, frequency } => (1.0 / decay).min(PI / (2.0 * frequency)),
            _ => 1.0 / self.decay(),
        }
    }

    /// Truncation horizon `t*`: `max(-ln(tol)/decay, 20/decay)`, extended for
    /// Gamma kernels until the polynomial factor is dominated as well.
    pub fn horizon(&self) -> f64 {
        let decay = self.decay();
        let base = (-KERNEL_TOL.ln() / decay).max(20.0 / decay);
        match *self {
            KernelSpec::Gamma { shape, .. } if shape > 0.0 => {
                // t^α e^{-λt} peaks at α/λ; walk out until the envelope drops below tol of the peak
                let peak = shape / decay;
                let log_peak = shape * peak.ln() - decay * peak;
                let mut t = base.max(2.0 * peak);
                while shape * t.ln() - decay * t > log_peak + KERNEL_TOL.ln() {
                    t *= 1.25;
                }
                t
            }
            _ => base,
        }
    }

    /// `â(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            KernelSpec::Ou { decay } => {
                if t < 0.0 {
                    0.0
                } else {
                    (-decay * t).exp()
                }
            }
            KernelSpec::WellBalancedOu { decay } => (-decay * t.abs()).exp(),
            KernelSpec::Gamma { decay, shape } => {
                if t < 0.0 || (t == 0.0 && shape > 0.0) {
                    0.0
                } else if t == 0.0 && shape == 0.0 {
                    1.0
                } else if t == 0.0 {
                    f64::INFINITY
                } else {
                    (shape * t.ln() - decay * t).exp()
                }
            }
            KernelSpec::Car2Pendulum { decay, frequency } => {
                if t < 0.0 {
                    0.0
                } else {
                    (-decay * t).exp() * (frequency * t).sin() / frequency
                }
            }
        }
    }

    /// `a(λ) = ∫ â(t) e^{-iλt} dt`.
    pub fn transform(&self, lambda: f64) -> Complex64 {
        match *self {
            KernelSpec::Ou { decay } => Complex64::new(decay, lambda).inv(),
            KernelSpec::WellBalancedOu { decay } => Complex64::new(2.0 * decay / (decay * decay + lambda * lambda), 0.0),
            KernelSpec::Gamma { decay, shape } => {
                let g = statrs::function::gamma::gamma(shape + 1.0);
                Complex64::new(decay, lambda).powf(-(shape + 1.0)) * g
            }
            KernelSpec::Car2Pendulum { decay, frequency } => {
                Complex64::new(decay * decay + frequency * frequency - lambda * lambda, 2.0 * decay * lambda).inv()
            }
        }
    }

    /// `a(λ)` by direct quadrature of the defining integral over `[-t*, t*]`.
    pub fn transform_numeric(&self, lambda: f64) -> Result<Complex64> {
        let h = self.horizon();
        let lo = if self.is_causal() { 0.0 } else { -h };
        let width = self.panel_width().min(if lambda != 0.0 { PI / lambda.abs() } else { f64::INFINITY });
        let mut breaks = quad::uniform_breaks(lo, h, width);
        if !self.is_causal() {
            insert_break(&mut breaks, 0.0);
        }
        let opts = QuadOptions::default().with_abs_tol(1e-11);
        let re = quad::integrate_partition(|t| self.eval(t) * (lambda * t).cos(), &breaks, opts)?;
        let im = quad::integrate_partition(|t| -self.eval(t) * (lambda * t).sin(), &breaks, opts)?;
        Ok(Complex64::new(re.value, im.value))
    }
}

fn insert_break(breaks: &mut Vec<f64>, x: f64) {
    let first = breaks[0];
    let last = *breaks.last().unwrap();
    if x > first && x < last && !breaks.iter().any(|&b| b == x) {
        breaks.push(x);
        breaks.sort_by(f64::total_cmp);
    }
}

/// `B(t) = d₂ ∫ â(t+s) â(s) ds` by adaptive quadrature over the kernel's
/// effective support.
pub fn covariance(kernel: &KernelSpec, driver: &LevyDriverSpec, t: f64) -> Result<f64> {
    kernel.validate()?;
    let d2 = driver.cumulant(2)?;
    let h = kernel.horizon();
    let t = t.abs(); // B is even; integrate the t >= 0 branch
    // â(s) is negligible outside its own support window; â(t+s) is evaluated exactly
    let (lo, hi) = if kernel.is_causal() { (0.0, h) } else { (-h - t, h) };
    let mut breaks = quad::uniform_breaks(lo, hi, kernel.panel_width());
    if !kernel.is_causal() {
        insert_break(&mut breaks, 0.0);
        insert_break(&mut breaks, -t);
    }
    // Tight absolute tolerance: relative accuracy is needed near zero crossings of B.
    let scale = quad::integrate_partition(|s| kernel.eval(s).powi(2), &breaks_full(kernel), QuadOptions::default())?.value;
    let opts = QuadOptions::default()
        .with_abs_tol(1e-9_f64.min(1e-14 * scale.max(1e-300)))
        .with_rel_tol(1e-13);
    let est = quad::integrate_partition(|s| kernel.eval(t + s) * kernel.eval(s), &breaks, opts)?;
    Ok(d2 * est.value)
}

fn breaks_full(kernel: &KernelSpec) -> Vec<f64> {
    let h = kernel.horizon();
    let lo = if kernel.is_causal() { 0.0 } else { -h };
    let mut breaks = quad::uniform_breaks(lo, h, kernel.panel_width());
    if !kernel.is_causal() {
        insert_break(&mut breaks, 0.0);
    }
    breaks
}

/// `∫ â^p` over the kernel support, used for variance and fourth-cumulant scales.
pub fn kernel_power_integral(kernel: &KernelSpec, p: i32) -> Result<f64> {
    kernel.validate()?;
    let est = quad::integrate_partition(|s| kernel.eval(s).powi(p), &breaks_full(kernel), QuadOptions::default().with_abs_tol(1e-13))?;
    Ok(est.value)
}

/// Closed-form CAR(2) covariance
/// `d₂/(4(α²+ω²)) e^{-α|t|} (sin(ω|t|)/ω + cos(ωt)/α)`.
pub fn covariance_car2_closed_form(alpha: f64, omega: f64, d2: f64, t: f64) -> f64 {
    let at = t.abs();
    d2 / (4.0 * (alpha * alpha + omega * omega)) * (-alpha * at).exp() * ((omega * at).sin() / omega + (omega * t).cos() / alpha)
}

/// CAR(2) correlation `e^{-α|t|}(cos ωt + (α/ω) sin ω|t|)`.
pub fn correlation_car2(alpha: f64, omega: f64, t: f64) -> f64 {
    let at = t.abs();
    (-alpha * at).exp() * ((omega * t).cos() + alpha / omega * (omega * at).sin())
}

/// Spectral density of order `r = lambdas.len() + 1`:
/// `(2π)^{1-r} d_r a(-Σλ_j) Π a(λ_j)`.
pub fn spectral_density_order_r(kernel: &KernelSpec, driver: &LevyDriverSpec, lambdas: &[f64]) -> Result<Complex64> {
    let r = lambdas.len() + 1;
    if !(2..=4).contains(&r) {
        return Err(Error::UnsupportedOrder(r));
    }
    kernel.validate()?;
    let dr = driver.cumulant(r)?;
    let total: f64 = lambdas.iter().sum();
    let mut acc = kernel.transform(-total);
    for &l in lambdas {
        acc *= kernel.transform(l);
    }
    Ok(acc * dr * (2.0 * PI).powi(1 - r as i32))
}

/// Second-order spectral density `f(λ) = d₂ |a(λ)|² / 2π`.
pub fn spectral_density(kernel: &KernelSpec, driver: &LevyDriverSpec, lambda: f64) -> Result<f64> {
    let d2 = driver.cumulant(2)?;
    Ok(d2 * kernel.transform(lambda).norm_sqr() / (2.0 * PI))
}

/// A sampled path on the lattice `kΔ`, `k = 0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub step: f64,
    pub values: Vec<f64>,
    pub seed: Option<u64>,
    /// Set when Δ exceeds a tenth of the kernel's fastest time scale.
    pub coarse_step: bool,
}

impl NoisePath {
    pub fn new(step: f64, values: Vec<f64>) -> Self {
        Self {
            step,
            values,
            seed: None,
            coarse_step: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `T = nΔ`.
    pub fn horizon(&self) -> f64 {
        self.values.len() as f64 * self.step
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.step)
    }

    /// `T⁻¹ ∫₀^T x² dt` on the lattice.
    pub fn mean_square(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }
}

/// Number of lattice steps in `[0, T)`; rejects horizons that are not an
/// integer multiple of the step.
pub fn lattice_len(horizon: f64, step: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::domain("step", step, "(0, ∞)"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::domain("horizon", horizon, "(0, ∞)"));
    }
    let ratio = horizon / step;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
        return Err(Error::InvalidSpec(format!(
            "horizon {horizon} is not an integer multiple of the step {step}"
        )));
    }
    Ok(n as usize)
}

/// Simulates `ε(kΔ) ≈ Σ_j â(kΔ - s_j) ΔL_j` on `k = 0..T/Δ`, where `ΔL_j` is
/// the driver increment over the lattice cell with midpoint `s_j`. Cells
/// start `t*` before time zero (and run `t*` past `T` for two-sided
/// kernels), so the path is stationary from the first sample.
pub fn simulate_linear_noise(
    driver: &LevyDriverSpec,
    kernel: &KernelSpec,
    horizon: f64,
    step: f64,
    seed: u64,
) -> Result<NoisePath> {
    driver.validate()?;
    kernel.validate()?;
    let n = lattice_len(horizon, step)?;
    let reach = (kernel.horizon() / step).ceil() as i64 + 1;
    // tap m multiplies the increment over ((k-m)Δ, (k-m+1)Δ], midpoint (k-m+½)Δ
    let (m_lo, m_hi) = if kernel.is_causal() { (1_i64, reach) } else { (1 - reach, reach) };
    let taps: Vec<f64> = (m_lo..=m_hi).map(|m| kernel.eval((m as f64 - 0.5) * step)).collect();
    let n_inc = n + (m_hi - m_lo) as usize;

    let mut rng = rng::seeded(seed);
    let increments: Vec<f64> = (0..n_inc).map(|_| driver.sample_increment(&mut rng, step)).collect();
    // increment i sits at lattice index j = i - m_hi; output k uses i = k - m + m_hi
    let conv = dsp::convolve(&increments, &taps, (m_hi - m_lo) as usize, n);
    Ok(NoisePath {
        step,
        values: conv,
        seed: Some(seed),
        coarse_step: step > 1.0 / (10.0 * kernel.fastest_rate()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAR2: KernelSpec = KernelSpec::Car2Pendulum {
        decay: 1.0,
        frequency: 2.0,
    };

    #[test]
    fn cumulants_of_examples() {
        let c = LevyDriverSpec::brownian(1.0).cumulants().unwrap();
        assert_eq!((c.d2, c.d4, c.gamma2), (1.0, 0.0, 0.0));
        let c = LevyDriverSpec::compound_poisson(2.0, 1.0).cumulants().unwrap();
        assert_eq!((c.d2, c.d4, c.gamma2), (2.0, 6.0, 1.5));
        let c = LevyDriverSpec::mixed(1.0, 1.0, 1.0).cumulants().unwrap();
        assert_eq!((c.d2, c.d4, c.gamma2), (2.0, 3.0, 0.75));
    }

    #[test]
    fn degenerate_driver_is_rejected() {
        let d = LevyDriverSpec::mixed(0.0, 0.0, 1.0);
        assert!(matches!(d.cumulants(), Err(Error::DegenerateDriver)));
        let d = LevyDriverSpec::brownian(0.0);
        assert!(matches!(
            simulate_linear_noise(&d, &KernelSpec::Ou { decay: 1.0 }, 10.0, 0.1, 1),
            Err(Error::DegenerateDriver)
        ));
    }

    #[test]
    fn kernel_values() {
        assert_eq!(CAR2.eval(0.0), 0.0);
        assert_eq!(KernelSpec::Ou { decay: 1.0 }.eval(0.0), 1.0);
        let t = PI / 4.0;
        assert!((CAR2.eval(t) - (-t).exp() / 2.0).abs() < 1e-15);
        assert_eq!(CAR2.eval(-1.0), 0.0);
        assert_eq!(KernelSpec::Gamma { decay: 1.0, shape: 1.0 }.eval(-0.5), 0.0);
        assert!(KernelSpec::WellBalancedOu { decay: 1.0 }.eval(-1.0) > 0.0);
    }

    #[test]
    fn transforms_at_zero() {
        let a = CAR2.transform(0.0);
        assert!((a.re - 0.2).abs() < 1e-15 && a.im == 0.0);
        let a = KernelSpec::Ou { decay: 1.0 }.transform(0.0);
        assert!((a.re - 1.0).abs() < 1e-15 && a.im == 0.0);
    }

    #[test]
    fn closed_form_transforms_match_quadrature() {
        let kernels = [
            CAR2,
            KernelSpec::Ou { decay: 0.7 },
            KernelSpec::WellBalancedOu { decay: 1.3 },
            KernelSpec::Gamma { decay: 1.5, shape: 1.5 },
            KernelSpec::Gamma { decay: 2.0, shape: 0.0 },
        ];
        for k in kernels {
            for lambda in [0.0, 0.3, 1.0, -2.5, 7.0] {
                let closed = k.transform(lambda);
                let numeric = k.transform_numeric(lambda).unwrap();
                assert!((closed - numeric).norm() < 1e-8, "{k:?} λ={lambda}: {closed} vs {numeric}");
            }
        }
    }

    #[test]
    fn car2_transform_decays_like_inverse_square() {
        let r2 = CAR2.transform(1e2).norm() * 1e4;
        let r3 = CAR2.transform(1e3).norm() * 1e6;
        assert!((r2 - 1.0).abs() < 1e-3 && (r3 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn ou_covariance_matches_closed_form() {
        let d = LevyDriverSpec::brownian(1.0);
        let b = covariance(&KernelSpec::Ou { decay: 1.0 }, &d, 1.0).unwrap();
        assert!((b - (-1.0f64).exp() / 2.0).abs() < 1e-9);
        let b = covariance(&KernelSpec::WellBalancedOu { decay: 1.0 }, &d, 0.5).unwrap();
        // ∫ e^{-|t+s|} e^{-|s|} ds = (1 + t) e^{-t}
        assert!((b - 1.5 * (-0.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn car2_covariance_closed_form_values() {
        assert!((covariance_car2_closed_form(1.0, 2.0, 1.0, 0.0) - 0.05).abs() < 1e-16);
        assert_eq!(correlation_car2(1.0, 2.0, 0.0), 1.0);
        let b = covariance(&CAR2, &LevyDriverSpec::brownian(1.0), 0.0).unwrap();
        assert!((b - 0.05).abs() < 1e-6 * 0.05);
        for t in [0.3, 1.7, 4.2] {
            let ratio = covariance_car2_closed_form(1.0, 2.0, 3.0, t) / covariance_car2_closed_form(1.0, 2.0, 3.0, 0.0);
            assert!((ratio - correlation_car2(1.0, 2.0, t)).abs() < 1e-14);
        }
    }

    #[test]
    fn spectral_density_orders() {
        let d = LevyDriverSpec::brownian(1.0);
        let f = spectral_density_order_r(&CAR2, &d, &[0.0]).unwrap();
        assert!((f.re - 1.0 / (2.0 * PI * 25.0)).abs() < 1e-15 && f.im.abs() < 1e-18);
        let fp = spectral_density_order_r(&CAR2, &d, &[1.3]).unwrap();
        let fm = spectral_density_order_r(&CAR2, &d, &[-1.3]).unwrap();
        assert!((fp - fm).norm() < 1e-16);
        assert_eq!(spectral_density_order_r(&CAR2, &d, &[0.5, 0.2]).unwrap(), Complex64::new(0.0, 0.0));
        assert!(matches!(spectral_density_order_r(&CAR2, &d, &[]), Err(Error::UnsupportedOrder(1))));
        assert!(matches!(
            spectral_density_order_r(&CAR2, &d, &[0.0; 4]),
            Err(Error::UnsupportedOrder(5))
        ));
        let cp = LevyDriverSpec::compound_poisson(2.0, 1.0);
        let f4 = spectral_density_order_r(&CAR2, &cp, &[0.4, -0.4, 1.0]).unwrap();
        let expect = 6.0 / (2.0 * PI).powi(3) * CAR2.transform(0.4).norm_sqr() * CAR2.transform(1.0).norm_sqr();
        assert!((f4.re - expect).abs() < 1e-15 && f4.im.abs() < 1e-15);
    }

    #[test]
    fn simulation_is_reproducible_and_flags_coarse_steps() {
        let d = LevyDriverSpec::mixed(0.5, 1.0, 0.7);
        let a = simulate_linear_noise(&d, &CAR2, 50.0, 0.05, 11).unwrap();
        let b = simulate_linear_noise(&d, &CAR2, 50.0, 0.05, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        assert!(!a.coarse_step);
        let c = simulate_linear_noise(&d, &CAR2, 50.0, 0.25, 11).unwrap();
        assert!(c.coarse_step);
        assert!(lattice_len(10.0, 0.3).is_err());
    }
}
