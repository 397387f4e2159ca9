//! Whittle minimum-contrast estimation of the spectral parameter `θ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::levy_noise::{self, KernelSpec, NoisePath};
use crate::optim::{self, BfgsOptions, NelderMeadOptions};
use crate::quad::{self, QuadOptions};
use crate::spectral::{Periodogram, SpectralModel, WeightSpec};

/// The contrast `U_T(θ) = ∫ (log f + I_T/f) w dλ` discretised by the
/// trapezoid rule on the part of the periodogram grid with `|λ| ≤ Λ_max`.
pub struct Contrast<'a> {
    model: &'a SpectralModel,
    lambdas: Vec<f64>,
    periodogram: Vec<f64>,
    /// Trapezoid weight times `w(λ)`.
    weights: Vec<f64>,
}

impl<'a> Contrast<'a> {
    pub fn new(p: &Periodogram, model: &'a SpectralModel, w: &WeightSpec) -> Result<Self> {
        w.validate()?;
        let cut = w.lambda_max();
        let idx: Vec<usize> = (0..p.len()).filter(|&i| p.frequencies[i].abs() <= cut).collect();
        let h = p.spacing();
        let weights = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                let end = if j == 0 || j + 1 == idx.len() { 0.5 } else { 1.0 };
                end * h * w.w(p.frequencies[i])
            })
            .collect();
        Ok(Self {
            model,
            lambdas: idx.iter().map(|&i| p.frequencies[i]).collect(),
            periodogram: idx.iter().map(|&i| p.values[i]).collect(),
            weights,
        })
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        self.model.check_theta(theta)?;
        self.value_unchecked(theta)
    }

    fn value_unchecked(&self, theta: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for ((&l, &i), &w) in self.lambdas.iter().zip(&self.periodogram).zip(&self.weights) {
            let f = self.model.density(l, theta);
            if !(f > 0.0) {
                return Err(Error::ModelPositivity { lambda: l });
            }
            acc += (f.ln() + i / f) * w;
        }
        Ok(acc)
    }

    /// `∇U_T(θ) = ∫ (∇f/f)(1 - I_T/f) w dλ`.
    pub fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.model.check_theta(theta)?;
        self.model.require_estimable()?;
        let m = self.model.dim();
        let mut grad = vec![0.0; m];
        let mut df = vec![0.0; m];
        let mut acc = 0.0;
        for ((&l, &i), &w) in self.lambdas.iter().zip(&self.periodogram).zip(&self.weights) {
            let f = self.model.density_and_gradient(l, theta, &mut df);
            if !(f > 0.0) {
                return Err(Error::ModelPositivity { lambda: l });
            }
            let ratio = i / f;
            acc += (f.ln() + ratio) * w;
            let c = (1.0 - ratio) * w / f;
            for (g, d) in grad.iter_mut().zip(&df) {
                *g += c * d;
            }
        }
        Ok((acc, grad))
    }
}

pub fn contrast_field(p: &Periodogram, model: &SpectralModel, w: &WeightSpec, theta: &[f64]) -> Result<f64> {
    Contrast::new(p, model, w)?.value(theta)
}

pub fn contrast_gradient(p: &Periodogram, model: &SpectralModel, w: &WeightSpec, theta: &[f64]) -> Result<Vec<f64>> {
    Ok(Contrast::new(p, model, w)?.value_and_gradient(theta)?.1)
}

/// `∫_ℝ h(λ) dλ` for even `h`, split into unit panels up to `Λ_max` and a
/// mapped tail beyond.
fn even_integral(mut h: impl FnMut(f64) -> f64, w: &WeightSpec, opts: QuadOptions) -> Result<f64> {
    let cut = w.lambda_max().max(10.0);
    let breaks = quad::uniform_breaks(0.0, cut, 0.25);
    let body = quad::integrate_partition(&mut h, &breaks, opts)?;
    let tail = quad::integrate_to_infinity(&mut h, cut, cut, opts)?;
    Ok(2.0 * (body.value + tail.value))
}

/// `K(θ₀, θ) = ∫ (f₀/f - 1 - log(f₀/f)) w dλ`.
#[allow(non_snake_case)]
pub fn contrast_function_K(model: &SpectralModel, w: &WeightSpec, theta0: &[f64], theta: &[f64]) -> Result<f64> {
    model.check_theta(theta0)?;
    model.check_theta(theta)?;
    w.validate()?;
    let opts = QuadOptions::default().with_abs_tol(1e-13).with_rel_tol(1e-10);
    even_integral(
        |l| {
            let x = model.density(l, theta0) / model.density(l, theta);
            // x - 1 - ln x loses everything to cancellation near x = 1
            let d = x - 1.0;
            let g = if d.abs() < 1e-4 {
                d * d * (0.5 - d / 3.0 + d * d / 4.0)
            } else {
                d - x.ln()
            };
            g * w.w(l)
        },
        w,
        opts,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticMatrices {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

/// `W₁ = ∫ ∇log f ∇'log f w`, `W₂ = 4π ∫ ∇log f ∇'log f w²` and
/// `V = γ₂ (∫ ∇log f w)(∫ ∇log f w)'`, each by adaptive quadrature.
pub fn asymptotic_matrices(model: &SpectralModel, w: &WeightSpec, gamma2: f64, theta: &[f64]) -> Result<AsymptoticMatrices> {
    model.check_theta(theta)?;
    model.require_estimable()?;
    w.validate()?;
    if !(gamma2.is_finite() && gamma2 >= 0.0) {
        return Err(Error::domain("gamma2", gamma2, "[0, ∞)"));
    }
    let m = model.dim();
    let opts = QuadOptions::default().with_abs_tol(1e-14).with_rel_tol(1e-11);
    let mut df = vec![0.0; m];
    let mut score = |l: f64, i: usize| -> f64 {
        let f = model.density_and_gradient(l, theta, &mut df);
        df[i] / f
    };
    let mut w1 = DMatrix::zeros(m, m);
    let mut w2 = DMatrix::zeros(m, m);
    let mut mean = vec![0.0; m];
    for i in 0..m {
        for j in 0..=i {
            let a = even_integral(|l| score(l, i) * score(l, j) * w.w(l), w, opts)?;
            let b = even_integral(
                |l| {
                    let wl = w.w(l);
                    score(l, i) * score(l, j) * wl * wl
                },
                w,
                opts,
            )?;
            w1[(i, j)] = a;
            w1[(j, i)] = a;
            w2[(i, j)] = 4.0 * PI * b;
            w2[(j, i)] = 4.0 * PI * b;
        }
        if gamma2 > 0.0 {
            mean[i] = even_integral(|l| score(l, i) * w.w(l), w, opts)?;
        }
    }
    let mut v = DMatrix::zeros(m, m);
    if gamma2 > 0.0 {
        for i in 0..m {
            for j in 0..m {
                v[(i, j)] = gamma2 * mean[i] * mean[j];
            }
        }
    }
    Ok(AsymptoticMatrices { w1, w2, v })
}

/// Condition number of `W₁` above which the sandwich is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// `W = W₁⁻¹ (W₂ + V) W₁⁻¹`.
pub fn mce_covariance(w1: &DMatrix<f64>, w2: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = w1.nrows();
    for mat in [w1, w2, v] {
        if mat.nrows() != m || mat.ncols() != m {
            return Err(Error::Shape {
                expected: m,
                got: mat.nrows().max(mat.ncols()),
            });
        }
    }
    let eig = w1.clone().symmetric_eigen().eigenvalues;
    let big = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let small = eig.iter().fold(f64::INFINITY, |a, e| a.min(e.abs()));
    let condition = if small > 0.0 { big / small } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let inv = w1.clone().try_inverse().ok_or(Error::IllConditioned { condition })?;
    let w = &inv * (w2 + v) * &inv;
    Ok((&w + w.transpose()) * 0.5)
}

/// `θ̂_i ± z_{(1+level)/2} √(W_ii / T)`.
pub fn confidence_intervals(theta_hat: &[f64], w: &DMatrix<f64>, horizon: f64, level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain("confidence level", level, "(0, 1)"));
    }
    if !(horizon > 0.0) {
        return Err(Error::domain("horizon", horizon, "(0, ∞)"));
    }
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + level));
    Ok(theta_hat
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let half = z * (w[(i, i)].max(0.0) / horizon).sqrt();
            (t - half, t + half)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    /// Converged onto the boundary of `Θ`; the limit theory does not apply.
    Boundary,
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WhittleFit {
    pub theta_hat: Vec<f64>,
    pub contrast: f64,
    pub matrices: AsymptoticMatrices,
    pub w: DMatrix<f64>,
    pub ci: Vec<(f64, f64)>,
    pub level: f64,
    pub status: FitStatus,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub used_fallback: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct WhittleOptions {
    pub gamma2: f64,
    pub level: f64,
    pub bfgs: BfgsOptions,
    pub nelder_mead: NelderMeadOptions,
    /// Relative distance to a face of `Θ` that counts as on the boundary.
    pub boundary_tol: f64,
}

impl Default for WhittleOptions {
    fn default() -> Self {
        Self {
            gamma2: 0.0,
            level: 0.95,
            bfgs: BfgsOptions::default(),
            nelder_mead: NelderMeadOptions::default(),
            boundary_tol: 1e-9,
        }
    }
}

/// Minimises the contrast over `Θ` from `init`, then evaluates the sandwich
/// covariance and intervals at the minimiser.
pub fn whittle_fit(
    p: &Periodogram,
    model: &SpectralModel,
    w: &WeightSpec,
    init: &[f64],
    opts: WhittleOptions,
) -> Result<WhittleFit> {
    model.validate()?;
    model.require_estimable()?;
    model.check_theta(init)?;
    let contrast = Contrast::new(p, model, w)?;
    let bounds = model.bounds.bounds();
    let objective = |x: &[f64]| match contrast.value_and_gradient(x) {
        Ok(v) => v,
        Err(_) => (f64::INFINITY, vec![0.0; x.len()]),
    };
    let mut best = optim::projected_bfgs(objective, init, &bounds, opts.bfgs);
    let mut iterations = best.iterations;
    let mut evaluations = best.evaluations;
    let mut used_fallback = false;
    if !best.converged {
        used_fallback = true;
        let nm = optim::nelder_mead(
            |x| contrast.value_unchecked(x).unwrap_or(f64::INFINITY),
            &best.x,
            &bounds,
            opts.nelder_mead,
        );
        iterations += nm.iterations;
        evaluations += nm.evaluations;
        if nm.value < best.value {
            let polish = optim::projected_bfgs(objective, &nm.x, &bounds, opts.bfgs);
            iterations += polish.iterations;
            evaluations += polish.evaluations;
            best = if polish.value <= nm.value { polish } else { nm };
        }
    }
    if !best.value.is_finite() {
        return Err(Error::ModelPositivity { lambda: f64::NAN });
    }
    let status = if bounds.on_boundary(&best.x, opts.boundary_tol) {
        FitStatus::Boundary
    } else if best.converged {
        FitStatus::Converged
    } else {
        FitStatus::Stalled
    };
    let matrices = asymptotic_matrices(model, w, opts.gamma2, &best.x)?;
    let cov = mce_covariance(&matrices.w1, &matrices.w2, &matrices.v)?;
    let ci = confidence_intervals(&best.x, &cov, p.horizon, opts.level)?;
    Ok(WhittleFit {
        contrast: best.value,
        theta_hat: best.x,
        matrices,
        w: cov,
        ci,
        level: opts.level,
        converged: status == FitStatus::Converged,
        status,
        iterations,
        evaluations,
        used_fallback,
    })
}

/// Rectangular grid for the brute-force minimiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: usize,
    /// Zoom steps, each re-gridding one coarse cell either side of the incumbent.
    #[serde(default)]
    pub refinements: usize,
}

/// Exhaustive minimisation of the contrast on a grid, scanned in
/// lexicographic order so ties go to the smallest point.
pub fn grid_oracle(p: &Periodogram, model: &SpectralModel, w: &WeightSpec, grid: &GridSpec) -> Result<(Vec<f64>, f64)> {
    let m = model.dim();
    if grid.lower.len() != m || grid.upper.len() != m {
        return Err(Error::Shape {
            expected: m,
            got: grid.lower.len(),
        });
    }
    if grid.points == 0 {
        return Err(Error::InvalidSpec("grid needs at least one point per axis".into()));
    }
    let contrast = Contrast::new(p, model, w)?;
    let mut lo = grid.lower.clone();
    let mut hi = grid.upper.clone();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..=grid.refinements {
        let axes: Vec<Vec<f64>> = (0..m).map(|i| axis(lo[i], hi[i], grid.points)).collect();
        let total = grid.points.pow(m as u32);
        let mut point = vec![0.0; m];
        for flat in 0..total {
            let mut rem = flat;
            for i in (0..m).rev() {
                point[i] = axes[i][rem % grid.points];
                rem /= grid.points;
            }
            let v = contrast.value(&point)?;
            let better = match &best {
                None => true,
                Some((bp, bv)) => v < *bv || (v == *bv && point.as_slice() < bp.as_slice()),
            };
            if better {
                best = Some((point.clone(), v));
            }
        }
        let (bp, _) = best.as_ref().expect("grid is nonempty");
        for i in 0..m {
            let cell = if grid.points > 1 { (hi[i] - lo[i]) / (grid.points - 1) as f64 } else { 0.0 };
            lo[i] = (bp[i] - cell).max(model.bounds.lower[i]);
            hi[i] = (bp[i] + cell).min(model.bounds.upper[i]);
        }
    }
    Ok(best.expect("grid is nonempty"))
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect()
}

/// Moment estimate of the driver excess `γ₂` from residuals of a linear
/// process with kernel `â`: the residual excess kurtosis rescaled by
/// `(∫â²)² / ∫â⁴`.
pub fn estimate_gamma2(residuals: &NoisePath, kernel: &KernelSpec) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::Shape { expected: 1, got: 0 });
    }
    let n = residuals.len() as f64;
    let mean = residuals.values.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in &residuals.values {
        let d = (v - mean).powi(2);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return Ok(0.0);
    }
    let excess = (m4 - 3.0 * m2 * m2) / (m2 * m2);
    let a2 = levy_noise::kernel_power_integral(kernel, 2)?;
    let a4 = levy_noise::kernel_power_integral(kernel, 4)?;
    Ok((excess * a2 * a2 / a4).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FrequencyGrid;

    fn car2() -> SpectralModel {
        SpectralModel::car2(vec![0.3, 0.3, 0.8], vec![3.0, 3.0, 4.0])
    }

    fn oracle_periodogram(model: &SpectralModel, theta: &[f64], horizon: f64) -> Periodogram {
        let w = WeightSpec::new(3.0, 3.0);
        let grid = FrequencyGrid::up_to(w.lambda_max(), horizon);
        Periodogram::from_fn(grid, horizon, 0.05, |l| model.density(l, theta))
    }

    #[test]
    fn zero_periodogram_leaves_log_term() {
        let m = car2();
        let w = WeightSpec::new(3.0, 3.0);
        let mut p = oracle_periodogram(&m, &[1.0, 1.0, 2.0], 100.0);
        p.values.iter_mut().for_each(|v| *v = 0.0);
        let th = [1.2, 0.9, 1.8];
        let u = contrast_field(&p, &m, &w, &th).unwrap();
        let direct = p.trapezoid(|l, _| if l.abs() <= w.lambda_max() { m.density(l, &th).ln() * w.w(l) } else { 0.0 });
        assert!((u - direct).abs() < 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn contrast_scales_with_weight() {
        let m = car2();
        let p = oracle_periodogram(&m, &[1.0, 1.0, 2.0], 100.0);
        let w = WeightSpec::new(3.0, 3.0);
        let th = [1.4, 0.7, 2.3];
        let u = contrast_field(&p, &m, &w, &th).unwrap();
        let u3 = contrast_field(&p, &m, &w.scaled(3.0), &th).unwrap();
        assert!((u3 - 3.0 * u).abs() < 1e-12 * u.abs());
    }

    #[test]
    fn k_vanishes_at_truth_and_matches_beta_scaling() {
        let m = car2();
        let w = WeightSpec::new(3.0, 3.0);
        let th0 = [1.0, 1.0, 2.0];
        assert!(contrast_function_K(&m, &w, &th0, &th0).unwrap().abs() < 1e-12);
        let c: f64 = 2.5;
        let k = contrast_function_K(&m, &w, &th0, &[1.0, c, 2.0]).unwrap();
        // ∫(1+λ²)^{-3} dλ = 3π/8
        let expect = (1.0 / c - 1.0 + c.ln()) * 3.0 * PI / 8.0;
        assert!((k - expect).abs() < 1e-9, "{k} vs {expect}");
    }

    #[test]
    fn mce_covariance_algebra() {
        let w1 = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let zero = DMatrix::zeros(2, 2);
        let w = mce_covariance(&w1, &w1, &zero).unwrap();
        let inv = w1.clone().try_inverse().unwrap();
        assert!((w - inv).abs().max() < 1e-14);
        let s = mce_covariance(
            &DMatrix::from_element(1, 1, 2.0),
            &DMatrix::from_element(1, 1, 3.0),
            &DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        assert!((s[(0, 0)] - 1.0).abs() < 1e-15);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-13]);
        assert!(matches!(mce_covariance(&bad, &bad, &zero), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn interval_arithmetic() {
        let w = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let ci = confidence_intervals(&[1.0, 2.0], &w, 100.0, 0.95).unwrap();
        assert!((ci[0].1 - 1.0 - 0.392).abs() < 1e-3);
        assert_eq!(ci[1], (2.0, 2.0));
    }

    #[test]
    fn brownian_driver_has_no_v() {
        let m = car2();
        let mats = asymptotic_matrices(&m, &WeightSpec::new(3.0, 3.0), 0.0, &[1.0, 1.0, 2.0]).unwrap();
        assert!(mats.v.iter().all(|&x| x == 0.0));
        assert!(mats.w1.clone().symmetric_eigen().eigenvalues.min() > 0.0);
    }

    #[test]
    fn single_point_grid_is_returned() {
        let m = car2();
        let p = oracle_periodogram(&m, &[1.0, 1.0, 2.0], 50.0);
        let g = GridSpec {
            lower: vec![1.5, 1.5, 1.5],
            upper: vec![1.5, 1.5, 1.5],
            points: 1,
            refinements: 0,
        };
        let (th, _) = grid_oracle(&p, &m, &WeightSpec::new(3.0, 3.0), &g).unwrap();
        assert_eq!(th, vec![1.5, 1.5, 1.5]);
    }

    #[test]
    fn oracle_injection_recovers_truth() {
        let m = car2();
        let truth = [1.3, 0.8, 2.4];
        let p = oracle_periodogram(&m, &truth, 200.0);
        let fit = whittle_fit(&p, &m, &WeightSpec::new(3.0, 3.0), &[1.0, 1.0, 2.0], WhittleOptions::default()).unwrap();
        for (a, b) in fit.theta_hat.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-6, "{:?}", fit.theta_hat);
        }
        assert_eq!(fit.status, FitStatus::Converged);
    }
}
