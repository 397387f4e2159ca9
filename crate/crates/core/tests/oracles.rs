use std::f64::consts::PI;

use levy_whittle::levy_noise::{self, KernelSpec, LevyDriverSpec, NoisePath};
use levy_whittle::regression::{RegressionModel, Regressor};
use levy_whittle::rng;
use levy_whittle::spectral::{self, FrequencyGrid, Periodogram, PeriodogramSource, SpectralModel, WeightSpec};
use levy_whittle::validation::{self, LevitanPolynomial};
use levy_whittle::whittle::{self, WhittleOptions};
use nalgebra::Matrix3;
use rand::Rng;

fn car2() -> SpectralModel {
    SpectralModel::car2(vec![0.3, 0.3, 0.8], vec![3.0, 3.0, 4.0])
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

#[test]
fn exponential_lse_matches_golden_section() {
    let model = RegressionModel::exponential(vec![Regressor::Cosine { frequency: 0.5, phase: 0.3 }], vec![-2.0], vec![2.0]);
    let noise = levy_noise::simulate_linear_noise(
        &LevyDriverSpec::brownian(1.0),
        &KernelSpec::Ou { decay: 1.0 },
        200.0,
        0.05,
        5,
    )
    .unwrap();
    let truth = 0.7;
    let signal = model.signal(&[truth], 0.05, noise.len()).unwrap();
    let data = NoisePath::new(0.05, signal.iter().zip(&noise.values).map(|(s, e)| s + e).collect());
    let sse = |a: f64| -> f64 {
        data.values
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let t = k as f64 * 0.05;
                let r = x - (a * (0.5 * t + 0.3).cos()).exp();
                r * r
            })
            .sum::<f64>()
            * 0.05
    };
    let oracle = golden_section(sse, -2.0, 2.0);
    let fit = model.lse_fit(&data, &[0.0], Default::default()).unwrap();
    assert!((fit.alpha_hat[0] - oracle).abs() < 1e-6, "{} vs {oracle}", fit.alpha_hat[0]);
    assert!((fit.sse - sse(oracle)).abs() <= 1e-9 * sse(oracle));
}

#[test]
fn trigonometric_norming_limits() {
    let model = RegressionModel::trigonometric(1, vec![-5.0, -5.0, 0.5], vec![5.0, 5.0, 3.0]);
    let alpha = [2.0, 1.0, 1.5];
    let c2 = 5.0;
    let mut prev = f64::INFINITY;
    for t in [100.0, 1000.0, 10000.0] {
        let d = model.norming(&alpha, t).unwrap();
        let gaps = [
            rel(d[0] * d[0] / t, 0.5),
            rel(d[1] * d[1] / t, 0.5),
            rel(d[2] * d[2] / t.powi(3), c2 / 6.0),
        ];
        let worst = gaps.iter().copied().fold(0.0, f64::max);
        assert!(worst < prev);
        prev = worst;
    }
    assert!(prev < 1e-3);
}

#[test]
fn levitan_coefficients_match_triangle_integral() {
    let f = |u: f64| if u == 0.0 { 1.0 } else { u.sin() / u };
    let n = 8;
    let p = LevitanPolynomial::new(f, 1.0, n).unwrap();
    let s = p.s;
    let half = (p.coefficients.len() - 1) / 2;
    // c_j = ½∫_{-1}^{1} tri(j - y/s) dy, integrated exactly per linear piece
    let tri = |x: f64| (1.0 - x.abs()).max(0.0);
    for (idx, c) in p.coefficients.iter().enumerate() {
        let j = idx as f64 - half as f64;
        let mut knots = vec![-1.0, 1.0];
        for k in [j - 1.0, j, j + 1.0] {
            let y = k * s;
            if y > -1.0 && y < 1.0 {
                knots.push(y);
            }
        }
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let exact: f64 = knots
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (tri(j - w[0] / s) + tri(j - w[1] / s)))
            .sum::<f64>()
            * 0.5;
        assert!((c.re - exact).abs() < 2e-6, "j = {j}: {} vs {exact}", c.re);
        assert!(c.im.abs() < 1e-9);
    }
}

#[test]
fn levitan_reproduces_constants() {
    for n in [1, 4, 16] {
        let p = LevitanPolynomial::new(|_| 1.0, 2.0, n).unwrap();
        for l in [-3.0, 0.0, 0.7, 5.0] {
            assert!((p.eval(l) - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn contrast_function_is_nonnegative_and_vanishes_at_truth() {
    let model = car2();
    let w = WeightSpec::new(3.0, 3.0);
    let theta0 = [1.0, 1.0, 2.0];
    assert!(whittle::contrast_function_K(&model, &w, &theta0, &theta0).unwrap().abs() < 1e-14);
    let axis = |lo: f64, hi: f64| (0..5).map(move |i| lo + (hi - lo) * i as f64 / 4.0);
    for a in axis(0.3, 3.0) {
        for b in axis(0.3, 3.0) {
            for g in axis(0.8, 4.0) {
                let k = whittle::contrast_function_K(&model, &w, &theta0, &[a, b, g]).unwrap();
                assert!(k >= 0.0, "K < 0 at {:?}", [a, b, g]);
            }
        }
    }
}

#[test]
fn whittle_argmin_ignores_weight_scale() {
    let model = car2();
    let w = WeightSpec::new(3.0, 3.0);
    let path = levy_noise::simulate_linear_noise(
        &LevyDriverSpec::brownian(1.0),
        &KernelSpec::Car2Pendulum { decay: 1.0, frequency: 2.0 },
        400.0,
        0.05,
        9,
    )
    .unwrap();
    let grid = FrequencyGrid::up_to(w.lambda_max(), 400.0);
    let p = spectral::periodogram(&path, grid, PeriodogramSource::Raw).unwrap();
    let a = whittle::whittle_fit(&p, &model, &w, &[1.0, 1.0, 2.0], WhittleOptions::default()).unwrap();
    let b = whittle::whittle_fit(&p, &model, &w.scaled(10.0), &[1.0, 1.0, 2.0], WhittleOptions::default()).unwrap();
    for (x, y) in a.theta_hat.iter().zip(&b.theta_hat) {
        assert!((x - y).abs() < 1e-6, "{:?} vs {:?}", a.theta_hat, b.theta_hat);
    }
    assert!(rel(b.contrast, 10.0 * a.contrast) < 1e-9);
}

#[test]
fn second_sandwich_factor_is_first_factor_under_squared_weight() {
    let model = car2();
    let w = WeightSpec::new(3.0, 3.0).scaled(0.5);
    let squared = WeightSpec { a: 6.0, b: 3.0, scale: 0.25 };
    let theta = [1.0, 1.0, 2.0];
    let m = whittle::asymptotic_matrices(&model, &w, 0.0, &theta).unwrap();
    let m2 = whittle::asymptotic_matrices(&model, &squared, 0.0, &theta).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert!(rel(m.w2[(i, j)], 4.0 * PI * m2.w1[(i, j)]) < 1e-7);
        }
    }
}

#[test]
fn first_sandwich_factor_matches_fine_trapezoid() {
    let model = car2();
    let w = WeightSpec::new(3.0, 3.0);
    let theta = [0.8, 1.5, 2.5];
    let m = whittle::asymptotic_matrices(&model, &w, 0.0, &theta).unwrap();
    let h = 1e-3;
    let n = (60.0 / h) as usize;
    let mut oracle = [[0.0; 3]; 3];
    for k in 0..=n {
        let l = k as f64 * h;
        let f = model.eval(l, &theta).unwrap();
        let g = model.gradient(l, &theta).unwrap();
        let wt = if k == 0 || k == n { 0.5 } else { 1.0 } * 2.0 * h * w.w(l);
        for i in 0..3 {
            for j in 0..3 {
                oracle[i][j] += wt * g[i] * g[j] / (f * f);
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            assert!(rel(m.w1[(i, j)], oracle[i][j]) < 1e-6, "({i},{j}) {} vs {}", m.w1[(i, j)], oracle[i][j]);
        }
    }
}

#[test]
fn gamma_term_is_rank_one() {
    let model = car2();
    let w = WeightSpec::new(3.0, 3.0);
    let m = whittle::asymptotic_matrices(&model, &w, 1.5, &[1.0, 1.0, 2.0]).unwrap();
    let v = Matrix3::from_fn(|i, j| m.v[(i, j)]);
    let eig = v.symmetric_eigenvalues();
    let mut e: Vec<f64> = eig.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(e[2] > 0.0);
    assert!(e[0].abs() < 1e-10 * e[2] && e[1].abs() < 1e-10 * e[2]);
}

#[test]
fn sigma_trig_is_scaled_inverse_information() {
    let alpha0 = [2.0, 1.0, 1.5, -0.5, 3.0, 2.5];
    let f = [0.2, 0.05];
    let sigma = validation::sigma_trig(&alpha0, &f).unwrap();
    for k in 0..2 {
        let (a, b) = (alpha0[3 * k], alpha0[3 * k + 1]);
        let info = Matrix3::new(0.5, 0.0, b / 4.0, 0.0, 0.5, -a / 4.0, b / 4.0, -a / 4.0, (a * a + b * b) / 6.0);
        let inv = info.try_inverse().unwrap() * (2.0 * PI * f[k]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((sigma[(3 * k + i, 3 * k + j)] - inv[(i, j)]).abs() < 1e-12 * inv[(i, i)].abs());
            }
        }
    }
    for i in 0..3 {
        for j in 3..6 {
            assert_eq!(sigma[(i, j)], 0.0);
        }
    }
}

#[test]
fn lse_errors_shrink_with_horizon() {
    let model = RegressionModel::trigonometric(1, vec![-5.0, -5.0, 0.5], vec![5.0, 5.0, 3.0]);
    let alpha0 = [2.0, 1.0, 1.5];
    let driver = LevyDriverSpec::brownian(1.0);
    let kernel = KernelSpec::Ou { decay: 1.0 };
    let mean_error = |t: f64| -> f64 {
        (0..8)
            .map(|seed| {
                let noise = levy_noise::simulate_linear_noise(&driver, &kernel, t, 0.05, seed).unwrap();
                let signal = model.signal(&alpha0, 0.05, noise.len()).unwrap();
                let data = NoisePath::new(0.05, signal.iter().zip(&noise.values).map(|(s, e)| s + e).collect());
                let fit = model.lse_fit(&data, &alpha0, Default::default()).unwrap();
                (fit.alpha_hat[2] - alpha0[2]).abs()
            })
            .sum::<f64>()
            / 8.0
    };
    let e = [mean_error(100.0), mean_error(400.0), mean_error(1600.0)];
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
}

#[test]
fn car2_sample_autocovariance_matches_closed_form() {
    let (alpha, omega) = (1.0, 2.0);
    let kernel = KernelSpec::Car2Pendulum { decay: alpha, frequency: omega };
    let path = levy_noise::simulate_linear_noise(&LevyDriverSpec::brownian(1.0), &kernel, 4000.0, 0.05, 3).unwrap();
    let b0 = levy_noise::covariance_car2_closed_form(alpha, omega, 1.0, 0.0);
    let n = path.len();
    for lag in [0, 10, 20, 40] {
        let acov = (0..n - lag).map(|k| path.values[k] * path.values[k + lag]).sum::<f64>() / (n - lag) as f64;
        let exact = levy_noise::covariance_car2_closed_form(alpha, omega, 1.0, lag as f64 * 0.05);
        assert!((acov - exact).abs() < 0.1 * b0, "lag {lag}: {acov} vs {exact}");
    }
}

#[test]
fn compound_poisson_increments_have_driver_cumulants() {
    let driver = LevyDriverSpec::compound_poisson(2.0, 1.0);
    let c = driver.cumulants().unwrap();
    assert_eq!((c.d2, c.d4, c.gamma2), (2.0, 6.0, 1.5));
    let mut rng = rng::seeded(11);
    let x: Vec<f64> = (0..200_000).map(|_| driver.sample_increment(&mut rng, 1.0)).collect();
    let m2 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let m4 = x.iter().map(|v| v.powi(4)).sum::<f64>() / x.len() as f64;
    assert!(rel(m2, c.d2) < 0.02, "{m2}");
    assert!(rel(m4 - 3.0 * m2 * m2, c.d4) < 0.1, "{}", m4 - 3.0 * m2 * m2);
}

#[test]
fn injected_density_is_recovered_for_ou() {
    let model = SpectralModel::ou(vec![0.2, 0.2], vec![5.0, 5.0]);
    let w = WeightSpec::new(3.0, 3.0);
    let mut r = rng::seeded(4);
    for _ in 0..5 {
        let theta = [r.random_range(0.5..4.0), r.random_range(0.5..4.0)];
        let grid = FrequencyGrid::up_to(w.lambda_max(), 300.0);
        let p = Periodogram::from_fn(grid, 300.0, 0.05, |l| model.eval(l, &theta).unwrap());
        let fit = whittle::whittle_fit(&p, &model, &w, &[1.0, 1.0], WhittleOptions::default()).unwrap();
        for (a, b) in fit.theta_hat.iter().zip(&theta) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
