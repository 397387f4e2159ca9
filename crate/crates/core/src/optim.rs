//! Box-constrained local optimisers: Levenberg–Marquardt for the
//! least-squares fits, projected BFGS for smooth contrasts, and a projected
//! Nelder–Mead simplex as derivative-free fallback.

use nalgebra::{DMatrix, DVector};

/// Closed box `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, &lo), &hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| v >= lo && v <= hi)
    }

    /// Coordinates within `rel` of a face, relative to the box width.
    pub fn on_boundary(&self, x: &[f64], rel: f64) -> bool {
        x.iter().zip(&self.lower).zip(&self.upper).any(|((&v, &lo), &hi)| {
            let tol = rel * (hi - lo).abs().max(f64::MIN_POSITIVE);
            v - lo <= tol || hi - v <= tol
        })
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when a successful step reduces the objective by less than this fraction.
    pub ftol: f64,
    /// Stop when the scaled step is shorter than this.
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            ftol: 1e-14,
            xtol: 1e-12,
        }
    }
}

/// Normal-equation data of a least-squares objective `S(x) = ‖r(x)‖²` at a point.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    pub value: f64,
    /// `JᵀJ`
    pub jtj: DMatrix<f64>,
    /// `-Jᵀr`, the Gauss–Newton right-hand side (half the negative gradient).
    pub rhs: DVector<f64>,
}

/// Levenberg–Marquardt with Marquardt's diagonal scaling and projection onto
/// the box. Only steps that strictly decrease `S` are accepted, so the
/// returned value never exceeds the value at the (projected) start.
pub fn levenberg_marquardt<F>(mut eval: F, x0: &[f64], bounds: &Bounds, opts: LmOptions) -> Minimum
where
    F: FnMut(&[f64]) -> NormalEquations,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut current = eval(&x);
    let mut evaluations = 1;
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let diag: Vec<f64> = (0..n).map(|i| current.jtj[(i, i)].max(1e-300)).collect();
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = current.jtj.clone();
            for i in 0..n {
                a[(i, i)] += mu * diag[i];
            }
            let step = match a.cholesky() {
                Some(c) => c.solve(&current.rhs),
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            bounds.project(&mut trial);
            let scaled_step: f64 = (0..n)
                .map(|i| (trial[i] - x[i]).powi(2) * diag[i])
                .sum::<f64>()
                .sqrt();
            let scale: f64 = (0..n).map(|i| x[i].powi(2) * diag[i]).sum::<f64>().sqrt();
            if scaled_step <= opts.xtol * (scale + opts.xtol) {
                converged = true;
                break;
            }
            let next = eval(&trial);
            evaluations += 1;
            if next.value.is_finite() && next.value < current.value {
                let decrease = (current.value - next.value) / current.value.max(f64::MIN_POSITIVE);
                x = trial;
                current = next;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if decrease <= opts.ftol {
                    converged = true;
                }
                break;
            }
            mu *= 4.0;
            if mu > 1e16 {
                break;
            }
        }
        if converged {
            break;
        }
        if !accepted {
            // no descent left at any damping: a stationary point of the projected problem
            converged = mu > 1e16;
            break;
        }
    }

    Minimum {
        x,
        value: current.value,
        iterations,
        evaluations,
        converged,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Convergence threshold on the infinity norm of the projected gradient.
    pub gtol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            gtol: 1e-11,
        }
    }
}

fn projected_gradient(x: &[f64], g: &[f64], bounds: &Bounds) -> Vec<f64> {
    x.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (&xi, &gi))| {
            if (xi <= bounds.lower[i] && gi > 0.0) || (xi >= bounds.upper[i] && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

/// Projected BFGS: quasi-Newton direction on the free coordinates, Armijo
/// backtracking along the projected path.
pub fn projected_bfgs<F>(mut f: F, x0: &[f64], bounds: &Bounds, opts: BfgsOptions) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let (mut fx, mut g) = f(&x);
    let mut evaluations = 1;
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let pg = projected_gradient(&x, &g, bounds);
        if pg.iter().all(|v| v.abs() <= opts.gtol) {
            converged = true;
            break;
        }
        iterations += 1;
        let free: Vec<bool> = pg.iter().zip(&g).map(|(p, gi)| *p != 0.0 || *gi == 0.0).collect();
        let mut d = vec![0.0; n];
        for i in 0..n {
            if free[i] {
                d[i] = -(0..n).filter(|&j| free[j]).map(|j| h[(i, j)] * g[j]).sum::<f64>();
            }
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = DMatrix::identity(n, n);
            fresh = true;
            d = pg.iter().map(|v| -v).collect();
            slope = -pg.iter().map(|v| v * v).sum::<f64>();
        }
        let _ = slope;

        let mut t = 1.0;
        let mut step_taken = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            bounds.project(&mut trial);
            let dec: f64 = g.iter().zip(trial.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            if trial == x {
                break;
            }
            let (ft, gt) = f(&trial);
            evaluations += 1;
            if ft.is_finite() && ft <= fx + 1e-4 * dec && dec < 0.0 {
                step_taken = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }

        match step_taken {
            Some((xn, fnew, gnew)) => {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                let yy: f64 = y.iter().map(|v| v * v).sum();
                let ss: f64 = s.iter().map(|v| v * v).sum();
                if sy > 1e-14 * (ss * yy).sqrt() && sy > 0.0 {
                    if fresh {
                        h = DMatrix::identity(n, n) * (sy / yy);
                        fresh = false;
                    }
                    let sv = DVector::from_vec(s);
                    let yv = DVector::from_vec(y);
                    let rho = 1.0 / sy;
                    let hy = &h * &yv;
                    let yhy = yv.dot(&hy);
                    h += (&sv * sv.transpose()) * (rho * rho * yhy + rho) - (&hy * sv.transpose() + &sv * hy.transpose()) * rho;
                }
                let small_change = (fx - fnew).abs() <= 1e-16 * fx.abs().max(1.0) && ss.sqrt() <= 1e-14;
                x = xn;
                fx = fnew;
                g = gnew;
                if small_change {
                    converged = projected_gradient(&x, &g, bounds).iter().all(|v| v.abs() <= opts.gtol.sqrt());
                    break;
                }
            }
            None => {
                if fresh {
                    break;
                }
                h = DMatrix::identity(n, n);
                fresh = true;
            }
        }
    }

    Minimum {
        x,
        value: fx,
        iterations,
        evaluations,
        converged,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    pub ftol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 20_000,
            ftol: 1e-14,
            initial_step: 0.05,
        }
    }
}

/// Nelder–Mead with every vertex projected into the box. `initial_step` is a
/// fraction of each coordinate's box width.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], bounds: &Bounds, opts: NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0;
    let eval = |p: &mut Vec<f64>, f: &mut F| {
        bounds.project(p);
        let v = f(p);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut start = x0.to_vec();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(&mut start, &mut f);
    evaluations += 1;
    simplex.push((start.clone(), v0));
    for i in 0..n {
        let mut p = start.clone();
        let width = (bounds.upper[i] - bounds.lower[i]).abs();
        let step = opts.initial_step * if width.is_finite() && width > 0.0 { width } else { 1.0 };
        p[i] = if p[i] + step <= bounds.upper[i] { p[i] + step } else { p[i] - step };
        let v = eval(&mut p, &mut f);
        evaluations += 1;
        simplex.push((p, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while evaluations < opts.max_evals {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= opts.ftol * (best.abs() + worst.abs()).max(1e-300) {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64).collect();
        let along = |coef: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + coef * (simplex[n].0[j] - centroid[j])).collect() };
        let mut reflected = along(-1.0);
        let fr = eval(&mut reflected, &mut f);
        evaluations += 1;
        if fr < simplex[0].1 {
            let mut expanded = along(-2.0);
            let fe = eval(&mut expanded, &mut f);
            evaluations += 1;
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let coef = if fr < worst { -0.5 } else { 0.5 };
            let mut contracted = along(coef);
            let fc = eval(&mut contracted, &mut f);
            evaluations += 1;
            if fc < worst.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let mut q: Vec<f64> = anchor.iter().zip(&p.0).map(|(a, b)| a + 0.5 * (b - a)).collect();
                    let v = eval(&mut q, &mut f);
                    *p = (q, v);
                }
                evaluations += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        evaluations,
        converged,
    }
}
