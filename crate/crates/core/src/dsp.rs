//! FFT helpers shared by the simulator, the periodogram and the Monte Carlo checks.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward DFT `X_k = Σ_j x_j e^{-2πi jk/n}` of a real sequence.
pub fn real_dft(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if buf.is_empty() {
        return buf;
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Linear convolution `y_k = Σ_m h_m x_{k-m}` evaluated for
/// `k = offset .. offset + len`, with `x` and `h` indexed from zero.
pub fn convolve(x: &[f64], h: &[f64], offset: usize, len: usize) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return vec![0.0; len];
    }
    let full = x.len() + h.len() - 1;
    let size = full.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut xa = vec![Complex64::new(0.0, 0.0); size];
    let mut ha = vec![Complex64::new(0.0, 0.0); size];
    for (d, &v) in xa.iter_mut().zip(x) {
        d.re = v;
    }
    for (d, &v) in ha.iter_mut().zip(h) {
        d.re = v;
    }
    fwd.process(&mut xa);
    fwd.process(&mut ha);
    for (a, b) in xa.iter_mut().zip(&ha) {
        *a *= *b;
    }
    inv.process(&mut xa);
    let scale = 1.0 / size as f64;
    (offset..offset + len)
        .map(|k| if k < full { xa[k].re * scale } else { 0.0 })
        .collect()
}

/// Lagged products `S_l = Σ_j x_j x_{j+l}` for `l = 0..=max_lag`.
pub fn lagged_products(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return vec![0.0; max_lag + 1];
    }
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (d, &v) in buf.iter_mut().zip(x) {
        d.re = v;
    }
    fwd.process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    let scale = 1.0 / size as f64;
    (0..=max_lag)
        .map(|l| if l < n { buf[l].re * scale } else { 0.0 })
        .collect()
}
