//! CSV and JSON emission. CSV floats carry 17 significant digits so every
//! value round-trips exactly; column orders are fixed.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::levy_noise::NoisePath;
use crate::regression::LseFit;
use crate::spectral::Periodogram;
use crate::validation::McReport;
use crate::whittle::{FitStatus, WhittleFit};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => crate::Error::Data(format!("{other:?}")),
    }
}

/// Columns `t,x`.
pub fn write_path_csv<W: Write>(path: &NoisePath, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["t", "x"]).map_err(csv_err)?;
    for (t, x) in path.times().zip(&path.values) {
        out.write_record([fmt_f64(t), fmt_f64(*x)]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `lambda,value`.
pub fn write_periodogram_csv<W: Write>(p: &Periodogram, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["lambda", "value"]).map_err(csv_err)?;
    for (l, v) in p.frequencies.iter().zip(&p.values) {
        out.write_record([fmt_f64(*l), fmt_f64(*v)]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `replicate,seed,status,theta_0..,covered_0..`; failed replicates
/// leave the estimate columns empty.
pub fn write_replicates_csv<W: Write>(report: &McReport, w: W) -> Result<()> {
    let q = report.truth.len();
    let mut out = csv_writer(w);
    let mut header = vec!["replicate".to_string(), "seed".into(), "status".into()];
    header.extend((0..q).map(|i| format!("estimate_{i}")));
    header.extend((0..q).map(|i| format!("covered_{i}")));
    out.write_record(&header).map_err(csv_err)?;
    for r in &report.rows {
        let mut rec = vec![r.index.to_string(), r.seed.to_string(), r.status.clone()];
        match &r.estimate {
            Some(e) => rec.extend(e.iter().map(|v| fmt_f64(*v))),
            None => rec.extend((0..q).map(|_| String::new())),
        }
        match &r.covered {
            Some(c) => rec.extend(c.iter().map(|b| u8::from(*b).to_string())),
            None => rec.extend((0..q).map(|_| String::new())),
        }
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Serialize)]
pub struct WhittleSummary {
    pub theta_hat: Vec<f64>,
    pub contrast: f64,
    pub gamma2: f64,
    pub w1: Vec<Vec<f64>>,
    pub w2: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub level: f64,
    pub ci: Vec<(f64, f64)>,
    pub status: FitStatus,
    pub converged: bool,
    /// Intervals are unreliable when the estimate sits on the boundary.
    pub ci_reliable: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub used_fallback: bool,
}

impl WhittleSummary {
    pub fn new(fit: &WhittleFit, gamma2: f64) -> Self {
        Self {
            theta_hat: fit.theta_hat.clone(),
            contrast: fit.contrast,
            gamma2,
            w1: rows(&fit.matrices.w1),
            w2: rows(&fit.matrices.w2),
            v: rows(&fit.matrices.v),
            w: rows(&fit.w),
            level: fit.level,
            ci: fit.ci.clone(),
            status: fit.status,
            converged: fit.converged,
            ci_reliable: fit.status != FitStatus::Boundary,
            iterations: fit.iterations,
            evaluations: fit.evaluations,
            used_fallback: fit.used_fallback,
        }
    }
}

/// A report without its per-replicate rows, for the JSON summary.
#[derive(Debug, Serialize)]
pub struct McSummary<'a> {
    pub horizon: f64,
    pub replicates: usize,
    pub failures: usize,
    pub boundary: usize,
    pub truth: &'a [f64],
    pub normalizer: &'a [f64],
    pub mean: &'a [f64],
    pub bias: &'a [f64],
    pub empirical_cov: &'a [Vec<f64>],
    pub target_cov: &'a [Vec<f64>],
    pub coverage: &'a [f64],
    pub skewness: &'a [f64],
    pub excess_kurtosis: &'a [f64],
    pub ks_distance: &'a [f64],
}

impl<'a> From<&'a McReport> for McSummary<'a> {
    fn from(r: &'a McReport) -> Self {
        Self {
            horizon: r.horizon,
            replicates: r.replicates,
            failures: r.failures,
            boundary: r.boundary,
            truth: &r.truth,
            normalizer: &r.normalizer,
            mean: &r.mean,
            bias: &r.bias,
            empirical_cov: &r.empirical_cov,
            target_cov: &r.target_cov,
            coverage: &r.coverage,
            skewness: &r.skewness,
            excess_kurtosis: &r.excess_kurtosis,
            ks_distance: &r.ks_distance,
        }
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialise");
    s.push('\n');
    s
}

pub fn lse_json(fit: &LseFit) -> String {
    to_json(fit)
}
