//! Experiment configuration and observation input.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_noise::{self, KernelSpec, LevyDriverSpec, NoisePath};
use crate::regression::RegressionModel;
use crate::spectral::{validate_weight_conditions, SpectralModel, WeightSpec};

/// Where the excess `γ₂` in the `V` matrix comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Gamma2Mode {
    #[default]
    FromDriver,
    UserValue {
        value: f64,
    },
    EstimateFromResiduals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub driver: LevyDriverSpec,
    pub kernel: KernelSpec,
    pub regression: RegressionModel,
    /// True regression parameter for simulation; starting point for fits.
    pub alpha0: Vec<f64>,
    /// `truth` holds `θ₀` for simulation studies.
    pub spectral: SpectralModel,
    pub weights: WeightSpec,
    pub horizons: Vec<f64>,
    pub step: f64,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub gamma2: Gamma2Mode,
}

fn default_level() -> f64 {
    0.95
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Parses and validates a JSON document. Parse errors carry the path of
    /// the offending field.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::ConfigParse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serialisable")
    }

    /// `θ₀` if given, else the centre of `Θ`.
    pub fn theta_init(&self) -> Vec<f64> {
        self.spectral.truth.clone().unwrap_or_else(|| self.spectral.bounds.center())
    }

    /// Every failure is reported as an input error.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|e| if e.is_input_error() { e } else { Error::ConfigRejected(e.to_string()) })
    }

    fn check(&self) -> Result<()> {
        self.driver.validate()?;
        self.kernel.validate()?;
        self.regression.validate()?;
        self.regression.check_alpha(&self.alpha0)?;
        self.spectral.validate()?;
        if !self.spectral.is_estimable() {
            return Err(Error::ConfigRejected("spectral model is evaluation-only".into()));
        }
        let diag = validate_weight_conditions(&self.weights, &self.spectral);
        if !diag.passed() {
            return Err(Error::ConfigRejected(diag.violations.join("; ")));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::domain("step", self.step, "(0, ∞)"));
        }
        let nyquist = std::f64::consts::PI / self.step;
        let fastest = self.regression.max_frequency();
        if fastest >= nyquist {
            return Err(Error::ConfigRejected(format!(
                "regression frequency {fastest} is not below the Nyquist frequency π/Δ = {nyquist}"
            )));
        }
        let lambda_max = self.weights.lambda_max();
        if lambda_max > nyquist {
            return Err(Error::ConfigRejected(format!(
                "weight truncation Λ_max = {lambda_max} exceeds the Nyquist frequency π/Δ = {nyquist}"
            )));
        }
        if self.horizons.is_empty() {
            return Err(Error::ConfigRejected("horizons must not be empty".into()));
        }
        for &t in &self.horizons {
            levy_noise::lattice_len(t, self.step)?;
        }
        if self.replicates == 0 {
            return Err(Error::ConfigRejected("replicates must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::domain("level", self.level, "(0, 1)"));
        }
        if let Gamma2Mode::UserValue { value } = self.gamma2 {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::domain("gamma2.value", value, "[0, ∞)"));
            }
        }
        Ok(())
    }

    /// Resolves `γ₂` for modes that do not need residuals.
    pub fn fixed_gamma2(&self) -> Result<Option<f64>> {
        Ok(match self.gamma2 {
            Gamma2Mode::FromDriver => Some(self.driver.cumulants()?.gamma2),
            Gamma2Mode::UserValue { value } => Some(value),
            Gamma2Mode::EstimateFromResiduals => None,
        })
    }
}

/// Reads observations from CSV with header `t,x`. Times must start at zero
/// and be equally spaced.
pub fn parse_observations<R: Read>(reader: R) -> Result<NoisePath> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "x" {
        return Err(Error::Data(format!("expected header `t,x`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            let v: f64 = rec[i]
                .parse()
                .map_err(|_| Error::Data(format!("row {}: `{}` is not a number", row + 1, &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Data(format!("row {}: non-finite value", row + 1)))
            }
        };
        times.push(field(0)?);
        values.push(field(1)?);
    }
    if times.len() < 2 {
        return Err(Error::Data("need at least two observations".into()));
    }
    let step = times[1] - times[0];
    if !(step > 0.0) {
        return Err(Error::Data("times must be strictly increasing".into()));
    }
    let tol = 1e-9 * step.max(times[times.len() - 1].abs() * 1e-3);
    if times[0].abs() > tol {
        return Err(Error::Data(format!("first time is {}, expected 0", times[0])));
    }
    for (k, t) in times.iter().enumerate() {
        if (t - k as f64 * step).abs() > tol.max(1e-12 * t.abs()) {
            return Err(Error::Data(format!("row {}: time {t} is off the uniform grid with step {step}", k + 1)));
        }
    }
    Ok(NoisePath::new(step, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observations_round_trip_grid() {
        let text = "t,x\n0,1.5\n0.5,-2\n1.0,3e-1\n";
        let p = parse_observations(text.as_bytes()).unwrap();
        assert_eq!(p.step, 0.5);
        assert_eq!(p.values, vec![1.5, -2.0, 0.3]);
    }

    #[test]
    fn irregular_grid_rejected() {
        assert!(parse_observations("t,x\n0,1\n0.5,2\n1.2,3\n".as_bytes()).is_err());
        assert!(parse_observations("t,x\n0.1,1\n0.6,2\n".as_bytes()).is_err());
        assert!(parse_observations("time,x\n0,1\n1,2\n".as_bytes()).is_err());
        assert!(parse_observations("t,x\n0,1\n1,nan\n".as_bytes()).is_err());
    }
}
