//! Simulation and estimation for continuous-time nonlinear regression with
//! Lévy-driven linear noise.
//!
//! The pipeline is: simulate noise ([`levy_noise`]), add a regression signal
//! and fit it by least squares ([`regression`]), take the residual
//! periodogram ([`spectral`]), and estimate the noise spectral parameter by
//! minimising the Whittle contrast ([`whittle`]). [`validation`] holds the
//! Monte Carlo harness and the numerical checks of the limit theorems the
//! estimators rely on; [`config`] and [`report`] carry the experiment file
//! formats.

pub mod config;
mod dsp;
pub mod error;
pub mod levy_noise;
pub mod optim;
pub mod quad;
pub mod regression;
pub mod report;
pub mod rng;
pub mod spectral;
pub mod validation;
pub mod whittle;

pub use error::{Error, Result};
