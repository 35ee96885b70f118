//! Rate, spectral-efficiency and energy-efficiency distributions for a
//! two-tier HetNet with micro cells placed on the macro cell edge.
//!
//! The crate has two halves that are meant to be compared against each
//! other. [`analytic`] approximates each micro's coverage by circles and
//! turns region areas into closed-form CDFs. [`simulator`] drops users at
//! random and measures the same quantities directly. [`evaluation`] runs the
//! Kolmogorov-Smirnov comparison, extracts percentile KPIs and searches the
//! `(eta, rho)` resource split.

pub mod analytic;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod quadrature;
pub mod radio;
pub mod scenario;
pub mod simulator;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use scenario::UserType;
