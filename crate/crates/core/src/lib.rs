//! Shewhart-type control charts for Weibull distributed times between
//! events, with the scale either known or estimated from a Phase I sample.
//!
//! * [`distribution`]: Weibull density, CDF, quantile, moments and sampling.
//! * [`known`]: probability limits from known parameters, signal probability,
//!   ARL and run-length quantiles under scale/shape shifts.
//! * [`estimated`]: plug-in limits from the scale MLE and the exact
//!   distribution of the conditional ARL (moments, CDF, percentiles).
//! * [`mc`]: seeded Monte Carlo study of plug-in charts.
//! * [`adjust`]: false-alarm-rate adjustment for estimated limits.
//! * [`monitor`]: Phase II classification of a TBE series.

pub mod adjust;
pub mod distribution;
pub mod error;
pub mod estimated;
pub mod known;
pub mod mc;
pub mod monitor;
pub mod numerics;

pub use distribution::WeibullParams;
pub use error::{ChartError, Result};
pub use known::{ChartDesign, ShiftSpec};
