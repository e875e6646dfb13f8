//! Partial-identification bounds on average treatment effects from two
//! control groups, with uniformly valid bootstrap confidence intervals.
//!
//! When a single control group's trend cannot be trusted, two control
//! groups whose outcome trends bracket the treated group's untreated trend
//! still bound the average treatment effect on the treated. This crate
//! estimates those union bounds from panel or repeated-cross-section data,
//! constructs uniformly valid bootstrap confidence intervals for the
//! identified set and for the effect itself, provides a falsification test
//! and a sensitivity analysis for the bracketing assumption, and ships a
//! Monte Carlo harness for coverage studies.
//!
//! Module map:
//!
//! * [`data`] — panel data model and long-CSV ingestion;
//! * [`estimators`] — change means, DID contrasts, bounding sums,
//!   identified set;
//! * [`bootstrap`] — seeded resampling engine and the four interval
//!   constructions;
//! * [`diagnostics`] — falsification test, sensitivity analysis, trend
//!   export;
//! * [`simulation`] — data-generating processes and the Monte Carlo
//!   coverage harness;
//! * [`rng`] — deterministic, parallelism-proof random streams.

pub mod bootstrap;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimators;
mod normal;
pub mod rng;
pub mod simulation;

pub use bootstrap::{BootstrapConfig, IntervalKind, IntervalResult};
pub use data::{GroupLabel, Observation, PanelDataset};
pub use error::{Error, Result};
