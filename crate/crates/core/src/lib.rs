//! Forecasting-strategy engine.
//!
//! The crate turns a tidy multi-series dataset into supervised samples and
//! fits one of five multi-step-ahead strategies on top of a pluggable
//! regressor:
//!
//! * **Recursive** (`MH = 1`) and **Rec-MIMO** (`MH > 1`): one model,
//!   iterated, predictions fed back into the lag window.
//! * **Direct**: `H / MH` models, each owning a fixed segment of the horizon.
//! * **MIMO**: one model emitting the whole horizon.
//! * **Flat-wide MIMO**: the MIMO sample set flattened to scalar targets
//!   with the horizon index as an explicit input feature.
//!
//! Series can be pooled into a single *global* model or stacked into one
//! *multivariate* (channel-mixing) sample per aligned time window.
//! Preprocessing is an ordered, invertible pipeline: per-series standard
//! scaling and differencing, lag-matrix construction, then per-row
//! last-known-value normalization.
//!
//! [`validation`] provides rolling-origin cross-validation with fold
//! ensembling, backtesting, metrics and rank aggregation, and [`sweep`]
//! drives configuration grids end to end.

pub mod config;
pub mod data;
pub mod error;
pub mod matrix;
pub mod models;
pub mod report;
pub mod strategies;
pub mod sweep;
pub mod synthetic;
pub mod transforms;
pub mod validation;

pub use error::{Error, ErrorKind, Result};
