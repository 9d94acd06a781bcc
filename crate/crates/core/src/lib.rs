//! Ensemble weekly sales forecasting.
//!
//! The pipeline: build a lead-time-aligned [`features::FeatureTable`] from
//! weekly feeds, drop collinear numeric variables ([`collinearity`]), search
//! variable subsets for one learner family ([`learners`], [`ensemble`]), cut
//! the sorted validation-MAPE curve at its change point ([`changepoint`]),
//! average the surviving models, and evaluate the whole procedure in moving
//! windows ([`backtest`]) or explain it with permutation importance
//! ([`importance`]).

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the matrix maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod backtest;
pub mod calendar;
pub mod changepoint;
pub mod collinearity;
pub mod datagen;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod importance;
pub mod learners;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod svg;

pub use calendar::{FiscalCalendar, WeekStamp, WeeklySeries};
pub use error::{Error, Result};
pub use features::FeatureTable;
pub use metrics::mape;
