//! Air-quality band forecasting in three stages:
//!
//! 1. [`hartley`]: each station's day-by-hour pollutant grid is moved into the
//!    Hartley domain, low-energy coefficients are discarded, and the grid is
//!    transformed back.
//! 2. [`feature_selection`]: a ridge-penalized logistic model contrasting the
//!    hourly sample pool with the daily pool ranks the seven pollutants; the
//!    top `k` are kept.
//! 3. [`lssv`]: a least-squares SVM regresses AQI on the kept pollutants, and
//!    predictions are banded with the CPCB band table.
//!
//! [`ingestion`] reads station CSV files and computes AQI values,
//! [`evaluation`] scores forecasts, and [`pipeline`] wires the stages to files
//! on disk the way the `drlssv` command-line tool does.
//!
//! ```
//! use drlssv::hartley::{dht_forward, dht_inverse};
//! use drlssv::ingestion::StationGrid;
//! use drlssv::matrix::Matrix;
//!
//! let grid = StationGrid::from_matrix(Matrix::from_fn(3, 24, |d, h| (d * 24 + h) as f64));
//! let back = dht_inverse(&dht_forward(&grid));
//! assert!(back.max_abs_diff(&grid.values) < 1e-9);
//! ```

pub mod error;
pub mod evaluation;
pub mod feature_selection;
pub mod hartley;
pub mod ingestion;
pub mod lssv;
pub mod matrix;
pub mod pipeline;
pub mod pollutant;
pub mod scaling;

pub use error::{Error, Result};
pub use pollutant::Pollutant;

// The guide's code blocks run as doctests through these modules.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ingestion.md")]
    mod ingestion {}
    #[doc = include_str!("../../../book/src/hartley.md")]
    mod hartley {}
    #[doc = include_str!("../../../book/src/feature_selection.md")]
    mod feature_selection {}
    #[doc = include_str!("../../../book/src/lssv.md")]
    mod lssv {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
