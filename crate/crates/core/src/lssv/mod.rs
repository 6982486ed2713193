//! Least-squares support-vector regression on the selected features, rank
//! concordance, and AQI banding of predictions.

mod kendall;
mod kernel;
mod model;

pub use kendall::{
    kendall_tau, pair_counts, tau_band, tau_verdict, PairCounts, TauVerdict, TAU_ZERO_TOL,
};
pub use kernel::{gram_matrix, median_heuristic, KernelSpec};
pub use model::{predict, train_lssv, LssvModel, TargetKind, MODEL_HEADER};

use crate::error::Result;
use crate::ingestion::{AqiBand, AqiBreakpoints, AQI_MAX};

/// Predicted AQI clamped to `[0, 500]` and its band.
pub fn classify_aqi(
    model: &LssvModel,
    x: &[f64],
    breakpoints: &AqiBreakpoints,
) -> Result<(f64, AqiBand)> {
    let aqi = predict(model, x)?.clamp(0.0, AQI_MAX);
    Ok((aqi, breakpoints.band(aqi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn constant_model(value: f64) -> LssvModel {
        let x = Matrix::from_rows(&[vec![0.0]]).unwrap();
        train_lssv(&x, &[value], 10.0, KernelSpec::Linear).unwrap()
    }

    #[test]
    fn bands_from_fixture() {
        let bp = AqiBreakpoints::bundled();
        assert_eq!(classify_aqi(&constant_model(45.0), &[1.0], &bp).unwrap().1, AqiBand::Good);
        assert_eq!(classify_aqi(&constant_model(450.0), &[1.0], &bp).unwrap().1, AqiBand::Severe);
        assert_eq!(
            classify_aqi(&constant_model(100.0), &[1.0], &bp).unwrap().1,
            AqiBand::Satisfactory
        );
    }

    #[test]
    fn predictions_are_clamped() {
        let bp = AqiBreakpoints::bundled();
        assert_eq!(classify_aqi(&constant_model(-20.0), &[0.0], &bp).unwrap(), (0.0, AqiBand::Good));
        assert_eq!(classify_aqi(&constant_model(900.0), &[0.0], &bp).unwrap(), (500.0, AqiBand::Severe));
    }
}
