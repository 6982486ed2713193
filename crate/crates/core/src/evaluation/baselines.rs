//! Comparison forecasters fitted on the same selected features.

use faer::linalg::solvers::Solve;
use faer::Mat;

use super::Forecaster;
use crate::error::{Error, Result};
use crate::ingestion::{AqiBand, AqiBreakpoints};
use crate::matrix::Matrix;
use crate::scaling::Standardizer;

fn check_training(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::invalid("baseline needs at least one training row"));
    }
    Ok(())
}

/// Ridge regression on standardized features with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeBaseline {
    pub scaler: Standardizer,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl RidgeBaseline {
    pub const DEFAULT_LAMBDA: f64 = 1.0;

    pub fn fit(x: &Matrix, y: &[f64], lambda: f64) -> Result<Self> {
        check_training(x, y)?;
        if !(lambda > 0.0) {
            return Err(Error::invalid("ridge penalty must be positive"));
        }
        let scaler = Standardizer::fit(x);
        let z = scaler.transform(x);
        let k = z.cols();
        let intercept = y.iter().sum::<f64>() / y.len() as f64;
        let mut a = Mat::<f64>::zeros(k, k);
        let mut b = Mat::<f64>::zeros(k, 1);
        for (row, yi) in z.iter_rows().zip(y) {
            for i in 0..k {
                b[(i, 0)] += row[i] * (yi - intercept);
                for j in 0..=i {
                    a[(i, j)] += row[i] * row[j];
                }
            }
        }
        for i in 0..k {
            a[(i, i)] += lambda;
            for j in 0..i {
                a[(j, i)] = a[(i, j)];
            }
        }
        let llt = a
            .llt(faer::Side::Lower)
            .map_err(|_| Error::Singular { condition: f64::INFINITY })?;
        let w = llt.solve(&b);
        Ok(RidgeBaseline {
            scaler,
            weights: (0..k).map(|i| w[(i, 0)]).collect(),
            intercept,
        })
    }
}

impl Forecaster for RidgeBaseline {
    fn name(&self) -> &str {
        "ridge"
    }

    fn predict_aqi(&self, x: &[f64]) -> Result<f64> {
        let z = self.scaler.transform_row(x)?;
        Ok(self.intercept + z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }
}

/// Mean target of the `k` nearest training rows in standardized space.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnBaseline {
    pub scaler: Standardizer,
    pub train: Matrix,
    pub targets: Vec<f64>,
    pub k: usize,
}

impl KnnBaseline {
    pub const DEFAULT_K: usize = 5;

    pub fn fit(x: &Matrix, y: &[f64], k: usize) -> Result<Self> {
        check_training(x, y)?;
        if k == 0 {
            return Err(Error::invalid("k-NN needs k >= 1"));
        }
        let scaler = Standardizer::fit(x);
        Ok(KnnBaseline {
            train: scaler.transform(x),
            scaler,
            targets: y.to_vec(),
            k: k.min(y.len()),
        })
    }
}

impl Forecaster for KnnBaseline {
    fn name(&self) -> &str {
        "knn"
    }

    fn predict_aqi(&self, x: &[f64]) -> Result<f64> {
        let z = self.scaler.transform_row(x)?;
        // (distance, index) of the current k best, kept sorted.
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for (i, row) in self.train.iter_rows().enumerate() {
            let d: f64 = row.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.len() == self.k && d >= best[self.k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(bd, _)| bd <= d);
            best.insert(pos, (d, i));
            best.truncate(self.k);
        }
        Ok(best.iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / best.len() as f64)
    }
}

/// Always predicts the median training AQI of the most frequent training band.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityBaseline {
    pub band: AqiBand,
    pub aqi: f64,
}

impl MajorityBaseline {
    pub fn fit(y: &[f64], breakpoints: &AqiBreakpoints) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::invalid("baseline needs at least one training row"));
        }
        let mut counts = [0usize; 6];
        for v in y {
            counts[breakpoints.band(*v).index()] += 1;
        }
        // First band wins ties.
        let best = (0..6).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
        let band = AqiBand::ALL[best];
        let mut members: Vec<f64> = y.iter().copied().filter(|v| breakpoints.band(*v) == band).collect();
        let aqi = crate::ingestion::median(&mut members);
        Ok(MajorityBaseline { band, aqi })
    }
}

impl Forecaster for MajorityBaseline {
    fn name(&self) -> &str {
        "majority"
    }

    fn predict_aqi(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.aqi)
    }
}
