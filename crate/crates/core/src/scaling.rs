use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-column affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    /// Population statistics of the columns of `x`. Constant columns get unit scale.
    pub fn fit(x: &Matrix) -> Self {
        let (n, k) = (x.rows(), x.cols());
        let mut mean = vec![0.0; k];
        for row in x.iter_rows() {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);
        let mut var = vec![0.0; k];
        for row in x.iter_rows() {
            for j in 0..k {
                var[j] += (row[j] - mean[j]).powi(2);
            }
        }
        let sd = var
            .into_iter()
            .map(|v| {
                let s = (v / n.max(1) as f64).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, sd }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_row(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..self.dim() {
            out[j] = (x[j] - self.mean[j]) / self.sd[j];
        }
    }

    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut out = vec![0.0; x.len()];
        self.apply_row(x, &mut out);
        Ok(out)
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..x.rows() {
            self.apply_row(x.row(i), out.row_mut(i));
        }
        out
    }
}
