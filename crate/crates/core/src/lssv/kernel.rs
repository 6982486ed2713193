use std::fmt;

use crate::error::{Error, Result};
use crate::ingestion::median;
use crate::matrix::Matrix;

/// Kernel used by the least-squares SVM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    /// Gaussian kernel `exp(−‖x − z‖² / (2σ²))`.
    Rbf { sigma: f64 },
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("RBF bandwidth must be positive, got {sigma}")));
        }
        Ok(KernelSpec::Rbf { sigma })
    }

    #[inline]
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
            KernelSpec::Rbf { sigma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => f.write_str("linear"),
            KernelSpec::Rbf { sigma } => write!(f, "rbf {sigma:.16e}"),
        }
    }
}

/// `K[i][j] = k(x_i, x_j)` over the rows of `x`.
pub fn gram_matrix(x: &Matrix, kernel: &KernelSpec) -> Matrix {
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(x.row(i), x.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Median pairwise Euclidean distance between rows.
///
/// At most `max_rows` evenly strided rows are used. Falls back to 1 when all
/// sampled rows coincide.
pub fn median_heuristic(x: &Matrix, max_rows: usize) -> f64 {
    let n = x.rows();
    let stride = n.div_ceil(max_rows.max(2)).max(1);
    let rows: Vec<&[f64]> = (0..n).step_by(stride).map(|i| x.row(i)).collect();
    let mut d = Vec::with_capacity(rows.len() * rows.len().saturating_sub(1) / 2);
    for i in 0..rows.len() {
        for j in 0..i {
            let d2: f64 = rows[i]
                .iter()
                .zip(rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d.push(d2.sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let m = median(&mut d);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}
