//! Least-squares SVM regression.
//!
//! Training minimizes `½‖w‖² + ½γ Σ e_k²` subject to
//! `y_k = wᵀφ(x_k) + b + e_k`. Eliminating `w` and `e` leaves the saddle
//! system
//!
//! ```text
//! [ 0      1ᵀ      ] [ b ]   [ 0 ]
//! [ 1   K + I/γ    ] [ a ] = [ y ]
//! ```
//!
//! which is solved by block elimination: with `H = K + I/γ` symmetric
//! positive definite, solve `Hη = 1` and `Hν = y` from one Cholesky factor,
//! then `b = 1ᵀν / 1ᵀη` and `a = ν − bη`. The model predicts
//! `f(x) = Σ a_i k(x_i, x) + b`, and the training residual is
//! `y_k − f(x_k) = a_k / γ`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use faer::linalg::solvers::Solve;
use faer::Mat;

use super::kernel::{gram_matrix, KernelSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MODEL_HEADER: &str = "DRLSSV1";

/// What the regression target represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    AqiValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LssvModel {
    pub training_inputs: Matrix,
    pub dual: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub kernel: KernelSpec,
    pub target_kind: TargetKind,
}

fn cholesky(h: &Mat<f64>) -> Result<faer::linalg::solvers::Llt<f64>> {
    let n = h.nrows();
    h.llt(faer::Side::Lower).map_err(|_| {
        let diag: Vec<f64> = (0..n).map(|i| h[(i, i)]).collect();
        let max = diag.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let min = diag.iter().fold(f64::INFINITY, |a, b| a.min(b.abs()));
        Error::Singular {
            condition: if min > 0.0 { max / min } else { f64::INFINITY },
        }
    })
}

/// Block-eliminated solve of the saddle system for right-hand side `[c; r]`.
fn solve_saddle(
    llt: &faer::linalg::solvers::Llt<f64>,
    n: usize,
    c: f64,
    r: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let rhs = Mat::<f64>::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { r[i] });
    let sol = llt.solve(&rhs);
    let s: f64 = (0..n).map(|i| sol[(i, 0)]).sum();
    let t: f64 = (0..n).map(|i| sol[(i, 1)]).sum();
    if !(s.abs() > 0.0) {
        return Err(Error::Singular {
            condition: f64::INFINITY,
        });
    }
    // 1ᵀa = c with a = ν − bη  ⇒  b = (1ᵀν − c) / 1ᵀη.
    let b = (t - c) / s;
    let a = (0..n).map(|i| sol[(i, 1)] - b * sol[(i, 0)]).collect();
    Ok((b, a))
}

/// Fits the model to rows of `x` and targets `y`.
pub fn train_lssv(x: &Matrix, y: &[f64], gamma: f64, kernel: KernelSpec) -> Result<LssvModel> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::invalid("cannot train on zero samples"));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data must be finite"));
    }

    // Only the lower triangle is read by the factorization.
    let mut h = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = kernel.eval(x.row(j), x.row(j)) + 1.0 / gamma;
        for i in j + 1..n {
            h[(i, j)] = kernel.eval(x.row(i), x.row(j));
        }
    }
    let llt = cholesky(&h)?;
    let (mut bias, mut dual) = solve_saddle(&llt, n, 0.0, y)?;

    // One step of iterative refinement on the full system.
    let (rc, rr) = saddle_residual(&h, bias, &dual, y);
    drop(h);
    let (db, da) = solve_saddle(&llt, n, rc, &rr)?;
    bias += db;
    dual.iter_mut().zip(da).for_each(|(a, d)| *a += d);

    Ok(LssvModel {
        training_inputs: x.clone(),
        dual,
        bias,
        gamma,
        kernel,
        target_kind: TargetKind::AqiValue,
    })
}

/// `[0; y] − A·[b; a]`, split into the first row and the rest. `h` holds
/// `K + I/γ` in its lower triangle.
fn saddle_residual(h: &Mat<f64>, bias: f64, dual: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let n = dual.len();
    let first = -dual.iter().sum::<f64>();
    let mut ha = vec![0.0; n];
    for j in 0..n {
        ha[j] += h[(j, j)] * dual[j];
        for i in j + 1..n {
            let v = h[(i, j)];
            ha[i] += v * dual[j];
            ha[j] += v * dual[i];
        }
    }
    let rest = (0..n).map(|i| y[i] - (bias + ha[i])).collect();
    (first, rest)
}

impl LssvModel {
    pub fn n_train(&self) -> usize {
        self.training_inputs.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.training_inputs.cols()
    }

    /// `‖A·[b; a] − [0; y]‖∞` for the training targets `y`.
    pub fn kkt_residual(&self, y: &[f64]) -> f64 {
        let k = gram_matrix(&self.training_inputs, &self.kernel);
        let n = self.n_train();
        let h = Mat::<f64>::from_fn(n, n, |i, j| k[(i, j)] + if i == j { 1.0 / self.gamma } else { 0.0 });
        let (first, rest) = saddle_residual(&h, self.bias, &self.dual, y);
        rest.iter().fold(first.abs(), |m, r| m.max(r.abs()))
    }

    /// Writes the model in the versioned text format.
    pub fn to_text(&self) -> String {
        self.to_text_with(&[])
    }

    /// Like [`LssvModel::to_text`] with extra `key value…` lines right after
    /// the header.
    pub fn to_text_with(&self, extra: &[(&str, String)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MODEL_HEADER}");
        for (k, v) in extra {
            let _ = writeln!(s, "{k} {v}");
        }
        let _ = writeln!(s, "kernel {}", self.kernel);
        let _ = writeln!(s, "gamma {:.16e}", self.gamma);
        let _ = writeln!(s, "k {}", self.input_dim());
        let _ = writeln!(s, "n {}", self.n_train());
        let _ = writeln!(s, "bias {:.16e}", self.bias);
        s.push_str("dual");
        for a in &self.dual {
            let _ = write!(s, " {a:.16e}");
        }
        s.push('\n');
        for row in self.training_inputs.iter_rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_text_with(text).map(|(m, _)| m)
    }

    /// Parses a model and returns unrecognized `key value…` lines as well.
    pub fn from_text_with(text: &str) -> Result<(Self, BTreeMap<String, String>)> {
        let bad = |m: &str| Error::format("model file", m.to_string());
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MODEL_HEADER) {
            return Err(bad("missing DRLSSV1 header"));
        }
        let mut fields: BTreeMap<String, String> = BTreeMap::new();
        for line in lines.by_ref() {
            let (key, rest) = line.trim().split_once(' ').unwrap_or((line.trim(), ""));
            fields.insert(key.to_string(), rest.trim().to_string());
            if key == "dual" {
                break;
            }
        }
        let take = |fields: &mut BTreeMap<String, String>, k: &str| {
            fields.remove(k).ok_or_else(|| bad(&format!("missing `{k}` line")))
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
        let count = |s: &str| s.parse::<usize>().map_err(|_| bad(&format!("bad count `{s}`")));

        let kernel = {
            let spec = take(&mut fields, "kernel")?;
            let mut parts = spec.split_whitespace();
            match parts.next() {
                Some("linear") => KernelSpec::Linear,
                Some("rbf") => KernelSpec::rbf(num(parts.next().unwrap_or(""))?)?,
                _ => return Err(bad("unknown kernel")),
            }
        };
        let gamma = num(&take(&mut fields, "gamma")?)?;
        let k = count(&take(&mut fields, "k")?)?;
        let n = count(&take(&mut fields, "n")?)?;
        let bias = num(&take(&mut fields, "bias")?)?;
        let dual = take(&mut fields, "dual")?
            .split_whitespace()
            .map(num)
            .collect::<Result<Vec<f64>>>()?;
        if dual.len() != n {
            return Err(bad("dual length differs from n"));
        }
        let mut data = Vec::with_capacity(n * k);
        for line in lines.take(n) {
            let row = line
                .split_whitespace()
                .map(num)
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != k {
                return Err(bad("training row width differs from k"));
            }
            data.extend(row);
        }
        let training_inputs =
            Matrix::from_vec(n, k, data).map_err(|_| bad("too few training rows"))?;
        Ok((
            LssvModel {
                training_inputs,
                dual,
                bias,
                gamma,
                kernel,
                target_kind: TargetKind::AqiValue,
            },
            fields,
        ))
    }
}

/// `f(x) = Σ a_i k(x_i, x) + b`.
pub fn predict(model: &LssvModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("prediction input must be finite"));
    }
    let s: f64 = model
        .training_inputs
        .iter_rows()
        .zip(&model.dual)
        .map(|(xi, a)| a * model.kernel.eval(xi, x))
        .sum();
    Ok(s + model.bias)
}
