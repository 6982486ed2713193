//! Pollutant relevance from a ridge-penalized logistic model that separates
//! the hourly sample pool from the daily pool.
//!
//! With `z_i = α + βᵀt_i` and labels `y_i ∈ {0, 1}`, the objective is
//!
//! ```text
//! l(α, β) = Σ_i [ y_i z_i − log(1 + e^{z_i}) ] − (ε/2)‖β‖²
//! ```
//!
//! and its score is `∂l/∂α = Σ (y_i − p_i)`, `∂l/∂β = Σ (y_i − p_i) t_i − εβ`
//! with `p_i = σ(z_i)`. The intercept is never penalized.

use std::fmt::Write as _;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};
use crate::pollutant::{Pollutant, N_POLLUTANTS};

/// One pooled observation; `label` is 0 for the hourly pool and 1 for the daily pool.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedSample {
    pub features: Vec<f64>,
    pub label: u8,
}

/// Pooled samples plus the standardization statistics of their union.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedSet {
    pub samples: Vec<HomogenizedSample>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl HomogenizedSet {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn counts(&self) -> (usize, usize) {
        let n1 = self.samples.iter().filter(|s| s.label == 1).count();
        (self.samples.len() - n1, n1)
    }

    /// Samples with every feature shifted to zero mean and unit variance.
    pub fn standardized(&self) -> Vec<HomogenizedSample> {
        self.samples
            .iter()
            .map(|s| HomogenizedSample {
                features: s
                    .features
                    .iter()
                    .zip(self.means.iter().zip(&self.sds))
                    .map(|(x, (m, sd))| (x - m) / sd)
                    .collect(),
                label: s.label,
            })
            .collect()
    }
}

/// Concatenates the hourly pool (label 0) and the daily pool (label 1).
pub fn homogenize(hourly: &[Vec<f64>], daily: &[Vec<f64>]) -> Result<HomogenizedSet> {
    if hourly.is_empty() || daily.is_empty() {
        return Err(Error::invalid("both sample pools must be non-empty"));
    }
    let dim = hourly[0].len();
    let mut samples = Vec::with_capacity(hourly.len() + daily.len());
    for (pool, label) in [(hourly, 0u8), (daily, 1u8)] {
        for f in pool {
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: f.len(),
                });
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("non-finite feature value"));
            }
            samples.push(HomogenizedSample {
                features: f.clone(),
                label,
            });
        }
    }
    let n = samples.len() as f64;
    let means: Vec<f64> = (0..dim)
        .map(|j| samples.iter().map(|s| s.features[j]).sum::<f64>() / n)
        .collect();
    let sds = (0..dim)
        .map(|j| {
            let var = samples
                .iter()
                .map(|s| (s.features[j] - means[j]).powi(2))
                .sum::<f64>()
                / n;
            // A constant column carries no information; keep it at unit scale.
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    Ok(HomogenizedSet {
        samples,
        means,
        sds,
    })
}

fn linear_predictor(alpha: f64, beta: &[f64], x: &[f64]) -> f64 {
    alpha + beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Penalized log-likelihood.
pub fn log_likelihood(alpha: f64, beta: &[f64], samples: &[HomogenizedSample], ridge: f64) -> f64 {
    let data: f64 = samples
        .iter()
        .map(|s| {
            let z = linear_predictor(alpha, beta, &s.features);
            f64::from(s.label) * z - softplus(z)
        })
        .sum();
    data - 0.5 * ridge * beta.iter().map(|b| b * b).sum::<f64>()
}

/// Gradient of [`log_likelihood`] as `(∂/∂α, ∂/∂β)`.
pub fn score(
    alpha: f64,
    beta: &[f64],
    samples: &[HomogenizedSample],
    ridge: f64,
) -> (f64, Vec<f64>) {
    let mut ga = 0.0;
    let mut gb = vec![0.0; beta.len()];
    for s in samples {
        let r = f64::from(s.label) - sigmoid(linear_predictor(alpha, beta, &s.features));
        ga += r;
        for (g, x) in gb.iter_mut().zip(&s.features) {
            *g += r * x;
        }
    }
    for (g, b) in gb.iter_mut().zip(beta) {
        *g -= ridge * b;
    }
    (ga, gb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub ridge: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            max_iter: 100,
            tol: 1e-8,
            ridge: 1e-4,
        }
    }
}

/// Fitted logistic model. `alpha` and `beta` act on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    pub feature_means: Vec<f64>,
    pub feature_sds: Vec<f64>,
}

impl LogisticModel {
    /// Coefficients on the original feature scale.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let beta: Vec<f64> = self
            .beta
            .iter()
            .zip(&self.feature_sds)
            .map(|(b, sd)| b / sd)
            .collect();
        let alpha = self.alpha
            - beta
                .iter()
                .zip(&self.feature_means)
                .map(|(b, m)| b * m)
                .sum::<f64>();
        (alpha, beta)
    }

    /// `P(daily | x)` for a raw feature vector.
    pub fn probability(&self, x: &[f64]) -> f64 {
        let (a, b) = self.raw_coefficients();
        sigmoid(linear_predictor(a, &b, x))
    }
}

/// Newton–Raphson with step halving from `(α, β) = (0, 0)` on the
/// standardized samples.
pub fn fit_logistic(set: &HomogenizedSet, config: &LogisticConfig) -> Result<LogisticModel> {
    let (n0, n1) = set.counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::invalid("logistic fit needs samples from both pools"));
    }
    let samples = set.standardized();
    let dim = set.dim();
    let mut alpha = 0.0;
    let mut beta = vec![0.0; dim];
    let mut ll = log_likelihood(alpha, &beta, &samples, config.ridge);
    let mut iterations = 0;
    let mut converged = false;

    loop {
        let (ga, gb) = score(alpha, &beta, &samples, config.ridge);
        let gmax = gb.iter().fold(ga.abs(), |m, g| m.max(g.abs()));
        if gmax < config.tol {
            converged = true;
            break;
        }
        if iterations >= config.max_iter {
            break;
        }

        // Negative Hessian over (α, β).
        let m = dim + 1;
        let mut h = Mat::<f64>::zeros(m, m);
        for s in &samples {
            let p = sigmoid(linear_predictor(alpha, &beta, &s.features));
            let w = p * (1.0 - p);
            let z = |i: usize| if i == 0 { 1.0 } else { s.features[i - 1] };
            for i in 0..m {
                let wi = w * z(i);
                for j in 0..=i {
                    h[(i, j)] += wi * z(j);
                }
            }
        }
        for i in 0..m {
            if i > 0 {
                h[(i, i)] += config.ridge;
            }
            for j in 0..i {
                h[(j, i)] = h[(i, j)];
            }
        }
        let g = Mat::<f64>::from_fn(m, 1, |i, _| if i == 0 { ga } else { gb[i - 1] });
        let step = match h.llt(faer::Side::Lower) {
            Ok(llt) => llt.solve(&g),
            // Saturated weights; fall back to a gradient step.
            Err(_) => g.clone(),
        };

        let slack = 64.0 * f64::EPSILON * (1.0 + ll.abs());
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let a_new = alpha + t * step[(0, 0)];
            let b_new: Vec<f64> = (0..dim).map(|j| beta[j] + t * step[(j + 1, 0)]).collect();
            let ll_new = log_likelihood(a_new, &b_new, &samples, config.ridge);
            // Near the optimum the gain drops below the rounding error of the sum.
            if ll_new >= ll - slack {
                alpha = a_new;
                beta = b_new;
                ll = ll_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // No ascent possible at machine precision.
            let (ga, gb) = score(alpha, &beta, &samples, config.ridge);
            converged = gb.iter().fold(ga.abs(), |m, g| m.max(g.abs())) < config.tol;
            break;
        }
    }

    Ok(LogisticModel {
        alpha,
        beta,
        iterations,
        converged,
        log_likelihood: ll,
        feature_means: set.means.clone(),
        feature_sds: set.sds.clone(),
    })
}

/// Pollutants ranked by standardized coefficient magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelection {
    pub ranked: Vec<Pollutant>,
    pub scores: Vec<f64>,
    pub selected: Vec<Pollutant>,
}

pub const DEFAULT_K: usize = 3;

/// Ranks the seven pollutants by `|β_j|` on the standardized scale, which
/// equals `|β_raw_j · sd_j|`. Ties keep canonical pollutant order.
pub fn select_features(model: &LogisticModel, k: usize) -> Result<FeatureSelection> {
    if !model.converged {
        return Err(Error::NotConverged);
    }
    if model.beta.len() != N_POLLUTANTS {
        return Err(Error::DimensionMismatch {
            expected: N_POLLUTANTS,
            actual: model.beta.len(),
        });
    }
    if !(1..=N_POLLUTANTS).contains(&k) {
        return Err(Error::invalid(format!("k must be in 1..=7, got {k}")));
    }
    let mut order: Vec<usize> = (0..N_POLLUTANTS).collect();
    order.sort_by(|&i, &j| model.beta[j].abs().total_cmp(&model.beta[i].abs()));
    let ranked: Vec<Pollutant> = order.iter().map(|&i| Pollutant::ALL[i]).collect();
    Ok(FeatureSelection {
        scores: order.iter().map(|&i| model.beta[i].abs()).collect(),
        selected: ranked[..k].to_vec(),
        ranked,
    })
}

impl FeatureSelection {
    /// `rank,pollutant,score` rows for the selected pollutants.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,pollutant,score\n");
        for (i, (p, sc)) in self.selected.iter().zip(&self.scores).enumerate() {
            let _ = writeln!(s, "{},{},{:.16e}", i + 1, p, sc);
        }
        s
    }

    /// Reads what [`FeatureSelection::to_csv`] wrote. Only the selected
    /// pollutants are persisted, so `ranked` equals `selected` afterwards.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut rows: Vec<(usize, String, f64)> = Vec::new();
        for rec in rdr.deserialize() {
            rows.push(rec?);
        }
        rows.sort_by_key(|r| r.0);
        let mut selected = Vec::new();
        let mut scores = Vec::new();
        for (i, (rank, name, score)) in rows.into_iter().enumerate() {
            if rank != i + 1 {
                return Err(Error::format("selection csv", "ranks must be 1..k"));
            }
            selected.push(name.parse::<Pollutant>()?);
            scores.push(score);
        }
        if selected.is_empty() {
            return Err(Error::format("selection csv", "no selected pollutants"));
        }
        Ok(FeatureSelection {
            ranked: selected.clone(),
            scores,
            selected,
        })
    }
}
