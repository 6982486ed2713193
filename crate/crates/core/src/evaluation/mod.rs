//! Forecast scoring: band accuracy, false-positive rate under a binary
//! reduction of the six bands, timed prediction, and rank concordance
//! between predicted and observed AQI.

mod baselines;
mod sweep;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use baselines::{KnnBaseline, MajorityBaseline, RidgeBaseline};
pub use sweep::{read_report_csv, sweep_report, write_plot_data, write_report_csv, SweepRow, REPORT_HEADER};

use crate::error::{Error, Result};
use crate::ingestion::{AqiBand, AqiBreakpoints, AQI_MAX};
use crate::lssv::{tau_verdict, TauVerdict};
use crate::matrix::Matrix;

/// Anything that maps a raw selected-feature vector to an AQI value.
pub trait Forecaster {
    fn name(&self) -> &str;
    fn predict_aqi(&self, x: &[f64]) -> Result<f64>;
}

impl Forecaster for crate::lssv::LssvModel {
    fn name(&self) -> &str {
        "dr-lssv"
    }

    fn predict_aqi(&self, x: &[f64]) -> Result<f64> {
        crate::lssv::predict(self, x)
    }
}

/// Bands counted as "positive" when collapsing six classes to two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositiveSet([bool; 6]);

impl PositiveSet {
    pub fn new(bands: &[AqiBand]) -> Result<Self> {
        let mut set = [false; 6];
        for b in bands {
            set[b.index()] = true;
        }
        let count = set.iter().filter(|x| **x).count();
        if count == 0 || count == 6 {
            return Err(Error::invalid(
                "positive set must be a non-empty proper subset of the bands",
            ));
        }
        Ok(PositiveSet(set))
    }

    pub fn contains(&self, b: AqiBand) -> bool {
        self.0[b.index()]
    }

    pub fn bands(&self) -> Vec<AqiBand> {
        AqiBand::ALL.into_iter().filter(|b| self.contains(*b)).collect()
    }
}

impl Default for PositiveSet {
    /// Poor, Very Poor and Severe.
    fn default() -> Self {
        PositiveSet([false, false, false, true, true, true])
    }
}

impl FromStr for PositiveSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bands = s
            .split([',', '|', ';'])
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<AqiBand>>>()?;
        PositiveSet::new(&bands)
    }
}

impl fmt::Display for PositiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.bands().iter().map(|b| b.name()).collect();
        f.write_str(&names.join(","))
    }
}

fn check_lengths(pred: &[AqiBand], truth: &[AqiBand]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    Ok(())
}

/// Share of positions where the predicted band equals the true band.
pub fn accuracy(pred: &[AqiBand], truth: &[AqiBand]) -> Result<f64> {
    check_lengths(pred, truth)?;
    if truth.is_empty() {
        return Err(Error::invalid("accuracy of an empty sample"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// `FP / (FP + TN)`; zero when there are no true negatives or false positives.
pub fn false_positive_rate(pred: &[AqiBand], truth: &[AqiBand], positive: &PositiveSet) -> Result<f64> {
    check_lengths(pred, truth)?;
    let (mut fp, mut tn) = (0u64, 0u64);
    for (p, t) in pred.iter().zip(truth) {
        if !positive.contains(*t) {
            if positive.contains(*p) {
                fp += 1;
            } else {
                tn += 1;
            }
        }
    }
    Ok(if fp + tn == 0 {
        0.0
    } else {
        fp as f64 / (fp + tn) as f64
    })
}

/// Counts indexed `[true band][predicted band]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix(pub [[u64; 6]; 6]);

impl ConfusionMatrix {
    pub fn tally(pred: &[AqiBand], truth: &[AqiBand]) -> Result<Self> {
        check_lengths(pred, truth)?;
        let mut m = [[0u64; 6]; 6];
        for (p, t) in pred.iter().zip(truth) {
            m[t.index()][p.index()] += 1;
        }
        Ok(ConfusionMatrix(m))
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..6).map(|i| self.0[i][i]).sum()
    }

    /// FPR of the binary reduction, read off the matrix.
    pub fn fpr(&self, positive: &PositiveSet) -> f64 {
        let (mut fp, mut tn) = (0u64, 0u64);
        for t in AqiBand::ALL.into_iter().filter(|b| !positive.contains(*b)) {
            for p in AqiBand::ALL {
                let c = self.0[t.index()][p.index()];
                if positive.contains(p) {
                    fp += c;
                } else {
                    tn += c;
                }
            }
        }
        if fp + tn == 0 {
            0.0
        } else {
            fp as f64 / (fp + tn) as f64
        }
    }

    /// One-vs-rest FPR for every band.
    pub fn per_band_fpr(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        for b in 0..6 {
            let (mut fp, mut tn) = (0u64, 0u64);
            for t in (0..6).filter(|t| *t != b) {
                fp += self.0[t][b];
                tn += self.0[t].iter().enumerate().filter(|(p, _)| *p != b).map(|(_, c)| c).sum::<u64>();
            }
            out[b] = if fp + tn == 0 { 0.0 } else { fp as f64 / (fp + tn) as f64 };
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("truth");
        for b in AqiBand::ALL {
            s.push(',');
            s.push_str(b.name());
        }
        s.push('\n');
        for t in AqiBand::ALL {
            s.push_str(t.name());
            for c in self.0[t.index()] {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Labelled samples to score against. `groups` tags each row with its station.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    pub x: Matrix,
    pub aqi: Vec<f64>,
    pub groups: Vec<usize>,
}

impl EvalSet {
    pub fn len(&self) -> usize {
        self.aqi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aqi.is_empty()
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> EvalSet {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        EvalSet {
            x: self.x.select_rows(&idx),
            aqi: self.aqi[..idx.len()].to_vec(),
            groups: self.groups[..idx.len()].to_vec(),
        }
    }
}

/// Which observations τ is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauScope {
    /// τ per station, averaged over stations with a non-degenerate window.
    #[default]
    PerStation,
    /// One τ over the whole test set.
    Pooled,
}

impl FromStr for TauScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "perstation" | "station" => Ok(TauScope::PerStation),
            "pooled" | "all" => Ok(TauScope::Pooled),
            _ => Err(Error::invalid(format!("unknown tau scope `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method_name: String,
    pub n_samples: usize,
    pub accuracy: f64,
    pub forecast_time_ms: f64,
    pub fpr: f64,
    pub confusion: ConfusionMatrix,
    pub per_band_fpr: [f64; 6],
    pub tau_verdict: TauVerdict,
    /// Mean absolute error of the clamped AQI prediction.
    pub mae: f64,
    pub predicted_aqi: Vec<f64>,
}

impl EvalReport {
    /// Sample count times measured time.
    pub fn count_time_product(&self) -> f64 {
        self.n_samples as f64 * self.forecast_time_ms
    }
}

/// Runs `f` once and returns its result with the elapsed wall-clock time in ms.
pub fn measure_forecast_time<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

/// Predict-and-band loop over every row; the timing covers only this loop.
pub fn timed_predictions(
    model: &dyn Forecaster,
    x: &Matrix,
    breakpoints: &AqiBreakpoints,
) -> Result<(Vec<(f64, AqiBand)>, f64)> {
    let (out, ms) = measure_forecast_time(|| {
        x.iter_rows()
            .take(x.rows())
            .map(|row| {
                let aqi = model.predict_aqi(row)?.clamp(0.0, AQI_MAX);
                Ok((aqi, breakpoints.band(aqi)))
            })
            .collect::<Result<Vec<_>>>()
    });
    Ok((out?, ms))
}

fn tau_over(pred: &[f64], obs: &[f64], groups: &[usize], scope: TauScope) -> Result<TauVerdict> {
    if pred.len() < 2 {
        return Ok(TauVerdict {
            tau: 0.0,
            band: crate::lssv::tau_band(0.0)?,
            degenerate: true,
        });
    }
    match scope {
        TauScope::Pooled => tau_verdict(pred, obs),
        TauScope::PerStation => {
            let mut ids: Vec<usize> = groups.to_vec();
            ids.sort_unstable();
            ids.dedup();
            let mut taus = Vec::new();
            for g in ids {
                let (p, o): (Vec<f64>, Vec<f64>) = (0..pred.len())
                    .filter(|&i| groups[i] == g)
                    .map(|i| (pred[i], obs[i]))
                    .unzip();
                if p.len() < 2 {
                    continue;
                }
                let v = tau_verdict(&p, &o)?;
                if !v.degenerate {
                    taus.push(v.tau);
                }
            }
            let degenerate = taus.is_empty();
            let tau = if degenerate {
                0.0
            } else {
                taus.iter().sum::<f64>() / taus.len() as f64
            };
            Ok(TauVerdict {
                tau,
                band: crate::lssv::tau_band(tau)?,
                degenerate,
            })
        }
    }
}

/// Scores `model` on `test`.
pub fn evaluate(
    model: &dyn Forecaster,
    test: &EvalSet,
    breakpoints: &AqiBreakpoints,
    positive: &PositiveSet,
    scope: TauScope,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let (pred, forecast_time_ms) = timed_predictions(model, &test.x, breakpoints)?;
    let pred_bands: Vec<AqiBand> = pred.iter().map(|p| p.1).collect();
    let pred_aqi: Vec<f64> = pred.iter().map(|p| p.0).collect();
    let truth: Vec<AqiBand> = test.aqi.iter().map(|a| breakpoints.band(*a)).collect();

    let confusion = ConfusionMatrix::tally(&pred_bands, &truth)?;
    let mae = pred_aqi
        .iter()
        .zip(&test.aqi)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / test.len() as f64;
    Ok(EvalReport {
        method_name: model.name().to_string(),
        n_samples: test.len(),
        accuracy: accuracy(&pred_bands, &truth)?,
        forecast_time_ms,
        fpr: false_positive_rate(&pred_bands, &truth, positive)?,
        per_band_fpr: confusion.per_band_fpr(),
        confusion,
        tau_verdict: tau_over(&pred_aqi, &test.aqi, &test.groups, scope)?,
        mae,
        predicted_aqi: pred_aqi,
    })
}
