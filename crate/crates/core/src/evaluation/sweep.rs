//! Report rows over growing sample counts, their CSV form, and plot data.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{evaluate, EvalReport, EvalSet, Forecaster, PositiveSet, TauScope};
use crate::error::{Error, Result};
use crate::ingestion::{AqiBand, AqiBreakpoints};

pub const REPORT_HEADER: [&str; 9] = [
    "method",
    "n",
    "accuracy",
    "fpr",
    "forecast_time_ms",
    "tau",
    "tau_band",
    "count_time_product",
    "mae",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: String,
    pub n: usize,
    pub accuracy: f64,
    pub fpr: f64,
    pub forecast_time_ms: f64,
    pub tau: f64,
    pub tau_band: AqiBand,
    pub count_time_product: f64,
    pub mae: f64,
}

impl From<&EvalReport> for SweepRow {
    fn from(r: &EvalReport) -> Self {
        SweepRow {
            method: r.method_name.clone(),
            n: r.n_samples,
            accuracy: r.accuracy,
            fpr: r.fpr,
            forecast_time_ms: r.forecast_time_ms,
            tau: r.tau_verdict.tau,
            tau_band: r.tau_verdict.band,
            count_time_product: r.count_time_product(),
            mae: r.mae,
        }
    }
}

/// Evaluates every method on the first `n` test samples for each `n` in `sizes`.
pub fn sweep_report(
    test: &EvalSet,
    sizes: &[usize],
    methods: &[&dyn Forecaster],
    breakpoints: &AqiBreakpoints,
    positive: &PositiveSet,
    scope: TauScope,
) -> Result<Vec<SweepRow>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sweep sizes must be strictly ascending"));
    }
    let mut rows = Vec::with_capacity(sizes.len() * methods.len());
    for &n in sizes {
        if n == 0 || n > test.len() {
            return Err(Error::invalid(format!(
                "sweep size {n} exceeds the {} available test samples",
                test.len()
            )));
        }
        let head = test.head(n);
        for m in methods {
            rows.push(SweepRow::from(&evaluate(*m, &head, breakpoints, positive, scope)?));
        }
    }
    Ok(rows)
}

pub fn write_report_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.n.to_string(),
            r.accuracy.to_string(),
            r.fpr.to_string(),
            r.forecast_time_ms.to_string(),
            r.tau.to_string(),
            r.tau_band.name().to_string(),
            r.count_time_product.to_string(),
            r.mae.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("report", e))?;
    Ok(())
}

pub fn read_report_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != REPORT_HEADER {
        return Err(Error::format("report", format!("unexpected header {header:?}")));
    }
    let num = |s: &str, what: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::format("report", format!("bad {what} `{s}`")))
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push(SweepRow {
            method: rec[0].to_string(),
            n: rec[1]
                .parse()
                .map_err(|_| Error::format("report", format!("bad n `{}`", &rec[1])))?,
            accuracy: num(&rec[2], "accuracy")?,
            fpr: num(&rec[3], "fpr")?,
            forecast_time_ms: num(&rec[4], "forecast_time_ms")?,
            tau: num(&rec[5], "tau")?,
            tau_band: rec[6].parse()?,
            count_time_product: num(&rec[7], "count_time_product")?,
            mae: num(&rec[8], "mae")?,
        });
    }
    Ok(rows)
}

/// Writes `accuracy.dat`, `fpr.dat` and `forecast_time_ms.dat` into `dir`:
/// whitespace-separated, column `n` then one column per method.
pub fn write_plot_data(rows: &[SweepRow], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let metrics: [(&str, fn(&SweepRow) -> f64); 3] = [
        ("accuracy", |r| r.accuracy),
        ("fpr", |r| r.fpr),
        ("forecast_time_ms", |r| r.forecast_time_ms),
    ];
    for (name, get) in metrics {
        let mut table: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
        for r in rows {
            let col = methods.iter().position(|m| *m == r.method).unwrap_or(0);
            table.entry(r.n).or_insert_with(|| vec![None; methods.len()])[col] = Some(get(r));
        }
        let mut text = format!("# n {}\n", methods.join(" "));
        for (n, vals) in table {
            text.push_str(&n.to_string());
            for v in vals {
                match v {
                    Some(v) => text.push_str(&format!(" {v}")),
                    None => text.push_str(" NaN"),
                }
            }
            text.push('\n');
        }
        let path = dir.join(format!("{name}.dat"));
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
