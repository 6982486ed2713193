use std::str::FromStr;

use super::series::StationSeries;
use crate::error::{Error, Result};
use crate::pollutant::Pollutant;

/// How missing readings are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImputePolicy {
    /// Linear interpolation between neighbours; edges carry the nearest value.
    #[default]
    LinearInterpolate,
    ColumnMedian,
    /// Carries the last observation forward; a leading gap takes the first one.
    ForwardFill,
}

impl FromStr for ImputePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "linear" | "linearinterpolate" => Ok(ImputePolicy::LinearInterpolate),
            "median" | "columnmedian" => Ok(ImputePolicy::ColumnMedian),
            "ffill" | "forwardfill" => Ok(ImputePolicy::ForwardFill),
            _ => Err(Error::invalid(format!("unknown imputation policy `{s}`"))),
        }
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Fills one column in place. The column must contain an observed value.
pub fn impute_column(col: &mut [Option<f64>], policy: ImputePolicy) {
    let observed: Vec<usize> = (0..col.len()).filter(|&i| col[i].is_some()).collect();
    let (Some(&first), Some(&last)) = (observed.first(), observed.last()) else {
        return;
    };
    match policy {
        ImputePolicy::ColumnMedian => {
            let mut vals: Vec<f64> = col.iter().flatten().copied().collect();
            let m = median(&mut vals);
            col.iter_mut().filter(|c| c.is_none()).for_each(|c| *c = Some(m));
        }
        ImputePolicy::ForwardFill => {
            let mut carry = col[first];
            for c in col.iter_mut() {
                match c {
                    Some(_) => carry = *c,
                    None => *c = carry,
                }
            }
        }
        ImputePolicy::LinearInterpolate => {
            let head = col[first];
            col[..first].iter_mut().for_each(|c| *c = head);
            let tail = col[last];
            col[last + 1..].iter_mut().for_each(|c| *c = tail);
            for w in observed.windows(2) {
                let (i, j) = (w[0], w[1]);
                let (a, b) = (col[i].unwrap(), col[j].unwrap());
                for k in i + 1..j {
                    let t = (k - i) as f64 / (j - i) as f64;
                    col[k] = Some(a + t * (b - a));
                }
            }
        }
    }
}

/// Returns a copy of `series` with every missing reading filled.
pub fn impute_missing(series: &StationSeries, policy: ImputePolicy) -> Result<StationSeries> {
    let mut out = series.clone();
    for p in Pollutant::ALL {
        let mut col: Vec<Option<f64>> = series.column(p).collect();
        if col.iter().all(Option::is_none) {
            return Err(Error::EmptyColumn {
                station: series.station_id.clone(),
                pollutant: p,
            });
        }
        impute_column(&mut col, policy);
        for (row, v) in out.readings.iter_mut().zip(col) {
            row[p.index()] = v;
        }
    }
    Ok(out)
}
