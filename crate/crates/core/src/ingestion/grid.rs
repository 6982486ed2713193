use chrono::{NaiveDate, Timelike};

use super::series::{Cadence, StationSeries};
use super::Diagnostics;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pollutant::Pollutant;

/// Day-by-hour matrix of one pollutant at one station.
///
/// `values[(d, h)]` is the reading on day `d` (counted from `first_day`) at
/// hour `h`; daily series produce a single column.
#[derive(Debug, Clone, PartialEq)]
pub struct StationGrid {
    pub station_id: String,
    pub pollutant: Pollutant,
    pub first_day: NaiveDate,
    /// Series row holding cell (0, 0).
    pub first_row: usize,
    pub values: Matrix,
}

impl StationGrid {
    pub fn days(&self) -> usize {
        self.values.rows()
    }

    pub fn per_day(&self) -> usize {
        self.values.cols()
    }

    /// Wraps a bare matrix, mostly useful for tests and examples.
    pub fn from_matrix(values: Matrix) -> Self {
        StationGrid {
            station_id: String::new(),
            pollutant: Pollutant::Pm25,
            first_day: NaiveDate::MIN,
            first_row: 0,
            values,
        }
    }

    /// Same metadata, different values.
    pub fn with_values(&self, values: Matrix) -> Self {
        assert_eq!(
            (values.rows(), values.cols()),
            (self.values.rows(), self.values.cols())
        );
        StationGrid {
            values,
            ..self.clone()
        }
    }
}

/// Reshapes a fully imputed series into complete days.
///
/// Partial leading and trailing days are dropped and counted in
/// `diag.dropped_readings`.
pub fn build_station_grid(
    series: &StationSeries,
    pollutant: Pollutant,
    diag: &mut Diagnostics,
) -> Result<StationGrid> {
    let q = series.cadence.per_day();
    let lead = match series.cadence {
        Cadence::Hourly => series
            .timestamps
            .first()
            .map_or(0, |t| (24 - t.hour() as usize) % 24),
        Cadence::Daily => 0,
    };
    let usable = series.len().saturating_sub(lead);
    let p = usable / q;
    if p == 0 {
        return Err(Error::NoCompleteDays {
            station: series.station_id.clone(),
            pollutant,
        });
    }
    diag.dropped_readings += series.len() - p * q;

    let mut data = Vec::with_capacity(p * q);
    for row in &series.readings[lead..lead + p * q] {
        let v = row[pollutant.index()].ok_or_else(|| {
            Error::invalid(format!(
                "station `{}`: {pollutant} still has missing readings; impute first",
                series.station_id
            ))
        })?;
        data.push(v);
    }
    Ok(StationGrid {
        station_id: series.station_id.clone(),
        pollutant,
        first_day: series.timestamps[lead].date(),
        first_row: lead,
        values: Matrix::from_vec(p, q, data)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDateTime;

    fn series(cadence: Cadence, start: NaiveDateTime, n: usize) -> StationSeries {
        StationSeries {
            station_id: "S".into(),
            cadence,
            timestamps: (0..n).map(|i| start + cadence.step() * i as i32).collect(),
            readings: (0..n)
                .map(|i| std::array::from_fn(|j| Some((i * 10 + j) as f64)))
                .collect(),
            aqi: vec![None; n],
            band: vec![None; n],
        }
    }

    fn t(h: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2022, 5, 1).unwrap().and_hms_opt(h, 0, 0).unwrap()
    }

    #[test]
    fn two_days_hourly() {
        let s = series(Cadence::Hourly, t(0), 48);
        let mut d = Diagnostics::default();
        let g = build_station_grid(&s, Pollutant::So2, &mut d).unwrap();
        assert_eq!((g.days(), g.per_day()), (2, 24));
        assert_eq!(g.values[(1, 3)], (27 * 10 + 2) as f64);
        assert_eq!(d.dropped_readings, 0);
    }

    #[test]
    fn three_days_daily() {
        let s = series(Cadence::Daily, t(0), 3);
        let mut d = Diagnostics::default();
        let g = build_station_grid(&s, Pollutant::Pm25, &mut d).unwrap();
        assert_eq!((g.days(), g.per_day()), (3, 1));
        assert_eq!(g.values[(2, 0)], 20.0);
    }

    #[test]
    fn trailing_partial_day_dropped() {
        let s = series(Cadence::Hourly, t(0), 30);
        let mut d = Diagnostics::default();
        let g = build_station_grid(&s, Pollutant::Pm25, &mut d).unwrap();
        assert_eq!((g.days(), g.per_day()), (1, 24));
        assert_eq!(d.dropped_readings, 6);
    }

    #[test]
    fn leading_partial_day_dropped() {
        let s = series(Cadence::Hourly, t(20), 4 + 24 + 1);
        let mut d = Diagnostics::default();
        let g = build_station_grid(&s, Pollutant::Pm25, &mut d).unwrap();
        assert_eq!(g.days(), 1);
        assert_eq!(g.first_row, 4);
        assert_eq!(g.first_day, NaiveDate::from_ymd_opt(2022, 5, 2).unwrap());
        assert_eq!(g.values[(0, 0)], 40.0);
        assert_eq!(d.dropped_readings, 5);
    }

    #[test]
    fn no_complete_day_is_error() {
        let s = series(Cadence::Hourly, t(0), 23);
        let mut d = Diagnostics::default();
        assert!(matches!(
            build_station_grid(&s, Pollutant::O3, &mut d),
            Err(Error::NoCompleteDays { .. })
        ));
    }

    #[test]
    fn every_cell_is_one_source_reading() {
        let s = series(Cadence::Hourly, t(7), 100);
        let mut d = Diagnostics::default();
        let g = build_station_grid(&s, Pollutant::Co, &mut d).unwrap();
        for day in 0..g.days() {
            for h in 0..24 {
                let row = g.first_row + day * 24 + h;
                assert_eq!(s.timestamps[row].hour() as usize, h);
                assert_eq!(Some(g.values[(day, h)]), s.readings[row][Pollutant::Co.index()]);
            }
        }
    }
}
