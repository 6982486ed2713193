//! Station CSV ingestion, imputation, day-by-hour grids and AQI banding.

mod aqi;
mod grid;
mod impute;
mod series;

pub use aqi::{
    compute_aqi, AqiBand, AqiBreakpoints, BandRange, Segment, AQI_MAX, BUNDLED_BANDS_CSV,
    BUNDLED_BREAKPOINTS_CSV,
};
pub use grid::{build_station_grid, StationGrid};
pub use impute::{impute_column, impute_missing, ImputePolicy};
pub(crate) use impute::median;
pub use series::{parse_station_csv, write_station_csv, Cadence, Reading, StationSeries};

/// Tally of rows skipped or altered during ingestion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// `(line, reason)` for every rejected row.
    pub skipped: Vec<(u64, String)>,
    /// Rows inserted to close timestamp gaps.
    pub gap_rows: usize,
    /// Readings outside complete days when building grids.
    pub dropped_readings: usize,
    /// Source AQI values more than one unit away from the recomputed value.
    pub aqi_disagreements: usize,
}

impl Diagnostics {
    pub(crate) fn skip(&mut self, line: u64, reason: impl Into<String>) {
        self.skipped.push((line, reason.into()));
    }
}
