use std::collections::{btree_map, BTreeMap};
use std::io::Write;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};

use super::aqi::{AqiBand, AqiBreakpoints, AQI_MAX};
use super::Diagnostics;
use crate::error::{Error, Result};
use crate::pollutant::{Pollutant, N_POLLUTANTS};

/// Sampling cadence of a station series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cadence {
    Hourly,
    Daily,
}

impl Cadence {
    pub fn step(self) -> Duration {
        match self {
            Cadence::Hourly => Duration::hours(1),
            Cadence::Daily => Duration::days(1),
        }
    }

    /// Columns of the day-by-hour grid.
    pub fn per_day(self) -> usize {
        match self {
            Cadence::Hourly => 24,
            Cadence::Daily => 1,
        }
    }

    fn on_lattice(self, t: NaiveDateTime) -> bool {
        match self {
            Cadence::Hourly => t.minute() == 0 && t.second() == 0,
            Cadence::Daily => t.time() == chrono::NaiveTime::MIN,
        }
    }

    fn format(self, t: NaiveDateTime) -> String {
        match self {
            Cadence::Hourly => t.format("%Y-%m-%d %H:%M").to_string(),
            Cadence::Daily => t.format("%Y-%m-%d").to_string(),
        }
    }
}

/// One row of readings; `None` marks a missing cell.
pub type Reading = [Option<f64>; N_POLLUTANTS];

/// Timestamped readings of the seven pollutants at one station.
#[derive(Debug, Clone, PartialEq)]
pub struct StationSeries {
    pub station_id: String,
    pub cadence: Cadence,
    pub timestamps: Vec<NaiveDateTime>,
    pub readings: Vec<Reading>,
    pub aqi: Vec<Option<f64>>,
    pub band: Vec<Option<AqiBand>>,
}

impl StationSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn column(&self, p: Pollutant) -> impl Iterator<Item = Option<f64>> + '_ {
        self.readings.iter().map(move |r| r[p.index()])
    }

    pub fn missing_count(&self) -> usize {
        self.readings
            .iter()
            .flat_map(|r| r.iter())
            .filter(|c| c.is_none())
            .count()
    }

    /// Checks ordering, cadence spacing, shapes and value ranges.
    pub fn validate(&self) -> Result<()> {
        let n = self.timestamps.len();
        if self.readings.len() != n || self.aqi.len() != n || self.band.len() != n {
            return Err(Error::invalid(format!(
                "station `{}`: column lengths disagree",
                self.station_id
            )));
        }
        for w in self.timestamps.windows(2) {
            if w[1] - w[0] != self.cadence.step() {
                return Err(Error::invalid(format!(
                    "station `{}`: timestamps {} and {} are not one step apart",
                    self.station_id, w[0], w[1]
                )));
            }
        }
        for r in &self.readings {
            if r.iter().flatten().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "station `{}`: negative or non-finite reading",
                    self.station_id
                )));
            }
        }
        if self.aqi.iter().flatten().any(|a| !(0.0..=AQI_MAX).contains(a)) {
            return Err(Error::invalid(format!(
                "station `{}`: AQI outside [0, 500]",
                self.station_id
            )));
        }
        Ok(())
    }

    /// Fills absent AQI values from complete rows and flags source values
    /// that disagree with the recomputed one by more than one unit.
    pub fn fill_aqi(&mut self, breakpoints: &AqiBreakpoints, diag: &mut Diagnostics) {
        for i in 0..self.len() {
            let row = &self.readings[i];
            let full: Option<[f64; N_POLLUTANTS]> = row
                .iter()
                .copied()
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.try_into().unwrap());
            let computed = full.and_then(|c| super::aqi::compute_aqi(&c, breakpoints).ok());
            match (self.aqi[i], computed) {
                (None, Some((a, b))) => {
                    self.aqi[i] = Some(a);
                    if self.band[i].is_none() {
                        self.band[i] = Some(b);
                    }
                }
                (Some(src), Some((a, _))) if (src - a).abs() > 1.0 => {
                    diag.aqi_disagreements += 1;
                }
                _ => {}
            }
            if self.band[i].is_none() {
                if let Some(a) = self.aqi[i] {
                    self.band[i] = Some(breakpoints.band(a));
                }
            }
        }
    }
}

struct Columns {
    station: usize,
    datetime: usize,
    pollutants: [usize; N_POLLUTANTS],
    aqi: Option<usize>,
    bucket: Option<usize>,
}

impl Columns {
    fn locate(headers: &csv::StringRecord) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let station = find("StationId")
            .or_else(|| find("City"))
            .ok_or_else(|| Error::MissingColumn("StationId".into()))?;
        let datetime = find("Datetime")
            .or_else(|| find("Date"))
            .ok_or_else(|| Error::MissingColumn("Datetime".into()))?;
        let mut pollutants = [0; N_POLLUTANTS];
        for p in Pollutant::ALL {
            pollutants[p.index()] =
                find(p.header()).ok_or_else(|| Error::MissingColumn(p.header().into()))?;
        }
        Ok(Columns {
            station,
            datetime,
            pollutants,
            aqi: find("AQI"),
            bucket: find("AQI_Bucket"),
        })
    }
}

fn parse_timestamp(s: &str, cadence: Cadence) -> Option<NaiveDateTime> {
    let s = s.trim();
    for fmt in ["%Y-%m-%d %H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    if cadence == Cadence::Daily {
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Some(d.and_time(chrono::NaiveTime::MIN));
        }
    }
    None
}

fn parse_cell(s: &str) -> std::result::Result<Option<f64>, String> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| format!("not a number: `{s}`"))?;
    if !v.is_finite() {
        return Err(format!("not finite: `{s}`"));
    }
    Ok(Some(v))
}

struct Row {
    time: NaiveDateTime,
    reading: Reading,
    aqi: Option<f64>,
    band: Option<AqiBand>,
}

fn parse_row(rec: &csv::StringRecord, cols: &Columns, cadence: Cadence) -> std::result::Result<Row, String> {
    let get = |i: usize| rec.get(i).unwrap_or("");
    let raw_time = get(cols.datetime);
    let time = parse_timestamp(raw_time, cadence)
        .ok_or_else(|| format!("unparseable timestamp `{raw_time}`"))?;
    if !cadence.on_lattice(time) {
        return Err(format!("timestamp `{raw_time}` is off the {cadence:?} grid"));
    }
    let mut reading = [None; N_POLLUTANTS];
    for p in Pollutant::ALL {
        let v = parse_cell(get(cols.pollutants[p.index()])).map_err(|m| format!("{p}: {m}"))?;
        if let Some(x) = v {
            if x < 0.0 {
                return Err(format!("negative {p} concentration {x}"));
            }
        }
        reading[p.index()] = v;
    }
    let aqi = match cols.aqi {
        Some(i) => parse_cell(get(i)).map_err(|m| format!("AQI: {m}"))?,
        None => None,
    };
    if let Some(a) = aqi {
        if !(0.0..=AQI_MAX).contains(&a) {
            return Err(format!("AQI {a} outside [0, 500]"));
        }
    }
    let band = match cols.bucket.map(get).map(str::trim) {
        Some(s) if !s.is_empty() => Some(s.parse::<AqiBand>().map_err(|e| e.to_string())?),
        _ => None,
    };
    Ok(Row {
        time,
        reading,
        aqi,
        band,
    })
}

/// Parses station CSV data into one series per station, sorted by id.
///
/// Rows that fail to parse are skipped and recorded in `diag`. Timestamps
/// missing between the first and last reading of a station are inserted as
/// all-missing rows so the series sits on a regular lattice.
pub fn parse_station_csv(
    bytes: &[u8],
    cadence: Cadence,
    diag: &mut Diagnostics,
) -> Result<Vec<StationSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(bytes);
    let cols = Columns::locate(rdr.headers()?)?;

    let mut by_station: BTreeMap<String, BTreeMap<NaiveDateTime, Row>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let station = rec.get(cols.station).unwrap_or("").trim().to_string();
        if station.is_empty() {
            diag.skip(line, "empty station id");
            continue;
        }
        match parse_row(&rec, &cols, cadence) {
            Ok(row) => {
                let time = row.time;
                if let btree_map::Entry::Vacant(e) = by_station.entry(station).or_default().entry(time) {
                    e.insert(row);
                } else {
                    diag.skip(line, format!("duplicate timestamp {time}"));
                }
            }
            Err(m) => diag.skip(line, m),
        }
    }

    let mut out = Vec::with_capacity(by_station.len());
    for (station_id, rows) in by_station {
        let (Some(&first), Some(&last)) = (rows.keys().next(), rows.keys().next_back()) else {
            continue;
        };
        let mut s = StationSeries {
            station_id,
            cadence,
            timestamps: Vec::new(),
            readings: Vec::new(),
            aqi: Vec::new(),
            band: Vec::new(),
        };
        let mut rows = rows;
        let mut t = first;
        while t <= last {
            match rows.remove(&t) {
                Some(r) => {
                    s.readings.push(r.reading);
                    s.aqi.push(r.aqi);
                    s.band.push(r.band);
                }
                None => {
                    diag.gap_rows += 1;
                    s.readings.push([None; N_POLLUTANTS]);
                    s.aqi.push(None);
                    s.band.push(None);
                }
            }
            s.timestamps.push(t);
            t += cadence.step();
        }
        out.push(s);
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes series in the station CSV schema, with AQI columns always present.
pub fn write_station_csv<W: Write>(series: &[StationSeries], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["StationId", "Datetime"];
    header.extend(Pollutant::ALL.iter().map(|p| p.header()));
    header.extend(["AQI", "AQI_Bucket"]);
    w.write_record(&header)?;
    for s in series {
        for i in 0..s.len() {
            let mut rec = vec![s.station_id.clone(), s.cadence.format(s.timestamps[i])];
            rec.extend(s.readings[i].iter().map(|v| fmt_opt(*v)));
            rec.push(fmt_opt(s.aqi[i]));
            rec.push(s.band[i].map(|b| b.name().to_string()).unwrap_or_default());
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
