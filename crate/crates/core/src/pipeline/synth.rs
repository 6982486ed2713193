//! Planted synthetic station data.
//!
//! Every station and pollutant get a clean hourly signal on day `d` of `P`
//! and hour `h`:
//!
//! ```text
//! clean = base · (1 + r_d · cas(2π f d / P) + r_h · cas(2π m h / 24))
//! ```
//!
//! with `|r_d| ∈ [0.25, 0.3]` of random sign and `r_h ∈ [0.25, 0.3]`.
//!
//! The `i`-th planted pollutant (0-based) draws `base` per station from
//! that station's slice of a per-pollutant range (the range is cut into one
//! slice per station and slices are dealt out in shuffled order), has day frequency `f = (i + 1)·a` with the station's
//! `a ∈ {2, 3}`, and hour harmonic `m` cycling through `1, −1, 2, −2`. Its
//! signal sits in exactly three Hartley coefficients, each oscillating one
//! holding at least 5% of the clean energy, and it repeats every `P / a`
//! days, so late days revisit early ones.
//!
//! The `k`-th unplanted pollutant has one base shared by all stations, no
//! daily cycle, and day frequency `(n_planted + 1 + k)·a + 1`.
//!
//! All frequencies differ, so every pollutant's oscillation is orthogonal
//! to every other's over the `P` days and the 24 hours.
//!
//! Observed values are `clean · (1 + noise_sd · z) + spike` with standard
//! normal `z`; with probability `spike_rate` a reading also receives a
//! positive spike of `U(0.5, 1.5) · base`. Readings are clamped at zero.
//!
//! The AQI column is the maximum CPCB sub-index of the planted pollutants
//! on the clean signal. The daily file reports the 24-hour mean of the
//! noisy readings for unplanted pollutants and the largest 8-hour rolling
//! mean within the day for planted ones, so the daily pool differs from the
//! hourly pool exactly in the planted columns.
//!
//! Draws come from `ChaCha8Rng::seed_from_u64(seed)` in a fixed order; the
//! noise and spike draws happen whether or not they are used, so runs that
//! differ only in `noise_sd` or `spike_rate` share every other draw.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ingestion::{write_station_csv, AqiBreakpoints, Cadence, Reading, StationSeries};
use crate::pollutant::{Pollutant, N_POLLUTANTS};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_stations: usize,
    pub days: usize,
    pub seed: u64,
    pub planted: Vec<Pollutant>,
    /// Standard deviation of the multiplicative noise, as a fraction of the signal.
    pub noise_sd: f64,
    /// Per-reading spike probability.
    pub spike_rate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_stations: 5,
            days: 120,
            seed: 42,
            planted: vec![Pollutant::Pm10, Pollutant::Co, Pollutant::O3],
            noise_sd: 0.05,
            spike_rate: 0.01,
        }
    }
}

/// Range of the per-station base level.
fn base_range(p: Pollutant) -> (f64, f64) {
    match p {
        Pollutant::Pm25 => (5.0, 25.0),
        Pollutant::Pm10 => (40.0, 250.0),
        Pollutant::So2 => (2.0, 20.0),
        Pollutant::Nox => (5.0, 30.0),
        Pollutant::Nh3 => (5.0, 40.0),
        Pollutant::Co => (0.4, 4.0),
        Pollutant::O3 => (25.0, 110.0),
    }
}

/// Range of the relative day and hour amplitudes.
const AMP_LO: f64 = 0.25;
const AMP_HI: f64 = 0.3;

/// Hour harmonics of the planted pollutants, in planting order.
const HOUR_HARMONICS: [f64; 4] = [1.0, -1.0, 2.0, -2.0];

/// Fewest days for which every day frequency stays below `P`.
pub const MIN_SYNTH_DAYS: usize = 24;

fn cas(t: f64) -> f64 {
    t.cos() + t.sin()
}

/// Generated series; `clean` holds the noiseless hourly values.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub hourly: Vec<StationSeries>,
    pub daily: Vec<StationSeries>,
    pub clean: Vec<StationSeries>,
}

pub const SYNTH_HOURLY_FILE: &str = "hourly.csv";
pub const SYNTH_DAILY_FILE: &str = "daily.csv";
pub const SYNTH_CLEAN_FILE: &str = "clean.csv";

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_stations == 0 {
            return Err(Error::config("synth.stations", "must be at least 1"));
        }
        if self.days < MIN_SYNTH_DAYS {
            return Err(Error::config("synth.days", format!("must be at least {MIN_SYNTH_DAYS}")));
        }
        if self.planted.is_empty() {
            return Err(Error::config("synth.planted", "must name at least one pollutant"));
        }
        for (i, p) in self.planted.iter().enumerate() {
            if self.planted[..i].contains(p) {
                return Err(Error::config("synth.planted", format!("{p} listed twice")));
            }
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::config("synth.noise_sd", "must be a non-negative number"));
        }
        if !(0.0..=1.0).contains(&self.spike_rate) {
            return Err(Error::config("synth.spike_rate", "must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn generate(&self, breakpoints: &AqiBreakpoints) -> Result<SynthData> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let start: NaiveDateTime = NaiveDate::from_ymd_opt(2020, 1, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .ok_or_else(|| Error::invalid("bad synthetic start date"))?;
        let days = self.days;
        let n = days * 24;
        let planted: Vec<bool> = Pollutant::ALL.iter().map(|p| self.planted.contains(p)).collect();

        let mut out = SynthData {
            hourly: Vec::new(),
            daily: Vec::new(),
            clean: Vec::new(),
        };
        // Unplanted pollutants share one background level across stations.
        let mut background = [0.0; N_POLLUTANTS];
        for p in Pollutant::ALL {
            let (lo, hi) = base_range(p);
            background[p.index()] = rng.random_range(lo..hi);
        }
        let unplanted: Vec<Pollutant> = Pollutant::ALL
            .into_iter()
            .filter(|p| !self.planted.contains(p))
            .collect();
        // Station `s` draws its bases from slot `slots[s]` of `n_stations`
        // equal slices of each range, so stations spread across the bands.
        let mut slots: Vec<usize> = (0..self.n_stations).collect();
        slots.shuffle(&mut rng);
        for s in 0..self.n_stations {
            let id = format!("S{:02}", s + 1);
            let a = rng.random_range(2..=3u32) as f64;
            // (base, day frequency, r_d, hour harmonic, r_h)
            let mut params = [(0.0, 0.0, 0.0, 0.0, 0.0); N_POLLUTANTS];
            for p in Pollutant::ALL {
                let (lo, hi) = base_range(p);
                let u: f64 = rng.random();
                let own = lo + (hi - lo) * (slots[s] as f64 + u) / self.n_stations as f64;
                let rd = rng.random_range(AMP_LO..=AMP_HI) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let rh = rng.random_range(AMP_LO..=AMP_HI);
                params[p.index()] = match self.planted.iter().position(|q| *q == p) {
                    Some(i) => (own, (i + 1) as f64 * a, rd, HOUR_HARMONICS[i % 4], rh),
                    None => {
                        let k = unplanted.iter().position(|q| *q == p).unwrap_or(0);
                        (background[p.index()], (self.planted.len() + 1 + k) as f64 * a + 1.0, rd, 0.0, 0.0)
                    }
                };
            }

            let mut clean = Vec::with_capacity(n);
            let mut noisy = Vec::with_capacity(n);
            for d in 0..days {
                for h in 0..24 {
                    let mut c = [0.0; N_POLLUTANTS];
                    let mut o = [0.0; N_POLLUTANTS];
                    for p in Pollutant::ALL {
                        let (base, freq, rd, m, rh) = params[p.index()];
                        let day_term = cas(TAU * freq * d as f64 / days as f64);
                        let hour_term = cas(TAU * m * h as f64 / 24.0);
                        let v = base * (1.0 + rd * day_term + rh * hour_term);
                        let z: f64 = rng.sample(StandardNormal);
                        let hit = rng.random::<f64>() < self.spike_rate;
                        let size = rng.random_range(0.5..1.5) * base;
                        c[p.index()] = v;
                        o[p.index()] = (v * (1.0 + self.noise_sd * z) + if hit { size } else { 0.0 }).max(0.0);
                    }
                    clean.push(c);
                    noisy.push(o);
                }
            }

            let planted_aqi = |vals: &[f64; N_POLLUTANTS]| -> Result<f64> {
                let mut m: f64 = 0.0;
                for p in &self.planted {
                    m = m.max(breakpoints.sub_index(*p, vals[p.index()])?);
                }
                Ok(m)
            };
            let aqi = clean.iter().map(&planted_aqi).collect::<Result<Vec<f64>>>()?;
            let timestamps: Vec<NaiveDateTime> =
                (0..n).map(|i| start + chrono::Duration::hours(i as i64)).collect();
            let to_series = |vals: &[[f64; N_POLLUTANTS]], cadence, timestamps: Vec<NaiveDateTime>, aqi: &[f64]| {
                StationSeries {
                    station_id: id.clone(),
                    cadence,
                    timestamps,
                    readings: vals.iter().map(|r| r.map(Some)).collect::<Vec<Reading>>(),
                    aqi: aqi.iter().map(|a| Some(*a)).collect(),
                    band: aqi.iter().map(|a| Some(breakpoints.band(*a))).collect(),
                }
            };

            let mut daily_vals = Vec::with_capacity(days);
            for d in 0..days {
                let day = &noisy[d * 24..(d + 1) * 24];
                let mut v = [0.0; N_POLLUTANTS];
                for p in Pollutant::ALL {
                    let j = p.index();
                    v[j] = if planted[j] {
                        (0..=16)
                            .map(|h0| day[h0..h0 + 8].iter().map(|r| r[j]).sum::<f64>() / 8.0)
                            .fold(f64::NEG_INFINITY, f64::max)
                    } else {
                        day.iter().map(|r| r[j]).sum::<f64>() / 24.0
                    };
                }
                daily_vals.push(v);
            }
            let daily_aqi = daily_vals.iter().map(&planted_aqi).collect::<Result<Vec<f64>>>()?;
            let daily_ts: Vec<NaiveDateTime> =
                (0..days).map(|d| start + chrono::Duration::days(d as i64)).collect();

            out.hourly.push(to_series(&noisy, Cadence::Hourly, timestamps.clone(), &aqi));
            out.clean.push(to_series(&clean, Cadence::Hourly, timestamps, &aqi));
            out.daily.push(to_series(&daily_vals, Cadence::Daily, daily_ts, &daily_aqi));
        }
        Ok(out)
    }
}

impl SynthData {
    /// Writes `hourly.csv`, `daily.csv` and `clean.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, series) in [
            (SYNTH_HOURLY_FILE, &self.hourly),
            (SYNTH_DAILY_FILE, &self.daily),
            (SYNTH_CLEAN_FILE, &self.clean),
        ] {
            let mut buf = Vec::new();
            write_station_csv(series, &mut buf)?;
            let path = dir.join(name);
            fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
