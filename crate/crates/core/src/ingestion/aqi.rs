//! Sub-index interpolation and banding against CPCB-style breakpoint tables.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pollutant::{Pollutant, N_POLLUTANTS};

pub const AQI_MAX: f64 = 500.0;

/// Breakpoint table shipped with the crate.
pub const BUNDLED_BREAKPOINTS_CSV: &str = include_str!("../../fixtures/cpcb_breakpoints_v1.csv");
/// Band table shipped with the crate.
pub const BUNDLED_BANDS_CSV: &str = include_str!("../../fixtures/cpcb_bands_v1.csv");

/// The six AQI bands, ordered from cleanest to most polluted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AqiBand {
    Good,
    Satisfactory,
    Moderate,
    Poor,
    VeryPoor,
    Severe,
}

impl AqiBand {
    pub const ALL: [AqiBand; 6] = [
        AqiBand::Good,
        AqiBand::Satisfactory,
        AqiBand::Moderate,
        AqiBand::Poor,
        AqiBand::VeryPoor,
        AqiBand::Severe,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            AqiBand::Good => "Good",
            AqiBand::Satisfactory => "Satisfactory",
            AqiBand::Moderate => "Moderate",
            AqiBand::Poor => "Poor",
            AqiBand::VeryPoor => "Very Poor",
            AqiBand::Severe => "Severe",
        }
    }
}

impl fmt::Display for AqiBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AqiBand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .collect::<String>()
            .to_ascii_lowercase();
        AqiBand::ALL
            .into_iter()
            .find(|b| b.name().replace(' ', "").to_ascii_lowercase() == key)
            .ok_or_else(|| Error::invalid(format!("unknown AQI band `{s}`")))
    }
}

/// One linear piece of a pollutant's concentration → sub-index map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub conc_low: f64,
    pub conc_high: f64,
    pub index_low: f64,
    pub index_high: f64,
}

impl Segment {
    fn interpolate(&self, c: f64) -> f64 {
        let t = (c - self.conc_low) / (self.conc_high - self.conc_low);
        self.index_low + t * (self.index_high - self.index_low)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandRange {
    pub aqi_low: f64,
    pub aqi_high: f64,
    pub band: AqiBand,
}

/// Per-pollutant breakpoint segments plus the AQI → band table.
#[derive(Debug, Clone, PartialEq)]
pub struct AqiBreakpoints {
    segments: [Vec<Segment>; N_POLLUTANTS],
    bands: Vec<BandRange>,
}

#[derive(Deserialize)]
struct SegmentRecord {
    pollutant: String,
    conc_low: f64,
    conc_high: f64,
    index_low: f64,
    index_high: f64,
}

#[derive(Deserialize)]
struct BandRecord {
    aqi_low: f64,
    aqi_high: f64,
    band: String,
}

impl AqiBreakpoints {
    /// The bundled CPCB tables.
    pub fn bundled() -> Self {
        Self::from_csv(BUNDLED_BREAKPOINTS_CSV, BUNDLED_BANDS_CSV)
            .expect("bundled breakpoint fixture is valid")
    }

    pub fn from_files(breakpoints: &Path, bands: &Path) -> Result<Self> {
        let b = std::fs::read_to_string(breakpoints).map_err(|e| Error::io(breakpoints, e))?;
        let t = std::fs::read_to_string(bands).map_err(|e| Error::io(bands, e))?;
        Self::from_csv(&b, &t)
    }

    pub fn from_csv(breakpoints_csv: &str, bands_csv: &str) -> Result<Self> {
        let mut segments: [Vec<Segment>; N_POLLUTANTS] = Default::default();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(breakpoints_csv.as_bytes());
        for rec in rdr.deserialize() {
            let rec: SegmentRecord = rec?;
            let p: Pollutant = rec.pollutant.parse()?;
            segments[p.index()].push(Segment {
                conc_low: rec.conc_low,
                conc_high: rec.conc_high,
                index_low: rec.index_low,
                index_high: rec.index_high,
            });
        }
        let mut bands = Vec::new();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(bands_csv.as_bytes());
        for rec in rdr.deserialize() {
            let rec: BandRecord = rec?;
            bands.push(BandRange {
                aqi_low: rec.aqi_low,
                aqi_high: rec.aqi_high,
                band: rec.band.parse()?,
            });
        }
        let table = AqiBreakpoints { segments, bands };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        for p in Pollutant::ALL {
            let segs = &self.segments[p.index()];
            let bad = |m: &str| Error::format("breakpoint table", format!("{p}: {m}"));
            let (first, last) = match (segs.first(), segs.last()) {
                (Some(f), Some(l)) => (f, l),
                _ => return Err(bad("no segments")),
            };
            if first.conc_low != 0.0 || first.index_low != 0.0 || last.index_high != AQI_MAX {
                return Err(bad("index range must cover [0, 500] from zero concentration"));
            }
            for s in segs {
                if !(s.conc_high > s.conc_low) || !(s.index_high > s.index_low) {
                    return Err(bad("segment bounds must be increasing"));
                }
            }
            for w in segs.windows(2) {
                if w[0].conc_high != w[1].conc_low || w[0].index_high != w[1].index_low {
                    return Err(bad("segments must be contiguous"));
                }
            }
        }
        let bad = |m: &str| Error::format("band table", m.to_string());
        if self.bands.len() != 6 {
            return Err(bad("expected exactly six bands"));
        }
        if self.bands[0].aqi_low != 0.0 || self.bands[5].aqi_high != AQI_MAX {
            return Err(bad("bands must cover [0, 500]"));
        }
        for (i, b) in self.bands.iter().enumerate() {
            if b.band != AqiBand::ALL[i] || !(b.aqi_high > b.aqi_low) {
                return Err(bad("bands must be listed in severity order"));
            }
        }
        for w in self.bands.windows(2) {
            if w[0].aqi_high != w[1].aqi_low {
                return Err(bad("bands must be contiguous"));
            }
        }
        Ok(())
    }

    pub fn segments(&self, pollutant: Pollutant) -> &[Segment] {
        &self.segments[pollutant.index()]
    }

    pub fn bands(&self) -> &[BandRange] {
        &self.bands
    }

    /// Piecewise-linear sub-index for one pollutant, saturating at 500.
    pub fn sub_index(&self, pollutant: Pollutant, concentration: f64) -> Result<f64> {
        if !(concentration >= 0.0) {
            return Err(Error::invalid(format!(
                "{pollutant} concentration must be non-negative, got {concentration}"
            )));
        }
        let segs = self.segments(pollutant);
        let seg = segs
            .iter()
            .find(|s| concentration <= s.conc_high)
            .unwrap_or_else(|| segs.last().unwrap());
        Ok(seg.interpolate(concentration).min(AQI_MAX))
    }

    /// Band for an AQI value. Upper edges are inclusive, so 100 is Satisfactory.
    pub fn band(&self, aqi: f64) -> AqiBand {
        let aqi = aqi.clamp(0.0, AQI_MAX);
        self.bands
            .iter()
            .find(|b| aqi <= b.aqi_high)
            .map(|b| b.band)
            .unwrap_or(AqiBand::Severe)
    }
}

/// AQI as the maximum of the seven sub-indices, clamped to [0, 500].
pub fn compute_aqi(
    concentrations: &[f64; N_POLLUTANTS],
    breakpoints: &AqiBreakpoints,
) -> Result<(f64, AqiBand)> {
    let mut aqi = 0.0f64;
    for p in Pollutant::ALL {
        aqi = aqi.max(breakpoints.sub_index(p, concentrations[p.index()])?);
    }
    let aqi = aqi.clamp(0.0, AQI_MAX);
    Ok((aqi, breakpoints.band(aqi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_concentrations_are_good() {
        let bp = AqiBreakpoints::bundled();
        let (aqi, band) = compute_aqi(&[0.0; 7], &bp).unwrap();
        assert_eq!(aqi, 0.0);
        assert_eq!(band, AqiBand::Good);
    }

    #[test]
    fn aqi_is_max_of_sub_indices() {
        let bp = AqiBreakpoints::bundled();
        // PM2.5 30 -> 50, PM10 150 -> 100 + 50*100/150 = 133.33.., O3 80 -> 80.
        let c = [30.0, 150.0, 0.0, 0.0, 0.0, 0.0, 80.0];
        let (aqi, band) = compute_aqi(&c, &bp).unwrap();
        assert!((aqi - (100.0 + 100.0 / 3.0)).abs() < 1e-12);
        assert_eq!(band, AqiBand::Moderate);
    }

    #[test]
    fn knots_map_to_index_high() {
        let bp = AqiBreakpoints::bundled();
        for p in Pollutant::ALL {
            for s in bp.segments(p) {
                // Independent oracle: two-point line through the segment ends.
                let slope = (s.index_high - s.index_low) / (s.conc_high - s.conc_low);
                let expected = s.index_low + slope * (s.conc_high - s.conc_low);
                let got = bp.sub_index(p, s.conc_high).unwrap();
                assert!((got - expected).abs() < 1e-9, "{p} at {}", s.conc_high);
                assert!((got - s.index_high).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn saturates_above_last_segment() {
        let bp = AqiBreakpoints::bundled();
        assert_eq!(bp.sub_index(Pollutant::Pm10, 10_000.0).unwrap(), 500.0);
        let mut c = [0.0; 7];
        c[Pollutant::Co.index()] = 1e6;
        assert_eq!(compute_aqi(&c, &bp).unwrap(), (500.0, AqiBand::Severe));
    }

    #[test]
    fn negative_concentration_is_rejected() {
        let bp = AqiBreakpoints::bundled();
        let mut c = [1.0; 7];
        c[3] = -0.5;
        assert!(compute_aqi(&c, &bp).is_err());
    }

    #[test]
    fn band_edges_are_upper_inclusive() {
        let bp = AqiBreakpoints::bundled();
        assert_eq!(bp.band(0.0), AqiBand::Good);
        assert_eq!(bp.band(45.0), AqiBand::Good);
        assert_eq!(bp.band(50.0), AqiBand::Good);
        assert_eq!(bp.band(50.0001), AqiBand::Satisfactory);
        assert_eq!(bp.band(100.0), AqiBand::Satisfactory);
        assert_eq!(bp.band(300.0), AqiBand::Poor);
        assert_eq!(bp.band(450.0), AqiBand::Severe);
        assert_eq!(bp.band(500.0), AqiBand::Severe);
    }

    #[test]
    fn band_names_parse() {
        for b in AqiBand::ALL {
            assert_eq!(b.name().parse::<AqiBand>().unwrap(), b);
        }
        assert_eq!("VeryPoor".parse::<AqiBand>().unwrap(), AqiBand::VeryPoor);
        assert!("Hazardous".parse::<AqiBand>().is_err());
    }

    #[test]
    fn rejects_gapped_table() {
        let gapped = BUNDLED_BREAKPOINTS_CSV.replace("PM10,50,100,50,100", "PM10,51,100,51,100");
        assert!(AqiBreakpoints::from_csv(&gapped, BUNDLED_BANDS_CSV).is_err());
        let five = BUNDLED_BANDS_CSV.replace("400,500,Severe\n", "");
        assert!(AqiBreakpoints::from_csv(BUNDLED_BREAKPOINTS_CSV, &five).is_err());
    }

    proptest! {
        #[test]
        fn aqi_is_monotone_in_each_concentration(
            base in proptest::array::uniform7(0.0f64..600.0),
            which in 0usize..7,
            bump in 0.0f64..300.0,
        ) {
            let bp = AqiBreakpoints::bundled();
            let (a0, b0) = compute_aqi(&base, &bp).unwrap();
            let mut raised = base;
            raised[which] += bump;
            let (a1, b1) = compute_aqi(&raised, &bp).unwrap();
            prop_assert!(a1 >= a0);
            prop_assert!(b1 >= b0);
        }
    }
}
