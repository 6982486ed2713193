use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The seven measured pollutants, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pollutant {
    Pm25,
    Pm10,
    So2,
    Nox,
    Nh3,
    Co,
    O3,
}

pub const N_POLLUTANTS: usize = 7;

impl Pollutant {
    pub const ALL: [Pollutant; N_POLLUTANTS] = [
        Pollutant::Pm25,
        Pollutant::Pm10,
        Pollutant::So2,
        Pollutant::Nox,
        Pollutant::Nh3,
        Pollutant::Co,
        Pollutant::O3,
    ];

    /// Column header used in station CSV files.
    pub fn header(self) -> &'static str {
        match self {
            Pollutant::Pm25 => "PM2.5",
            Pollutant::Pm10 => "PM10",
            Pollutant::So2 => "SO2",
            Pollutant::Nox => "NOx",
            Pollutant::Nh3 => "NH3",
            Pollutant::Co => "CO",
            Pollutant::O3 => "O3",
        }
    }

    /// Position in [`Pollutant::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pollutant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.header())
    }
}

impl FromStr for Pollutant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Pollutant::ALL
            .into_iter()
            .find(|p| p.header().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown pollutant `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_roundtrip() {
        for p in Pollutant::ALL {
            assert_eq!(p.header().parse::<Pollutant>().unwrap(), p);
            assert_eq!(Pollutant::ALL[p.index()], p);
        }
        assert!("PM1".parse::<Pollutant>().is_err());
    }
}
