//! Strictly positive SI quantities used as model inputs.
//!
//! Public inputs are always meters and hertz. Each model converts to its own
//! native units (km, MHz, GHz) at the point of use.

use std::fmt;

use crate::error::{ensure_positive, Result};

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier frequency, stored in Hz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Frequency(f64);

impl Frequency {
    pub fn from_hz(hz: f64) -> Result<Self> {
        ensure_positive("frequency", hz).map(Self)
    }

    pub fn from_mhz(mhz: f64) -> Result<Self> {
        Self::from_hz(mhz * 1e6)
    }

    pub fn from_ghz(ghz: f64) -> Result<Self> {
        Self::from_hz(ghz * 1e9)
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    pub fn mhz(self) -> f64 {
        self.0 / 1e6
    }

    pub fn ghz(self) -> f64 {
        self.0 / 1e9
    }

    /// Free-space wavelength in meters.
    pub fn wavelength_m(self) -> f64 {
        SPEED_OF_LIGHT / self.0
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} MHz", self.mhz())
    }
}

/// Link distance, stored in meters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Distance(f64);

impl Distance {
    pub fn from_m(m: f64) -> Result<Self> {
        ensure_positive("distance", m).map(Self)
    }

    pub fn from_km(km: f64) -> Result<Self> {
        Self::from_m(km * 1e3)
    }

    pub fn m(self) -> f64 {
        self.0
    }

    pub fn km(self) -> f64 {
        self.0 / 1e3
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} m", self.0)
    }
}

/// dBm to milliwatts.
#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Milliwatts to dBm.
#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_positive_and_non_finite() {
        assert!(matches!(
            Distance::from_m(0.0),
            Err(Error::NonPositive { .. })
        ));
        assert!(matches!(
            Distance::from_m(-3.0),
            Err(Error::NonPositive { .. })
        ));
        assert!(matches!(
            Frequency::from_hz(f64::NAN),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            Frequency::from_hz(f64::INFINITY),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn carrier_conversions() {
        let f = Frequency::from_mhz(1899.0).unwrap();
        assert_eq!(f.hz(), 1.899e9);
        assert_eq!(f.ghz(), 1.899);
        assert_eq!(Distance::from_km(2.47).unwrap().m(), 2470.0);
    }

    proptest! {
        #[test]
        fn distance_round_trip(m in 1e-3f64..1e7) {
            let d = Distance::from_m(m).unwrap();
            let back = Distance::from_km(d.km()).unwrap();
            prop_assert!((back.m() - m).abs() <= 4.0 * f64::EPSILON * m);
        }

        #[test]
        fn frequency_round_trip(hz in 1e3f64..1e12) {
            let f = Frequency::from_hz(hz).unwrap();
            let via_mhz = Frequency::from_mhz(f.mhz()).unwrap();
            let via_ghz = Frequency::from_ghz(f.ghz()).unwrap();
            prop_assert!((via_mhz.hz() - hz).abs() <= 4.0 * f64::EPSILON * hz);
            prop_assert!((via_ghz.hz() - hz).abs() <= 4.0 * f64::EPSILON * hz);
        }

        #[test]
        fn power_round_trip(dbm in -150f64..40.0) {
            prop_assert!((mw_to_dbm(dbm_to_mw(dbm)) - dbm).abs() < 1e-11);
        }
    }
}
