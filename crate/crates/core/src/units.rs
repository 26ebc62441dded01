//! Logarithmic unit conversions.

use serde::{Deserialize, Serialize};

/// Unit of a power quantity passed to a setter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerUnit {
    Watts,
    #[serde(rename = "dBm")]
    DBm,
}

/// Unit of a ratio (e.g. SNR) passed to a setter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioUnit {
    Linear,
    #[serde(rename = "dB")]
    DB,
}

impl RatioUnit {
    pub fn to_linear(self, value: f64) -> f64 {
        match self {
            RatioUnit::Linear => value,
            RatioUnit::DB => db_to_linear(value),
        }
    }
}

impl PowerUnit {
    pub fn to_watts(self, value: f64) -> f64 {
        match self {
            PowerUnit::Watts => value,
            PowerUnit::DBm => dbm_to_watts(value),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1000.0).log10()
}

/// Noise power spectral density in dBm/Hz to noise energy per symbol (J).
pub fn psd_from_dbm_hz(dbm_per_hz: f64) -> f64 {
    dbm_to_watts(dbm_per_hz)
}

/// Inverse of [`psd_from_dbm_hz`].
pub fn psd_to_dbm_hz(joules: f64) -> f64 {
    watts_to_dbm(joules)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_conversions() {
        assert!((psd_from_dbm_hz(-174.0) / 3.981_071_705_534_97e-21 - 1.0).abs() < 1e-12);
        assert!((psd_from_dbm_hz(-30.0) - 1e-6).abs() < 1e-18);
        assert!((psd_from_dbm_hz(0.0) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn dbm_is_milliwatt_referenced() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
        assert!((RatioUnit::DB.to_linear(10.0) - 10.0).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn psd_round_trip(v in -250.0f64..50.0) {
            let back = psd_to_dbm_hz(psd_from_dbm_hz(v));
            proptest::prop_assert!((back - v).abs() < 1e-9);
        }
    }
}
