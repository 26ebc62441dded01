//! Large-scale path loss. Every model yields an amplitude gain `G`; the power
//! loss of the path is `1 / G^2`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::DEFAULT_PROPAGATION_VELOCITY;
use crate::units::{db_to_linear, linear_to_db};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PathLossModel {
    /// `G^2 = (lambda / 4 pi)^2 d^-eta`.
    FreeSpace { exponent: f64 },
    /// Free space with log-normal shadowing, `10 log10(gamma) ~ N(0, sigma^2)`.
    FreeSpaceShadowed {
        exponent: f64,
        /// Shadowing variance in dB^2.
        shadowing_variance: f64,
    },
    /// `1/G^2 = L0 (d/d0)^eta1` for `d <= d0`, `L0 (d/d0)^eta2` beyond.
    TwoSlope {
        reference_distance: f64,
        /// Linear power ratio.
        reference_loss: f64,
        exponent_near: f64,
        exponent_far: f64,
    },
}

impl PathLossModel {
    pub fn two_slope_db(
        reference_distance: f64,
        reference_loss_db: f64,
        exponent_near: f64,
        exponent_far: f64,
    ) -> Self {
        PathLossModel::TwoSlope {
            reference_distance,
            reference_loss: db_to_linear(reference_loss_db),
            exponent_near,
            exponent_far,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, PathLossModel::FreeSpaceShadowed { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathLossSpec {
    pub model: PathLossModel,
    pub carrier_frequency: f64,
    pub propagation_velocity: f64,
    /// Path length in meters. Links fill this in from device coordinates when unset.
    pub distance: Option<f64>,
}

impl PathLossSpec {
    pub fn new(model: PathLossModel) -> Self {
        PathLossSpec {
            model,
            carrier_frequency: f64::NAN,
            propagation_velocity: DEFAULT_PROPAGATION_VELOCITY,
            distance: None,
        }
    }

    pub fn with_carrier(mut self, carrier_frequency: f64) -> Self {
        self.carrier_frequency = carrier_frequency;
        self
    }

    pub fn with_distance(mut self, distance: f64) -> Self {
        self.distance = Some(distance);
        self
    }

    pub fn carrier_wavelength(&self) -> f64 {
        self.propagation_velocity / self.carrier_frequency
    }

    fn distance(&self) -> Result<f64> {
        match self.distance {
            Some(d) if d > 0.0 && d.is_finite() => Ok(d),
            Some(d) => Err(Error::invalid("distance", format!("must be > 0, got {d}"))),
            None => Err(Error::MissingState("path loss distance is not set".into())),
        }
    }

    fn wavelength(&self) -> Result<f64> {
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(Error::invalid(
                "carrier_frequency",
                format!("must be > 0, got {}", self.carrier_frequency),
            ));
        }
        if !(self.propagation_velocity > 0.0) {
            return Err(Error::invalid(
                "propagation_velocity",
                format!("must be > 0, got {}", self.propagation_velocity),
            ));
        }
        Ok(self.carrier_wavelength())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRealization {
    pub amplitude_gain: f64,
}

impl GainRealization {
    pub fn from_gain(amplitude_gain: f64) -> Self {
        GainRealization { amplitude_gain }
    }

    pub fn from_power_loss_db(loss_db: f64) -> Self {
        GainRealization {
            amplitude_gain: 10f64.powf(-loss_db / 20.0),
        }
    }

    /// `10 log10(1 / G^2)`.
    pub fn power_loss_db(&self) -> f64 {
        -20.0 * self.amplitude_gain.log10()
    }
}

fn check_exponent(eta: f64, name: &'static str) -> Result<()> {
    if eta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {eta}")))
    }
}

fn free_space_loss_db(spec: &PathLossSpec, exponent: f64) -> Result<f64> {
    check_exponent(exponent, "path_loss_exponent")?;
    let lambda = spec.wavelength()?;
    let d = spec.distance()?;
    // 1/G^2 = (4 pi / lambda)^2 d^eta
    Ok(20.0 * (4.0 * PI / lambda).log10() + exponent * 10.0 * d.log10())
}

pub fn realize_fspl(spec: &PathLossSpec) -> Result<GainRealization> {
    match spec.model {
        PathLossModel::FreeSpace { exponent } => {
            Ok(GainRealization::from_power_loss_db(free_space_loss_db(spec, exponent)?))
        }
        _ => Err(Error::invalid("model", "expected free-space model")),
    }
}

pub fn realize_fspl_lns<R: Rng + ?Sized>(spec: &PathLossSpec, rng: &mut R) -> Result<GainRealization> {
    match spec.model {
        PathLossModel::FreeSpaceShadowed {
            exponent,
            shadowing_variance,
        } => {
            if !(shadowing_variance >= 0.0) {
                return Err(Error::invalid(
                    "shadowing_variance",
                    format!("must be >= 0, got {shadowing_variance}"),
                ));
            }
            let base = free_space_loss_db(spec, exponent)?;
            let z: f64 = StandardNormal.sample(rng);
            // gamma multiplies G^2, so it subtracts from the loss in dB
            let shadow_db = shadowing_variance.sqrt() * z;
            Ok(GainRealization::from_power_loss_db(base - shadow_db))
        }
        _ => Err(Error::invalid("model", "expected free-space with shadowing model")),
    }
}

pub fn realize_two_slope(spec: &PathLossSpec) -> Result<GainRealization> {
    match spec.model {
        PathLossModel::TwoSlope {
            reference_distance,
            reference_loss,
            exponent_near,
            exponent_far,
        } => {
            if !(reference_distance > 0.0) {
                return Err(Error::invalid(
                    "reference_distance",
                    format!("must be > 0, got {reference_distance}"),
                ));
            }
            if !(reference_loss > 0.0) {
                return Err(Error::invalid(
                    "reference_loss",
                    format!("must be > 0, got {reference_loss}"),
                ));
            }
            check_exponent(exponent_near, "exponent_near")?;
            check_exponent(exponent_far, "exponent_far")?;
            let d = spec.distance()?;
            let eta = if d <= reference_distance {
                exponent_near
            } else {
                exponent_far
            };
            let loss_db = linear_to_db(reference_loss) + eta * 10.0 * (d / reference_distance).log10();
            Ok(GainRealization::from_power_loss_db(loss_db))
        }
        _ => Err(Error::invalid("model", "expected two-slope model")),
    }
}

/// Realizes whichever model `spec` carries.
pub fn realize<R: Rng + ?Sized>(spec: &PathLossSpec, rng: &mut R) -> Result<GainRealization> {
    match spec.model {
        PathLossModel::FreeSpace { .. } => realize_fspl(spec),
        PathLossModel::FreeSpaceShadowed { .. } => realize_fspl_lns(spec, rng),
        PathLossModel::TwoSlope { .. } => realize_two_slope(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn fspl(fc: f64, d: f64, eta: f64) -> PathLossSpec {
        PathLossSpec::new(PathLossModel::FreeSpace { exponent: eta })
            .with_carrier(fc)
            .with_distance(d)
    }

    #[test]
    fn friis_examples() {
        let g = realize_fspl(&fspl(3e8, 1.0, 2.0)).unwrap();
        assert!((1.0 / g.amplitude_gain.powi(2) - (4.0 * PI).powi(2)).abs() < 1e-9);
        assert!((g.power_loss_db() - 21.984_197_280_441_92).abs() < 1e-9);

        let g = realize_fspl(&fspl(2.4e9, 100.0, 2.0)).unwrap();
        assert!((g.power_loss_db() - 80.05).abs() < 0.01);

        let near = realize_fspl(&fspl(2.4e9, 50.0, 2.0)).unwrap().power_loss_db();
        let far = realize_fspl(&fspl(2.4e9, 100.0, 2.0)).unwrap().power_loss_db();
        assert!((far - near - 6.020_599_913_279_624).abs() < 1e-9);
    }

    #[test]
    fn fspl_is_monotone_and_deterministic() {
        let mut prev = f64::INFINITY;
        for d in [1.0, 2.0, 5.0, 10.0, 100.0, 1000.0] {
            let g = realize_fspl(&fspl(5e9, d, 3.0)).unwrap().amplitude_gain;
            assert!(g < prev);
            assert_eq!(g, realize_fspl(&fspl(5e9, d, 3.0)).unwrap().amplitude_gain);
            prev = g;
        }
    }

    #[test]
    fn two_slope_examples() {
        let spec = |d: f64| PathLossSpec::new(PathLossModel::two_slope_db(10.0, 80.0, 2.0, 4.0)).with_distance(d);
        assert!((realize_two_slope(&spec(10.0)).unwrap().power_loss_db() - 80.0).abs() < 1e-9);
        assert!((realize_two_slope(&spec(100.0)).unwrap().power_loss_db() - 120.0).abs() < 1e-9);
        assert!((realize_two_slope(&spec(1.0)).unwrap().power_loss_db() - 60.0).abs() < 1e-9);
        // continuity at d0 from both sides
        let below = realize_two_slope(&spec(10.0 * (1.0 - 1e-13))).unwrap().power_loss_db();
        let above = realize_two_slope(&spec(10.0 * (1.0 + 1e-13))).unwrap().power_loss_db();
        assert!((below - above).abs() < 1e-10);
    }

    #[test]
    fn shadowing_zero_variance_equals_fspl() {
        let spec = PathLossSpec::new(PathLossModel::FreeSpaceShadowed {
            exponent: 2.0,
            shadowing_variance: 0.0,
        })
        .with_carrier(2.4e9)
        .with_distance(100.0);
        let g = realize_fspl_lns(&spec, &mut substream(1, "lns")).unwrap();
        let f = realize_fspl(&fspl(2.4e9, 100.0, 2.0)).unwrap();
        assert!((g.amplitude_gain / f.amplitude_gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shadowing_statistics() {
        let spec = PathLossSpec::new(PathLossModel::FreeSpaceShadowed {
            exponent: 2.0,
            shadowing_variance: 64.0,
        })
        .with_carrier(2.4e9)
        .with_distance(100.0);
        let base = realize_fspl(&fspl(2.4e9, 100.0, 2.0)).unwrap().power_loss_db();
        let mut rng = substream(2, "lns");
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| realize_fspl_lns(&spec, &mut rng).unwrap().power_loss_db() - base)
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.1);
        assert!((7.8..=8.2).contains(&var.sqrt()));
        assert!((var / 64.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn invalid_specs() {
        assert!(realize_fspl(&fspl(2.4e9, 0.0, 2.0)).is_err());
        assert!(realize_fspl(&fspl(-1.0, 10.0, 2.0)).is_err());
        let no_distance = PathLossSpec::new(PathLossModel::FreeSpace { exponent: 2.0 }).with_carrier(1e9);
        assert!(matches!(realize_fspl(&no_distance), Err(Error::MissingState(_))));
        let bad_ref = PathLossSpec::new(PathLossModel::TwoSlope {
            reference_distance: 0.0,
            reference_loss: 1.0,
            exponent_near: 2.0,
            exponent_far: 3.0,
        })
        .with_distance(1.0);
        assert!(realize_two_slope(&bad_ref).is_err());
        assert!(realize_two_slope(&fspl(1e9, 1.0, 2.0)).is_err());
    }

    #[test]
    fn gain_and_loss_are_consistent() {
        let g = GainRealization::from_power_loss_db(86.42);
        assert!((g.power_loss_db() - 86.42).abs() < 1e-12);
        assert!((GainRealization::from_gain(0.1).power_loss_db() - 20.0).abs() < 1e-12);
    }
}
