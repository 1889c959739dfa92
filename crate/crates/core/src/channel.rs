use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phase-insensitive Gaussian channel: transmittance `T` and excess noise
/// `ξ` referred to the channel input, in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub transmittance: f64,
    pub excess_noise: f64,
}

impl Channel {
    pub fn new(transmittance: f64, excess_noise: f64) -> Result<Self> {
        if !(transmittance > 0.0 && transmittance <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "transmittance must lie in (0, 1], got {transmittance}"
            )));
        }
        if !(excess_noise >= 0.0) || !excess_noise.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "excess noise must be non-negative, got {excess_noise}"
            )));
        }
        Ok(Self {
            transmittance,
            excess_noise,
        })
    }

    /// Standard fibre at 0.2 dB/km.
    pub fn from_distance_km(distance_km: f64, excess_noise: f64) -> Result<Self> {
        if !(distance_km >= 0.0) || !distance_km.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "distance must be non-negative, got {distance_km}"
            )));
        }
        Self::new(transmittance_from_km(distance_km), excess_noise)
    }

    pub fn distance_km(&self) -> f64 {
        km_from_transmittance(self.transmittance)
    }
}

pub fn transmittance_from_km(distance_km: f64) -> f64 {
    10f64.powf(-0.02 * distance_km)
}

pub fn km_from_transmittance(transmittance: f64) -> f64 {
    -50.0 * transmittance.log10() + 0.0 // no -0 at T = 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_round_trip() {
        for d in [0.0, 1.0, 25.0, 50.0, 123.4, 300.0] {
            let t = transmittance_from_km(d);
            assert!((km_from_transmittance(t) - d).abs() < 1e-12);
        }
        assert!((transmittance_from_km(50.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(Channel::new(0.0, 0.01).is_err());
        assert!(Channel::new(1.1, 0.01).is_err());
        assert!(Channel::new(0.5, -0.1).is_err());
        assert!(Channel::from_distance_km(-1.0, 0.0).is_err());
        assert!(Channel::new(1.0, 0.0).is_ok());
    }
}
