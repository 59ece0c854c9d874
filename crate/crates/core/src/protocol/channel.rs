use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phase-insensitive Gaussian channel from Alice to Bob.
///
/// `chi_c` is the added noise referred to the channel input, in shot-noise
/// units. A pure-loss channel has `chi_c = (1-T)/T`; anything above that
/// line is excess noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    t: f64,
    chi_c: f64,
}

impl ChannelModel {
    pub fn new(t: f64, chi_c: f64) -> Result<Self> {
        check_transmittivity(t)?;
        if !(chi_c >= 0.0) || !chi_c.is_finite() {
            return Err(Error::domain(format!("added noise chi_C must be >= 0, got {chi_c}")));
        }
        Ok(Self { t, chi_c })
    }

    /// Channel with excess noise `epsilon` above the pure-loss line.
    pub fn from_excess_noise(t: f64, epsilon: f64) -> Result<Self> {
        Self::new(t, chi_line(t, epsilon)?)
    }

    pub fn from_loss_db(loss_db: f64, epsilon: f64) -> Result<Self> {
        Self::from_excess_noise(transmittivity_from_db(loss_db)?, epsilon)
    }

    pub fn transmittivity(&self) -> f64 {
        self.t
    }

    pub fn chi_c(&self) -> f64 {
        self.chi_c
    }

    /// `ε = χ_C - (1-T)/T`.
    pub fn epsilon(&self) -> f64 {
        self.chi_c - (1.0 - self.t) / self.t
    }

    pub fn loss_db(&self) -> f64 {
        -10.0 * self.t.log10()
    }
}

/// Added noise on the line of constant excess noise: `(1-T)/T + ε`.
pub fn chi_line(t: f64, epsilon: f64) -> Result<f64> {
    check_transmittivity(t)?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("excess noise must be >= 0, got {epsilon}")));
    }
    Ok((1.0 - t) / t + epsilon)
}

/// `T = 10^(-dB/10)`.
pub fn transmittivity_from_db(loss_db: f64) -> Result<f64> {
    if !(loss_db >= 0.0) || !loss_db.is_finite() {
        return Err(Error::domain(format!("loss must be a finite number of dB >= 0, got {loss_db}")));
    }
    Ok(10f64.powf(-loss_db / 10.0))
}

fn check_transmittivity(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("transmittivity must lie in (0, 1], got {t}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chi_line_points() {
        assert_eq!(chi_line(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(chi_line(0.5, 0.0).unwrap(), 1.0);
        assert_eq!(chi_line(0.5, 0.5).unwrap(), 1.5);
        assert!(chi_line(0.0, 0.1).is_err());
        assert!(chi_line(0.5, -0.1).is_err());
    }

    #[test]
    fn loss_conversion() {
        let c = ChannelModel::from_loss_db(10.0, 0.0).unwrap();
        assert!((c.transmittivity() - 0.1).abs() < 1e-15);
        assert!((c.loss_db() - 10.0).abs() < 1e-12);
        assert!(ChannelModel::from_loss_db(-1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_channels() {
        assert!(ChannelModel::new(1.2, 0.0).is_err());
        assert!(ChannelModel::new(0.5, -1.0).is_err());
        assert!(ChannelModel::new(f64::NAN, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn epsilon_round_trips(t in 0.001f64..=1.0, eps in 0.0f64..5.0) {
            let c = ChannelModel::from_excess_noise(t, eps).unwrap();
            prop_assert!((c.epsilon() - eps).abs() <= 1e-12);
            prop_assert!(c.chi_c() >= (1.0 - t) / t - 1e-12);
        }
    }
}
