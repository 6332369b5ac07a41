use alloc::format;

use super::ssh::HBAR;
use crate::{Error, Result};

/// Monochromatic drive `E(t) = ℰ(t) cos(ωt)` with a Gaussian turn-on.
///
/// The envelope follows `E₀ exp(-(t - t_on)² / 2σ²)` before `t_on` and holds
/// at `E₀` afterwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserPulse {
    /// Photon energy `ħω` in eV.
    pub photon_energy: f64,
    /// Peak field amplitude in V/Å.
    pub amplitude: f64,
    /// Time (fs) at which the envelope reaches its plateau.
    pub t_on: f64,
    /// Gaussian width σ (fs) of the turn-on.
    pub width: f64,
}

impl LaserPulse {
    pub fn new(photon_energy: f64, amplitude: f64, t_on: f64, width: f64) -> Result<Self> {
        let pulse = Self {
            photon_energy,
            amplitude,
            t_on,
            width,
        };
        pulse.validate()?;
        Ok(pulse)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.photon_energy.is_finite() && self.photon_energy > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "photon energy must be positive, got {}",
                self.photon_energy
            )));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "field amplitude must be nonnegative, got {}",
                self.amplitude
            )));
        }
        if !(self.t_on.is_finite() && self.t_on >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "turn-on time must be nonnegative, got {}",
                self.t_on
            )));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "turn-on width must be positive, got {}",
                self.width
            )));
        }
        Ok(())
    }

    /// Angular frequency in rad/fs.
    pub fn angular_frequency(&self) -> f64 {
        self.photon_energy / HBAR
    }

    pub fn envelope(&self, t: f64) -> f64 {
        if t >= self.t_on {
            self.amplitude
        } else {
            let x = (t - self.t_on) / self.width;
            self.amplitude * (-0.5 * x * x).exp()
        }
    }

    pub fn field(&self, t: f64) -> f64 {
        self.envelope(t) * (self.angular_frequency() * t).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_is_bounded_and_monotone() {
        let pulse = LaserPulse::new(4.08, 8.7e-3, 300.0, 100.0).unwrap();
        let mut last = 0.0;
        for i in 0..=600 {
            let t = i as f64;
            let e = pulse.envelope(t);
            assert!((0.0..=pulse.amplitude).contains(&e));
            assert!(e >= last);
            last = e;
        }
        assert_eq!(pulse.envelope(300.0), pulse.amplitude);
        assert!(pulse.field(1000.0).abs() <= pulse.amplitude);
    }

    #[test]
    fn rejects_bad_width() {
        assert!(LaserPulse::new(4.0, 1e-3, 10.0, 0.0).is_err());
    }
}
