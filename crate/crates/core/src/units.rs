//! Vacuum wavelength and temperature newtypes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum wavelength, stored in nanometres. Always finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Wavelength(f64);

impl Wavelength {
    pub fn from_nm(nm: f64) -> Result<Self> {
        if nm.is_finite() && nm > 0.0 {
            Ok(Wavelength(nm))
        } else {
            Err(Error::domain(format!("wavelength must be finite and > 0 nm, got {nm}")))
        }
    }

    /// Panicking constructor for literals known to be valid.
    pub fn nm_const(nm: f64) -> Self {
        Self::from_nm(nm).expect("invalid wavelength literal")
    }

    pub fn nm(self) -> f64 {
        self.0
    }

    pub fn um(self) -> f64 {
        self.0 * 1e-3
    }

    pub fn meters(self) -> f64 {
        self.0 * 1e-9
    }
}

impl TryFrom<f64> for Wavelength {
    type Error = Error;

    fn try_from(nm: f64) -> Result<Self> {
        Wavelength::from_nm(nm)
    }
}

impl From<Wavelength> for f64 {
    fn from(w: Wavelength) -> f64 {
        w.0
    }
}

impl fmt::Display for Wavelength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} nm", self.0)
    }
}

/// Temperature in degrees Celsius.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub fn celsius(c: f64) -> Self {
        assert!(c.is_finite(), "temperature must be finite");
        Temperature(c)
    }

    pub fn try_celsius(c: f64) -> Result<Self> {
        if c.is_finite() {
            Ok(Temperature(c))
        } else {
            Err(Error::domain("temperature must be finite"))
        }
    }

    pub fn as_celsius(self) -> f64 {
        self.0
    }

    pub fn offset(self, delta_k: f64) -> Self {
        Temperature::celsius(self.0 + delta_k)
    }
}

impl TryFrom<f64> for Temperature {
    type Error = Error;

    fn try_from(c: f64) -> Result<Self> {
        Temperature::try_celsius(c)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> f64 {
        t.0
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} °C", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_wavelengths() {
        assert!(Wavelength::from_nm(0.0).is_err());
        assert!(Wavelength::from_nm(-3.0).is_err());
        assert!(Wavelength::from_nm(f64::NAN).is_err());
        assert_eq!(Wavelength::from_nm(784.0).unwrap().um(), 0.784);
    }

    #[test]
    fn deserialization_validates() {
        assert!(serde_json::from_str::<Wavelength>("-1.0").is_err());
        let w: Wavelength = serde_json::from_str("405.4").unwrap();
        assert_eq!(w.nm(), 405.4);
    }
}
