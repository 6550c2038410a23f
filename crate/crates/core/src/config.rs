//! JSON description of a complete source and its resolved form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::counting::{calibrate, CalibrationPoint, DetectionConfig, SourceBrightness};
use crate::dispersion::Catalog;
use crate::error::{Error, Result};
use crate::phasecomp::{total_phase_map, CompensatorSpec, Interferometer, PhaseGrid, WaveplateStack};
use crate::phasematch::{energy_residual, idler_wavelength, joint_spectrum, phasematch_temperature, CrystalSpec};
use crate::polstate::{build_state, PolarizationDensityMatrix, SpectralFilter};
use crate::units::{Temperature, Wavelength};

const REFERENCE: &str = include_str!("../data/reference.json");

/// Points across the filter window when averaging the state.
pub const STATE_GRID_POINTS: usize = 401;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WaveplateRef {
    /// `"default"` selects the bundled achromat.
    Named(String),
    Inline(WaveplateStack),
}

impl WaveplateRef {
    pub fn resolve(&self) -> Result<WaveplateStack> {
        match self {
            WaveplateRef::Named(name) if name == "default" || name == "achromat" => Ok(WaveplateStack::achromat()),
            WaveplateRef::Named(name) if name == "none" => Ok(WaveplateStack::vacuum()),
            WaveplateRef::Named(name) => Err(Error::Config(format!("waveplate: unknown stack '{name}'"))),
            WaveplateRef::Inline(stack) => {
                stack.validate().map_err(|e| Error::Config(format!("waveplate: {e}")))?;
                Ok(stack.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompensatorConfig {
    pub length_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_expansion_per_k: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Temperatures {
    /// `null` places the crystal at its phase-matching temperature.
    #[serde(default)]
    pub ktp_c: Option<f64>,
    pub yvo_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub crystal: CrystalSpec,
    pub waveplate: WaveplateRef,
    pub compensator: CompensatorConfig,
    pub temperatures: Temperatures,
    pub filter: SpectralFilter,
    pub detection: DetectionConfig,
    pub brightness: SourceBrightness,
    /// When present, overrides `brightness.pairs_per_mw` and both path
    /// efficiencies so the model reproduces this operating point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationPoint>,
    #[serde(default = "default_balance")]
    pub balance: f64,
}

fn default_balance() -> f64 {
    0.5
}

impl SourceConfig {
    pub fn reference() -> Self {
        Self::from_json(REFERENCE).expect("bundled reference config is valid")
    }

    pub fn reference_json() -> &'static str {
        REFERENCE
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SourceConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: Error| Error::Config(format!("{name}: {e}"));
        Wavelength::from_nm(self.pump_nm).map_err(|e| field("pump_nm", e))?;
        Wavelength::from_nm(self.signal_nm).map_err(|e| field("signal_nm", e))?;
        if self.signal_nm <= self.pump_nm {
            return Err(Error::Config("signal_nm must be longer than pump_nm".into()));
        }
        self.crystal.validate().map_err(|e| field("crystal", e))?;
        self.waveplate.resolve()?;
        let c = &self.compensator;
        if !(c.length_mm.is_finite() && c.length_mm >= 0.0) {
            return Err(Error::Config("compensator.length_mm must be >= 0".into()));
        }
        if let Some(a) = c.thermal_expansion_per_k {
            if !a.is_finite() {
                return Err(Error::Config("compensator.thermal_expansion_per_k must be finite".into()));
            }
        }
        if let Some(t) = self.temperatures.ktp_c {
            Temperature::try_celsius(t).map_err(|e| field("temperatures.ktp_c", e))?;
        }
        Temperature::try_celsius(self.temperatures.yvo_c).map_err(|e| field("temperatures.yvo_c", e))?;
        self.filter.validate()?;
        self.detection.validate()?;
        self.brightness.validate()?;
        if !(0.0..=1.0).contains(&self.balance) {
            return Err(Error::Config("balance must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Derives the idler, crystal temperature and calibrated rates.
    pub fn resolve(&self, catalog: &Catalog) -> Result<Source> {
        self.validate()?;
        let pump = Wavelength::from_nm(self.pump_nm)?;
        let signal = Wavelength::from_nm(self.signal_nm)?;
        let idler = idler_wavelength(pump, signal)?;
        let crystal_temperature = match self.temperatures.ktp_c {
            Some(t) => Temperature::celsius(t),
            None => phasematch_temperature(catalog, pump, signal, &self.crystal)?,
        };
        let mut compensator = CompensatorSpec::yvo4(self.compensator.length_mm, Temperature::celsius(self.temperatures.yvo_c))?;
        if let Some(a) = self.compensator.thermal_expansion_per_k {
            compensator.thermal_expansion_per_k = a;
        }
        let interferometer = Interferometer {
            pump,
            crystal: self.crystal.clone(),
            crystal_temperature,
            waveplate: self.waveplate.resolve()?,
            compensator,
        };
        let mut brightness = self.brightness;
        let mut detection = self.detection;
        if let Some(point) = &self.calibration {
            let cal = calibrate(point, &self.detection).map_err(|e| Error::Config(format!("calibration: {e}")))?;
            brightness.pairs_per_mw = cal.pairs_per_mw;
            detection.eta_s = cal.eta_s;
            detection.eta_i = cal.eta_i;
        }
        Ok(Source {
            signal,
            idler,
            interferometer,
            filter: self.filter,
            detection,
            brightness,
            balance: self.balance,
        })
    }
}

/// A configuration with every derived quantity filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub signal: Wavelength,
    pub idler: Wavelength,
    pub interferometer: Interferometer,
    pub filter: SpectralFilter,
    pub detection: DetectionConfig,
    pub brightness: SourceBrightness,
    pub balance: f64,
}

impl Source {
    pub fn pump(&self) -> Wavelength {
        self.interferometer.pump
    }

    pub fn energy_residual(&self) -> f64 {
        energy_residual(self.pump(), self.signal, self.idler)
    }

    /// Signal grid spanning the filter pass-band (twice its FWHM for a
    /// Gaussian), used for spectral averaging.
    pub fn state_grid(&self) -> Result<Vec<Wavelength>> {
        let half = match self.filter.shape {
            crate::polstate::FilterShape::Tophat => 0.5 * self.filter.fwhm_nm,
            crate::polstate::FilterShape::Gaussian => 2.0 * self.filter.fwhm_nm,
        };
        crate::phasecomp::linspace_nm(self.filter.center_nm, half, STATE_GRID_POINTS)
    }

    /// Polarization state with the compensator `yvo_detune_k` away from its
    /// set point. The phase reference is the set-point phase at the filter
    /// centre, so a detuning shows up as a global phase rotation of the state.
    pub fn state(&self, catalog: &Catalog, yvo_detune_k: f64) -> Result<PolarizationDensityMatrix> {
        let grid = self.state_grid()?;
        let setup = &self.interferometer;
        let centre_signal = Wavelength::from_nm(self.filter.center_nm)?;
        let reference = setup.total_diagonal(catalog, centre_signal)?;
        let detuned = setup.with_compensator(setup.compensator.at_temperature(setup.compensator.temperature.offset(yvo_detune_k)));
        let mut map = total_phase_map(catalog, &detuned, &PhaseGrid::Diagonal { signal: grid.clone() }, false)?;
        map.phase_rad.iter_mut().for_each(|p| *p -= reference);
        map.offset_subtracted = true;
        let spectrum = joint_spectrum(catalog, setup.pump, setup.crystal_temperature, &setup.crystal, &grid)?;
        build_state(&map, &spectrum, &self.filter, self.balance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polstate::BellTarget;

    #[test]
    fn reference_config_resolves() {
        let cat = Catalog::builtin();
        let src = SourceConfig::reference().resolve(cat).unwrap();
        assert!((src.idler.nm() - 839.4970945589012).abs() < 1e-9);
        assert!(src.energy_residual().abs() < 1e-12);
        let t = src.interferometer.crystal_temperature.as_celsius();
        assert!((t - 124.84380886275352).abs() < 1e-4, "{t}");
        assert!(src.detection.eta_s > 0.0 && src.detection.eta_s < 1.0);
    }

    #[test]
    fn reference_state_and_detuning() {
        let cat = Catalog::builtin();
        let src = SourceConfig::reference().resolve(cat).unwrap();
        let rho = src.state(cat, 0.0).unwrap();
        assert!(rho.coherence().norm() * 2.0 >= 0.99);
        assert!(rho.fidelity(BellTarget::PhiPlus) >= 0.99);
        let flipped = src.state(cat, 2.4).unwrap();
        assert!(flipped.fidelity(BellTarget::PhiPlus) < 0.01);
        assert!(flipped.fidelity(BellTarget::PhiMinus) > 0.98);
    }

    #[test]
    fn field_level_errors() {
        let bad = SourceConfig::reference_json().replace("\"length_mm\": 18.5", "\"length_mm\": -1");
        let err = SourceConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("compensator.length_mm"), "{err}");
        let bad = SourceConfig::reference_json().replace("\"peak_transmission\": 0.9", "\"peak_transmission\": 1.5");
        assert!(SourceConfig::from_json(&bad).unwrap_err().to_string().contains("filter.peak_transmission"));
        let bad = SourceConfig::reference_json().replacen('{', "{\"bogus\": 1,", 1);
        assert!(SourceConfig::from_json(&bad).unwrap_err().to_string().contains("bogus"));
    }

    #[test]
    fn inline_waveplate_and_round_trip() {
        let mut cfg = SourceConfig::reference();
        cfg.waveplate = WaveplateRef::Inline(WaveplateStack::achromat().with_tilt(3.0));
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(SourceConfig::from_json(&text).unwrap(), cfg);
        cfg.waveplate = WaveplateRef::Named("quartz".into());
        assert!(cfg.validate().is_err());
    }
}
