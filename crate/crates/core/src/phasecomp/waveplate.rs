use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dispersion::{Axis, Catalog, MaterialName};
use crate::error::{Error, Result};
use crate::units::{Temperature, Wavelength};

const ACHROMAT: &str = include_str!("../../data/waveplate_achromat.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveplateLayer {
    pub material: MaterialName,
    pub thickness_um: f64,
    /// +1 when the layer's slow axis lies along the stack axis, -1 when crossed.
    pub fast_axis_alignment: i8,
}

/// A stack of birefringent plates acting as a single retarder.
///
/// Tilting the stack about its optic axis is modeled as a per-layer
/// effective-thickness factor `1/cos θ_int`, where `θ_int` is the internal
/// refraction angle computed with the layer's ordinary index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveplateStack {
    pub layers: Vec<WaveplateLayer>,
    #[serde(default)]
    pub tilt_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl WaveplateStack {
    /// The bundled MgF₂/quartz achromatic quarter-wave stack.
    pub fn achromat() -> Self {
        Self::from_json(ACHROMAT).expect("bundled waveplate JSON is valid")
    }

    /// A single isotropic "layer": no retardation at any wavelength.
    pub fn vacuum() -> Self {
        WaveplateStack {
            layers: vec![WaveplateLayer {
                material: MaterialName::Vacuum,
                thickness_um: 1.0,
                fast_axis_alignment: 1,
            }],
            tilt_deg: 0.0,
            provenance: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let stack: WaveplateStack = serde_json::from_str(text)?;
        stack.validate()?;
        Ok(stack)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn with_tilt(mut self, tilt_deg: f64) -> Self {
        self.tilt_deg = tilt_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("waveplate stack needs at least one layer".into()));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            if !(layer.thickness_um.is_finite() && layer.thickness_um > 0.0) {
                return Err(Error::Config(format!("waveplate layer {k}: thickness_um must be > 0")));
            }
            if layer.fast_axis_alignment.abs() != 1 {
                return Err(Error::Config(format!(
                    "waveplate layer {k}: fast_axis_alignment must be +1 or -1"
                )));
            }
        }
        if !(self.tilt_deg.is_finite() && self.tilt_deg.abs() < 90.0) {
            return Err(Error::Config("waveplate tilt must be finite and below 90°".into()));
        }
        Ok(())
    }

    /// Single-pass retardation Γ(λ) in rad.
    pub fn retardation(&self, catalog: &Catalog, wavelength: Wavelength) -> Result<f64> {
        let mut total = 0.0;
        for layer in &self.layers {
            let reference = self.reference_temperature(catalog, layer.material)?;
            let dn = catalog.retarder_birefringence(layer.material, wavelength, reference)?;
            if dn == 0.0 {
                continue;
            }
            let thickness = layer.thickness_um * self.tilt_factor(catalog, layer, wavelength, reference)?;
            total += f64::from(layer.fast_axis_alignment) * 2.0 * PI * dn * thickness / wavelength.um();
        }
        Ok(total)
    }

    fn tilt_factor(
        &self,
        catalog: &Catalog,
        layer: &WaveplateLayer,
        wavelength: Wavelength,
        temperature: Temperature,
    ) -> Result<f64> {
        if self.tilt_deg == 0.0 {
            return Ok(1.0);
        }
        let axis = match layer.material.birefringent_axes() {
            Some((_, fast)) => fast,
            None => Axis::Isotropic,
        };
        let n = catalog.index(layer.material, axis, wavelength, temperature)?;
        let internal = (self.tilt_deg.to_radians().sin() / n).asin();
        Ok(1.0 / internal.cos())
    }

    fn reference_temperature(&self, catalog: &Catalog, material: MaterialName) -> Result<Temperature> {
        let axis = material.birefringent_axes().map(|(s, _)| s).unwrap_or(Axis::Isotropic);
        Ok(Temperature::celsius(catalog.model(material, axis)?.reference_temperature_c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn nm(x: f64) -> Wavelength {
        Wavelength::from_nm(x).unwrap()
    }

    #[test]
    fn vacuum_layer_has_no_retardation() {
        let cat = Catalog::builtin();
        assert_eq!(WaveplateStack::vacuum().retardation(cat, nm(800.0)).unwrap(), 0.0);
    }

    #[test]
    fn calibrated_achromat_reproduces_measured_retardations() {
        let cat = Catalog::builtin();
        let stack = WaveplateStack::achromat();
        let target = 0.93 * FRAC_PI_2;
        for l in [785.0, 850.0] {
            let g = stack.retardation(cat, nm(l)).unwrap();
            assert!((g / target - 1.0).abs() < 0.03, "{l}: {g}");
        }
        let g405 = stack.retardation(cat, nm(405.4)).unwrap();
        assert!((g405 / (2.0 * PI / 7.0) - 1.0).abs() < 0.10, "{g405}");
        // scripts/oracles.py: qwp_850_over_quarter, qwp_405_rad
        assert!((stack.retardation(cat, nm(850.0)).unwrap() / FRAC_PI_2 - 0.9138647108029432).abs() < 1e-9);
        assert!((g405 - 0.897170791262854).abs() < 1e-9);
    }

    #[test]
    fn tilt_increases_effective_thickness() {
        let cat = Catalog::builtin();
        let flat = WaveplateStack::achromat();
        let tilted = flat.clone().with_tilt(3.0);
        let g0 = flat.retardation(cat, nm(785.0)).unwrap();
        let g3 = tilted.retardation(cat, nm(785.0)).unwrap();
        assert!(g3 != g0);
        assert!((g3 / g0 - 1.0).abs() < 0.01);
        // Symmetric in the sign of the tilt.
        let gm = flat.with_tilt(-3.0).retardation(cat, nm(785.0)).unwrap();
        assert!((gm - g3).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let mut s = WaveplateStack::achromat();
        s.layers.clear();
        assert!(s.validate().is_err());
        let mut s = WaveplateStack::achromat();
        s.layers[0].thickness_um = 0.0;
        assert!(s.validate().is_err());
        let mut s = WaveplateStack::achromat();
        s.layers[0].fast_axis_alignment = 2;
        assert!(s.validate().is_err());
    }
}
