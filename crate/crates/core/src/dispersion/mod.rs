//! Refractive-index models for every material in the optical path.
//!
//! A [`DispersionModel`] couples a room-temperature Sellmeier-type formula
//! with an additive thermo-optic polynomial in `T - T_ref`. The coefficient
//! sets are plain data (see `data/materials.json`) so they can be swapped
//! without touching the evaluation code.
//!
//! Formula families, with `λ` in micrometres:
//!
//! * `pole`: `n² = A - D·λ² + Σ Bₖ / (λ² - Cₖ)`, coefficients `[A, D, B₁, C₁, ...]`
//! * `sellmeier`: `n² = A + Σ Bₖ·λ² / (λ² - Cₖ)`, coefficients `[A, B₁, C₁, ...]`
//! * `ciddor`: `n - 1 = Σ Bₖ / (Cₖ - λ⁻²)`, coefficients `[B₁, C₁, ...]`
//! * `constant`: `n = coefficients[0]`
//!
//! The thermo-optic correction is `Δn = Σⱼ (Σₘ aⱼₘ / λᵐ) · (T - T_ref)^(j+1)`
//! with `m = 0..4`, stored flat in blocks of four per power of `T - T_ref`.

mod catalog;

pub use catalog::Catalog;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{Temperature, Wavelength};

/// Number of `1/λᵐ` terms per thermo-optic order.
pub const THERMO_BLOCK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaterialName {
    KTP,
    YVO4,
    MgF2,
    SiO2,
    Air,
    Vacuum,
}

impl MaterialName {
    /// The two axes that define the birefringence `n_slow - n_fast` used for
    /// retarders, or `None` for isotropic media.
    pub fn birefringent_axes(self) -> Option<(Axis, Axis)> {
        match self {
            MaterialName::KTP => Some((Axis::Z, Axis::Y)),
            MaterialName::YVO4 | MaterialName::MgF2 | MaterialName::SiO2 => {
                Some((Axis::Extraordinary, Axis::Ordinary))
            }
            MaterialName::Air | MaterialName::Vacuum => None,
        }
    }

    pub fn is_isotropic(self) -> bool {
        self.birefringent_axes().is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Y,
    Z,
    Ordinary,
    Extraordinary,
    Isotropic,
}

/// A material together with the polarization axis an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Material {
    pub name: MaterialName,
    pub axis: Axis,
}

impl Material {
    pub fn new(name: MaterialName, axis: Axis) -> Result<Self> {
        let ok = match name {
            MaterialName::KTP => matches!(axis, Axis::Y | Axis::Z),
            MaterialName::YVO4 | MaterialName::MgF2 | MaterialName::SiO2 => {
                matches!(axis, Axis::Ordinary | Axis::Extraordinary)
            }
            MaterialName::Air | MaterialName::Vacuum => axis == Axis::Isotropic,
        };
        if ok {
            Ok(Material { name, axis })
        } else {
            Err(Error::usage(format!("axis {axis:?} is not valid for {name:?}")))
        }
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} ({:?})", self.name, self.axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Pole,
    Sellmeier,
    Ciddor,
    Constant,
}

/// One material/axis index model. Serialized form matches the bundled
/// `materials.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    pub material: MaterialName,
    pub axis: Axis,
    pub form: Formula,
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub thermo_optic: Vec<f64>,
    pub range_nm: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_range_c: Option<[f64; 2]>,
    pub reference_temperature_c: f64,
    pub provenance: String,
}

impl DispersionModel {
    pub fn from_json(text: &str) -> Result<Self> {
        let model: DispersionModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn material(&self) -> Material {
        Material { name: self.material, axis: self.axis }
    }

    pub fn validate(&self) -> Result<()> {
        let label = self.material().to_string();
        Material::new(self.material, self.axis).map_err(|e| Error::Config(e.to_string()))?;
        let n = self.coefficients.len();
        let shape_ok = match self.form {
            Formula::Pole => n >= 2 && n.is_multiple_of(2),
            Formula::Sellmeier => n >= 1 && n % 2 == 1,
            Formula::Ciddor => n >= 2 && n.is_multiple_of(2),
            Formula::Constant => n == 1,
        };
        if !shape_ok {
            return Err(Error::Config(format!(
                "{label}: {n} coefficients do not fit the {:?} formula",
                self.form
            )));
        }
        if !self.thermo_optic.len().is_multiple_of(THERMO_BLOCK) {
            return Err(Error::Config(format!(
                "{label}: thermo_optic length must be a multiple of {THERMO_BLOCK}"
            )));
        }
        let [lo, hi] = self.range_nm;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Config(format!("{label}: range_nm must satisfy 0 < min < max")));
        }
        if let Some([tlo, thi]) = self.temperature_range_c {
            if !(thi > tlo) {
                return Err(Error::Config(format!("{label}: temperature_range_c must be increasing")));
            }
        }
        if self.coefficients.iter().chain(&self.thermo_optic).any(|c| !c.is_finite()) {
            return Err(Error::Config(format!("{label}: non-finite coefficient")));
        }
        Ok(())
    }

    /// Index of refraction at vacuum wavelength `wavelength` and temperature `temperature`.
    pub fn refractive_index(&self, wavelength: Wavelength, temperature: Temperature) -> Result<f64> {
        let nm = wavelength.nm();
        let [lo, hi] = self.range_nm;
        if nm < lo || nm > hi {
            return Err(Error::WavelengthRange {
                model: self.material().to_string(),
                wavelength_nm: nm,
                min_nm: lo,
                max_nm: hi,
            });
        }
        let t = temperature.as_celsius();
        if let Some([tlo, thi]) = self.temperature_range_c {
            if t < tlo || t > thi {
                return Err(Error::TemperatureRange {
                    model: self.material().to_string(),
                    temperature_c: t,
                    min_c: tlo,
                    max_c: thi,
                });
            }
        }
        let um = wavelength.um();
        Ok(self.base_index(um) + self.thermo_correction(um, t - self.reference_temperature_c))
    }

    fn base_index(&self, um: f64) -> f64 {
        let c = &self.coefficients;
        let l2 = um * um;
        match self.form {
            Formula::Pole => {
                let poles: f64 = c[2..].chunks_exact(2).map(|p| p[0] / (l2 - p[1])).sum();
                (c[0] - c[1] * l2 + poles).sqrt()
            }
            Formula::Sellmeier => {
                let terms: f64 = c[1..].chunks_exact(2).map(|p| p[0] * l2 / (l2 - p[1])).sum();
                (c[0] + terms).sqrt()
            }
            Formula::Ciddor => {
                let s2 = 1.0 / l2;
                1.0 + c.chunks_exact(2).map(|p| p[0] / (p[1] - s2)).sum::<f64>()
            }
            Formula::Constant => c[0],
        }
    }

    fn thermo_correction(&self, um: f64, dt: f64) -> f64 {
        if self.thermo_optic.is_empty() || dt == 0.0 {
            return 0.0;
        }
        let mut power = dt;
        let mut total = 0.0;
        for block in self.thermo_optic.chunks_exact(THERMO_BLOCK) {
            let coeff: f64 = block
                .iter()
                .enumerate()
                .map(|(m, a)| a / um.powi(m as i32))
                .sum();
            total += coeff * power;
            power *= dt;
        }
        total
    }
}

/// Index difference `n_first - n_second` between two axes of the same material.
///
/// Sign conventions used elsewhere in the crate:
/// * YVO₄: call with `(ordinary, extraordinary)` to get `n_o - n_e`, the
///   combination in the compensator phase. It is negative, since YVO₄ is
///   positive uniaxial.
/// * KTP: call with `(z, y)` to get `n_z - n_y`.
///
/// Two identical isotropic models give exactly zero.
pub fn birefringence(
    first: &DispersionModel,
    second: &DispersionModel,
    wavelength: Wavelength,
    temperature: Temperature,
) -> Result<f64> {
    if first.material != second.material {
        return Err(Error::usage(format!(
            "birefringence needs two axes of one material, got {:?} and {:?}",
            first.material, second.material
        )));
    }
    if first.axis == second.axis && first.axis != Axis::Isotropic {
        return Err(Error::usage(format!(
            "birefringence needs two distinct axes of {:?}",
            first.material
        )));
    }
    Ok(first.refractive_index(wavelength, temperature)?
        - second.refractive_index(wavelength, temperature)?)
}
