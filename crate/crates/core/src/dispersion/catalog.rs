use std::path::Path;
use std::sync::OnceLock;

use super::{Axis, DispersionModel, MaterialName};
use crate::error::{Error, Result};
use crate::units::{Temperature, Wavelength};

const BUILTIN_MODELS: &str = include_str!("../../data/materials.json");

/// A set of dispersion models, at most one per material/axis.
#[derive(Debug, Clone)]
pub struct Catalog {
    models: Vec<DispersionModel>,
}

impl Catalog {
    /// The bundled coefficient sets.
    pub fn builtin() -> &'static Catalog {
        static BUILTIN: OnceLock<Catalog> = OnceLock::new();
        BUILTIN.get_or_init(|| Catalog::from_json(BUILTIN_MODELS).expect("bundled materials.json is valid"))
    }

    /// Parses a JSON array of models.
    pub fn from_json(text: &str) -> Result<Self> {
        let models: Vec<DispersionModel> = serde_json::from_str(text)?;
        let mut catalog = Catalog { models: Vec::with_capacity(models.len()) };
        for m in models {
            m.validate()?;
            if catalog.find(m.material, m.axis).is_some() {
                return Err(Error::Config(format!(
                    "duplicate model for {}",
                    m.material()
                )));
            }
            catalog.models.push(m);
        }
        Ok(catalog)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Returns a copy with `model` inserted, replacing any existing model for
    /// the same material and axis.
    pub fn with_model(mut self, model: DispersionModel) -> Result<Self> {
        model.validate()?;
        self.models.retain(|m| !(m.material == model.material && m.axis == model.axis));
        self.models.push(model);
        Ok(self)
    }

    pub fn models(&self) -> &[DispersionModel] {
        &self.models
    }

    fn find(&self, material: MaterialName, axis: Axis) -> Option<&DispersionModel> {
        self.models.iter().find(|m| m.material == material && m.axis == axis)
    }

    pub fn model(&self, material: MaterialName, axis: Axis) -> Result<&DispersionModel> {
        self.find(material, axis)
            .ok_or_else(|| Error::usage(format!("no dispersion model for {material:?} ({axis:?})")))
    }

    pub fn index(
        &self,
        material: MaterialName,
        axis: Axis,
        wavelength: Wavelength,
        temperature: Temperature,
    ) -> Result<f64> {
        self.model(material, axis)?.refractive_index(wavelength, temperature)
    }

    /// `n_slow - n_fast` of a uniaxial or biaxial retarder material (zero for
    /// isotropic media). See [`super::MaterialName::birefringent_axes`].
    pub fn retarder_birefringence(
        &self,
        material: MaterialName,
        wavelength: Wavelength,
        temperature: Temperature,
    ) -> Result<f64> {
        match material.birefringent_axes() {
            None => {
                let iso = self.model(material, Axis::Isotropic)?;
                super::birefringence(iso, iso, wavelength, temperature)
            }
            Some((slow, fast)) => super::birefringence(
                self.model(material, slow)?,
                self.model(material, fast)?,
                wavelength,
                temperature,
            ),
        }
    }
}
