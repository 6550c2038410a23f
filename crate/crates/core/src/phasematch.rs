//! Collinear type-0 quasi-phase-matching in periodically poled KTP.
//!
//! Type-0 here means pump, signal and idler are all polarized along the
//! crystal z axis, so only `n_z` enters the mismatch. The `n_y` index is
//! used by the phase-compensation code for the rotated photons.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::{Axis, Catalog, MaterialName};
use crate::error::{Error, Result};
use crate::units::{Temperature, Wavelength};

/// Temperature at which crystal lengths and poling periods are specified.
pub const LENGTH_REFERENCE_C: f64 = 25.0;

/// Search interval for the phase-matching temperature, °C.
pub const SEARCH_INTERVAL_C: (f64, f64) = (0.0, 150.0);

/// Residual `|Δk·L/2|` accepted as a phase-matching root, rad.
pub const ROOT_TOLERANCE_RAD: f64 = 1e-6;

fn default_ktp() -> MaterialName {
    MaterialName::KTP
}

fn default_interaction_axis() -> Axis {
    Axis::Z
}

fn default_ktp_expansion() -> f64 {
    // x-axis linear expansion of flux-grown KTP.
    6.7e-6
}

/// A poled nonlinear crystal, propagation along x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec {
    #[serde(default = "default_ktp")]
    pub material: MaterialName,
    pub length_mm: f64,
    pub poling_period_um: f64,
    #[serde(default = "default_interaction_axis")]
    pub interaction_axis: Axis,
    /// Linear thermal expansion along the propagation direction, 1/K.
    #[serde(default = "default_ktp_expansion")]
    pub thermal_expansion_per_k: f64,
}

impl CrystalSpec {
    pub fn ppktp(length_mm: f64, poling_period_um: f64) -> Result<Self> {
        let spec = CrystalSpec {
            material: MaterialName::KTP,
            length_mm,
            poling_period_um,
            interaction_axis: Axis::Z,
            thermal_expansion_per_k: default_ktp_expansion(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_mm.is_finite() && self.length_mm >= 0.0) {
            return Err(Error::domain(format!("crystal length must be >= 0 mm, got {}", self.length_mm)));
        }
        if !(self.poling_period_um.is_finite() && self.poling_period_um > 0.0) {
            return Err(Error::domain(format!(
                "poling period must be > 0 um, got {}",
                self.poling_period_um
            )));
        }
        if self.material != MaterialName::KTP {
            return Err(Error::usage("only KTP crystals are modeled"));
        }
        Ok(())
    }

    /// Physical length at `temperature`, in micrometres.
    pub fn length_um_at(&self, temperature: Temperature) -> f64 {
        self.length_mm
            * 1e3
            * (1.0 + self.thermal_expansion_per_k * (temperature.as_celsius() - LENGTH_REFERENCE_C))
    }
}

/// `1/λi = 1/λp - 1/λs`.
pub fn idler_wavelength(pump: Wavelength, signal: Wavelength) -> Result<Wavelength> {
    if signal.nm() <= pump.nm() {
        return Err(Error::domain(format!(
            "signal ({signal}) must be longer than the pump ({pump})"
        )));
    }
    Wavelength::from_nm(1.0 / (1.0 / pump.nm() - 1.0 / signal.nm()))
}

/// Energy-conservation residual `1/λp - 1/λs - 1/λi` in 1/nm.
pub fn energy_residual(pump: Wavelength, signal: Wavelength, idler: Wavelength) -> f64 {
    1.0 / pump.nm() - 1.0 / signal.nm() - 1.0 / idler.nm()
}

/// A single down-conversion channel with the idler fixed by energy
/// conservation. The shorter of the two daughters is always the signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdcProcess {
    pub pump: Wavelength,
    pub signal: Wavelength,
    pub idler: Wavelength,
    pub crystal: CrystalSpec,
    pub temperature: Temperature,
}

impl SpdcProcess {
    pub fn new(
        pump: Wavelength,
        daughter: Wavelength,
        crystal: CrystalSpec,
        temperature: Temperature,
    ) -> Result<Self> {
        crystal.validate()?;
        let other = idler_wavelength(pump, daughter)?;
        let (signal, idler) = if daughter <= other { (daughter, other) } else { (other, daughter) };
        Ok(SpdcProcess { pump, signal, idler, crystal, temperature })
    }
}

/// Phase mismatch `Δk` in rad/m, first-order QPM:
/// `2π [n(λp)/λp - n(λs)/λs - n(λi)/λi - 1/Λ]`.
pub fn qpm_mismatch(catalog: &Catalog, process: &SpdcProcess) -> Result<f64> {
    let axis = process.crystal.interaction_axis;
    let model = catalog.model(process.crystal.material, axis)?;
    let t = process.temperature;
    let k = |w: Wavelength| -> Result<f64> { Ok(model.refractive_index(w, t)? / w.um()) };
    let per_um = 2.0
        * PI
        * (k(process.pump)? - k(process.signal)? - k(process.idler)?
            - 1.0 / process.crystal.poling_period_um);
    Ok(per_um * 1e6)
}

/// `Δk·L/2` in rad, with the crystal length evaluated at the process temperature.
pub fn half_mismatch_phase(catalog: &Catalog, process: &SpdcProcess) -> Result<f64> {
    let dk = qpm_mismatch(catalog, process)?;
    Ok(dk * process.crystal.length_um_at(process.temperature) * 1e-6 / 2.0)
}

/// Temperature in [`SEARCH_INTERVAL_C`] where the process is phase matched.
///
/// Plain bisection on the sign of `Δk`, iterated until `|Δk·L/2|` drops below
/// [`ROOT_TOLERANCE_RAD`] (or the bracket collapses to machine precision).
pub fn phasematch_temperature(
    catalog: &Catalog,
    pump: Wavelength,
    signal: Wavelength,
    crystal: &CrystalSpec,
) -> Result<Temperature> {
    let residual = |t: f64| -> Result<f64> {
        let p = SpdcProcess::new(pump, signal, crystal.clone(), Temperature::celsius(t))?;
        half_mismatch_phase(catalog, &p)
    };
    let (mut lo, mut hi) = SEARCH_INTERVAL_C;
    let mut f_lo = residual(lo)?;
    let f_hi = residual(hi)?;
    if f_lo == 0.0 {
        return Ok(Temperature::celsius(lo));
    }
    if f_hi == 0.0 {
        return Ok(Temperature::celsius(hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoRoot {
            low_c: lo,
            high_c: hi,
            low_residual: f_lo,
            high_residual: f_hi,
        });
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f_mid = residual(mid)?;
        if f_mid.abs() < ROOT_TOLERANCE_RAD || hi - lo < 1e-12 {
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Temperature::celsius(mid))
}

/// Normalized sinc² spectral intensity versus signal wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpectrum {
    pub signal_nm: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Full width at half maximum by linear interpolation; `None` when the
    /// half-maximum crossings fall outside the grid.
    pub fwhm_nm: Option<f64>,
}

/// Checks that a wavelength grid is nonempty and strictly increasing.
pub(crate) fn check_grid(grid: &[Wavelength], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::usage(format!("{what} grid is empty")));
    }
    if grid.windows(2).any(|w| w[1].nm() <= w[0].nm()) {
        return Err(Error::usage(format!("{what} grid must be strictly increasing")));
    }
    Ok(())
}

/// `sinc²(Δk(λs)·L/2)` over `signal_grid`, normalized to a peak of 1.
///
/// The grid spacing should be 0.01 nm or finer for centimetre-scale crystals
/// if the reported FWHM is to be meaningful.
pub fn joint_spectrum(
    catalog: &Catalog,
    pump: Wavelength,
    temperature: Temperature,
    crystal: &CrystalSpec,
    signal_grid: &[Wavelength],
) -> Result<JointSpectrum> {
    check_grid(signal_grid, "signal")?;
    let mut intensity = signal_grid
        .iter()
        .map(|&s| {
            let p = SpdcProcess::new(pump, s, crystal.clone(), temperature)?;
            Ok(sinc_squared(half_mismatch_phase(catalog, &p)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    let peak = intensity.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        intensity.iter_mut().for_each(|v| *v /= peak);
    }
    let signal_nm: Vec<f64> = signal_grid.iter().map(|w| w.nm()).collect();
    let fwhm_nm = fwhm(&signal_nm, &intensity);
    Ok(JointSpectrum { signal_nm, intensity, fwhm_nm })
}

pub fn sinc_squared(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// Width at half maximum around the global peak, interpolating linearly
/// between the grid points that bracket each crossing.
pub fn fwhm(x: &[f64], y: &[f64]) -> Option<f64> {
    let (imax, &ymax) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = 0.5 * ymax;
    let left = (1..=imax).rev().find(|&k| y[k - 1] < half).map(|k| {
        let (x0, x1, y0, y1) = (x[k - 1], x[k], y[k - 1], y[k]);
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    })?;
    let right = (imax..y.len() - 1).find(|&k| y[k + 1] < half).map(|k| {
        let (x0, x1, y0, y1) = (x[k], x[k + 1], y[k], y[k + 1]);
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    })?;
    Some(right - left)
}
