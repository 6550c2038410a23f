//! Compensator length design.

use serde::{Deserialize, Serialize};

use super::phase::{compensation_phase_per_um, flatness_stats, linspace_nm, FlatnessReport, FlatnessWindow};
use super::{Interferometer, Weighting};
use crate::dispersion::Catalog;
use crate::error::{Error, Result};
use crate::phasematch::{idler_wavelength, joint_spectrum};
use crate::units::Wavelength;

/// Search bounds for the compensator length, mm.
pub const LENGTH_BOUNDS_MM: (f64, f64) = (0.0, 50.0);

/// Final bracket width of the golden-section search, mm (1 µm).
pub const LENGTH_RESOLUTION_MM: f64 = 1e-3;

/// Signal step used for the slope objective of a one-point window, nm.
const SLOPE_STEP_NM: f64 = 0.01;

/// Signal-wavelength window on the energy-conserving line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub center_nm: f64,
    pub half_width_nm: f64,
    pub points: usize,
}

impl SpectralWindow {
    pub fn signal_grid(&self) -> Result<Vec<Wavelength>> {
        linspace_nm(self.center_nm, self.half_width_nm, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensatorDesign {
    pub length_mm: f64,
    pub report: FlatnessReport,
}

/// Minimizes `f` over `[lo, hi]` by golden-section search until the bracket is
/// narrower than `tol`. Returns the best point seen, endpoints included, so a
/// minimum sitting on a bound is found exactly.
pub fn golden_section_min<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 || (fx == best.1 && x < best.0) {
            best = (x, fx);
        }
    }
    best
}

/// Finds the YVO₄ length (within [`LENGTH_BOUNDS_MM`]) that makes the
/// offset-subtracted total phase flattest over `window`.
///
/// The objective is the peak-to-peak phase for [`Weighting::Uniform`] and
/// the spectrum-weighted rms for [`Weighting::SpectrumWeighted`], with the
/// joint spectrum evaluated at the crystal temperature of `setup`. A
/// one-point window instead minimizes the phase slope along the
/// energy-conserving line at that point. The compensator length in `setup` is
/// ignored.
pub fn optimize_compensator_length(
    catalog: &Catalog,
    setup: &Interferometer,
    window: &SpectralWindow,
    weighting: Weighting,
) -> Result<CompensatorDesign> {
    let signal = window.signal_grid()?;
    let comp_t = setup.compensator.temperature;
    // µm of expanded crystal per nominal mm.
    let per_mm = setup.compensator.with_length(1.0).length_um_at(comp_t);

    // The total phase is affine in the compensator length: u + L·c.
    let profile = |points: &[Wavelength]| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut u = Vec::with_capacity(points.len());
        let mut c = Vec::with_capacity(points.len());
        for &s in points {
            let i = idler_wavelength(setup.pump, s)?;
            u.push(setup.uncompensated(catalog, s, i)?);
            c.push(per_mm * compensation_phase_per_um(catalog, s, i, comp_t)?);
        }
        Ok((u, c))
    };

    let (lo, hi) = LENGTH_BOUNDS_MM;
    let length_mm = if signal.len() == 1 {
        let centre = signal[0].nm();
        let ends = [Wavelength::from_nm(centre - SLOPE_STEP_NM)?, Wavelength::from_nm(centre + SLOPE_STEP_NM)?];
        let (u, c) = profile(&ends)?;
        let (du, dc) = (u[1] - u[0], c[1] - c[0]);
        golden_section_min(|l| (du + l * dc).abs(), lo, hi, LENGTH_RESOLUTION_MM).0
    } else {
        let (u, c) = profile(&signal)?;
        let weights = match weighting {
            Weighting::Uniform => None,
            Weighting::SpectrumWeighted => Some(
                joint_spectrum(catalog, setup.pump, setup.crystal_temperature, &setup.crystal, &signal)?
                    .intensity,
            ),
        };
        let mut scratch = vec![0.0; u.len()];
        let mut objective = |l: f64| -> f64 {
            for ((p, a), b) in scratch.iter_mut().zip(&u).zip(&c) {
                *p = a + l * b;
            }
            match flatness_stats(&scratch, weights.as_deref()) {
                Ok((ptp, rms)) => match weighting {
                    Weighting::Uniform => ptp,
                    Weighting::SpectrumWeighted => rms,
                },
                Err(_) => f64::INFINITY,
            }
        };
        if objective(lo).is_infinite() {
            return Err(Error::domain("spectral weights vanish over the window"));
        }
        golden_section_min(&mut objective, lo, hi, LENGTH_RESOLUTION_MM).0
    };

    let report = flatness_at(catalog, setup, window, weighting, length_mm)?;
    Ok(CompensatorDesign { length_mm, report })
}

/// Flatness of the offset-subtracted total phase over `window` for a given
/// compensator length.
pub fn flatness_at(
    catalog: &Catalog,
    setup: &Interferometer,
    window: &SpectralWindow,
    weighting: Weighting,
    length_mm: f64,
) -> Result<FlatnessReport> {
    let signal = window.signal_grid()?;
    let trial = setup.with_compensator(setup.compensator.with_length(length_mm));
    let mut phase = Vec::with_capacity(signal.len());
    let mut idler_nm = Vec::with_capacity(signal.len());
    for &s in &signal {
        let i = idler_wavelength(setup.pump, s)?;
        idler_nm.push(i.nm());
        phase.push(trial.total(catalog, s, i)?);
    }
    let centre = phase[(phase.len() - 1) / 2];
    phase.iter_mut().for_each(|p| *p -= centre);
    let weights = match weighting {
        Weighting::Uniform => None,
        Weighting::SpectrumWeighted => Some(
            joint_spectrum(catalog, setup.pump, setup.crystal_temperature, &setup.crystal, &signal)?.intensity,
        ),
    };
    let (ptp, rms) = flatness_stats(&phase, weights.as_deref())?;
    let signal_nm: Vec<f64> = signal.iter().map(|w| w.nm()).collect();
    let span = |v: &[f64]| [v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)];
    Ok(FlatnessReport {
        peak_to_peak_rad: ptp,
        rms_rad: rms,
        window: FlatnessWindow { signal_nm: span(&signal_nm), idler_nm: span(&idler_nm) },
        weighting,
    })
}
