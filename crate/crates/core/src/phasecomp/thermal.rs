//! Temperature and mirror-displacement sensitivity of the relative phase.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::phase::{compensation_phase, crystal_phase, CompensatorSpec};
use crate::dispersion::{Catalog, DispersionModel};
use crate::error::{Error, Result};
use crate::phasematch::CrystalSpec;
use crate::units::{Temperature, Wavelength};

/// Step for the central-difference phase/temperature slope, K.
const SLOPE_STEP_K: f64 = 1e-3;

/// A temperature-controlled element whose optical path enters the relative phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "element")]
pub enum ThermalElement {
    /// The YVO₄ compensator at its own temperature.
    Compensator(CompensatorSpec),
    /// The down-conversion crystal; only the double-pass `n_y` path depends on it.
    Crystal { crystal: CrystalSpec, temperature: Temperature },
}

impl ThermalElement {
    pub fn temperature(&self) -> Temperature {
        match self {
            ThermalElement::Compensator(c) => c.temperature,
            ThermalElement::Crystal { temperature, .. } => *temperature,
        }
    }

    /// The element's phase contribution with its temperature replaced by `t`.
    pub fn phase_at(
        &self,
        catalog: &Catalog,
        signal: Wavelength,
        idler: Wavelength,
        t: Temperature,
    ) -> Result<f64> {
        match self {
            ThermalElement::Compensator(c) => compensation_phase(catalog, signal, idler, &c.at_temperature(t)),
            ThermalElement::Crystal { crystal, .. } => crystal_phase(catalog, signal, idler, crystal, t),
        }
    }

    /// `dφ/dT` at the element's operating temperature, rad/K.
    pub fn phase_slope(&self, catalog: &Catalog, signal: Wavelength, idler: Wavelength) -> Result<f64> {
        let t = self.temperature();
        let up = self.phase_at(catalog, signal, idler, t.offset(SLOPE_STEP_K))?;
        let down = self.phase_at(catalog, signal, idler, t.offset(-SLOPE_STEP_K))?;
        Ok((up - down) / (2.0 * SLOPE_STEP_K))
    }
}

/// Phase change when the element is moved from `T` to `T + ΔT`.
pub fn temperature_phase_shift(
    catalog: &Catalog,
    element: &ThermalElement,
    delta_k: f64,
    signal: Wavelength,
    idler: Wavelength,
) -> Result<f64> {
    if delta_k == 0.0 {
        return Ok(0.0);
    }
    let t = element.temperature();
    Ok(element.phase_at(catalog, signal, idler, t.offset(delta_k))?
        - element.phase_at(catalog, signal, idler, t)?)
}

/// Smallest positive temperature step giving a π phase shift, found by
/// bisection on `|shift(ΔT)| - π` over `(0, max_delta_k]`.
pub fn pi_shift_temperature(
    catalog: &Catalog,
    element: &ThermalElement,
    signal: Wavelength,
    idler: Wavelength,
    max_delta_k: f64,
) -> Result<f64> {
    let f = |d: f64| -> Result<f64> {
        Ok(temperature_phase_shift(catalog, element, d, signal, idler)?.abs() - PI)
    };
    let (mut lo, mut hi) = (0.0, max_delta_k);
    if f(hi)? < 0.0 {
        return Err(Error::NoRoot { low_c: 0.0, high_c: max_delta_k, low_residual: -PI, high_residual: f(hi)? });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fidelity of `(|VV⟩ + e^{iφ}|HH⟩)/√2` with the φ = 0 Bell state: `cos²(φ/2)`.
///
/// Written as `(1 + cos φ)/2`, which is exact at φ ∈ {0, π/2, π}.
pub fn fidelity_for_phase(phi: f64) -> f64 {
    0.5 * (1.0 + phi.cos())
}

/// Largest `|φ|` keeping [`fidelity_for_phase`] at or above `fidelity`.
pub fn max_phase_for_fidelity(fidelity: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&fidelity) {
        return Err(Error::domain(format!("fidelity target must lie in [0.5, 1), got {fidelity}")));
    }
    Ok(2.0 * fidelity.sqrt().acos())
}

/// Temperature excursion `ΔT_max` that keeps the fidelity above `fidelity`,
/// using the local phase/temperature slope of `element`.
pub fn temperature_tolerance(
    catalog: &Catalog,
    element: &ThermalElement,
    signal: Wavelength,
    idler: Wavelength,
    fidelity: f64,
) -> Result<f64> {
    let phi_max = max_phase_for_fidelity(fidelity)?;
    let slope = element.phase_slope(catalog, signal, idler)?;
    if slope == 0.0 {
        return Err(Error::domain("element phase does not depend on temperature"));
    }
    Ok(phi_max / slope.abs())
}

/// Relative-phase change from moving the retro-reflecting mirror by
/// `displacement_um` (round trip): `4π d [n(λp)/λp - n(λs)/λs - n(λi)/λi]`.
///
/// For an energy-conserving triplet the vacuum part cancels identically, so
/// only the refractivities `n - 1` are summed. Geometric (Gouy) phase is not
/// included.
pub fn mirror_displacement_phase(
    air: &DispersionModel,
    displacement_um: f64,
    pump: Wavelength,
    signal: Wavelength,
    idler: Wavelength,
) -> Result<f64> {
    if !(displacement_um.is_finite() && displacement_um >= 0.0) {
        return Err(Error::domain("mirror displacement must be >= 0"));
    }
    let t = Temperature::celsius(air.reference_temperature_c);
    let r = |w: Wavelength| -> Result<f64> { Ok((air.refractive_index(w, t)? - 1.0) / w.um()) };
    let per_um = 4.0 * PI * (r(pump)? - r(signal)? - r(idler)?);
    Ok(per_um * displacement_um)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{Axis, MaterialName};
    use crate::phasematch::{idler_wavelength, phasematch_temperature};
    use std::f64::consts::FRAC_PI_2;

    fn nm(x: f64) -> Wavelength {
        Wavelength::from_nm(x).unwrap()
    }

    fn yvo() -> ThermalElement {
        ThermalElement::Compensator(CompensatorSpec::yvo4(18.5, Temperature::celsius(25.0)).unwrap())
    }

    const S: f64 = 784.0;
    const I: f64 = 839.4970945589012;

    #[test]
    fn zero_step_is_zero_shift() {
        let cat = Catalog::builtin();
        assert_eq!(temperature_phase_shift(cat, &yvo(), 0.0, nm(S), nm(I)).unwrap(), 0.0);
    }

    #[test]
    fn yvo_pi_shift_near_2_4_kelvin() {
        let cat = Catalog::builtin();
        let dt = pi_shift_temperature(cat, &yvo(), nm(S), nm(I), 20.0).unwrap();
        // scripts/oracles.py: yvo_dt_pi
        assert!((dt - 2.4057415775966247).abs() < 1e-6, "{dt}");
        assert!((dt - 2.4).abs() <= 0.4);
    }

    #[test]
    fn shift_is_linear_and_antisymmetric() {
        let cat = Catalog::builtin();
        let e = yvo();
        let slope = e.phase_slope(cat, nm(S), nm(I)).unwrap();
        for dt in [-3.0, -1.5, 0.5, 3.0] {
            let s = temperature_phase_shift(cat, &e, dt, nm(S), nm(I)).unwrap();
            assert!((s / (slope * dt) - 1.0).abs() < 0.01, "{dt}");
        }
        for dt in [0.1, 1.0, 3.0] {
            let plus = temperature_phase_shift(cat, &e, dt, nm(S), nm(I)).unwrap();
            let minus = temperature_phase_shift(cat, &e, -dt, nm(S), nm(I)).unwrap();
            // Second order only: the residual shrinks with the square of ΔT.
            assert!((plus + minus).abs() <= 1e-3 * dt * dt + 1e-9, "{dt}: {}", plus + minus);
        }
    }

    #[test]
    fn fidelity_phase_identities() {
        assert_eq!(fidelity_for_phase(0.0), 1.0);
        assert_eq!(fidelity_for_phase(PI), 0.0);
        assert_eq!(fidelity_for_phase(FRAC_PI_2), 0.5);
        assert!((max_phase_for_fidelity(0.5).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!(max_phase_for_fidelity(1.0).is_err());
        assert!(max_phase_for_fidelity(0.4).is_err());
    }

    #[test]
    fn tolerance_budget() {
        let cat = Catalog::builtin();
        let yvo_tol = temperature_tolerance(cat, &yvo(), nm(S), nm(I), 0.995).unwrap();
        // scripts/oracles.py: yvo_tolerance_0995
        assert!((yvo_tol - 0.10838825780411664).abs() < 1e-6);
        assert!((yvo_tol - 0.10).abs() <= 0.03);

        let crystal = CrystalSpec::ppktp(11.48, 3.425).unwrap();
        let t = phasematch_temperature(cat, nm(405.4), nm(S), &crystal).unwrap();
        let ktp = ThermalElement::Crystal { crystal, temperature: t };
        let ktp_tol = temperature_tolerance(cat, &ktp, nm(S), nm(I), 0.995).unwrap();
        // scripts/oracles.py: ktp_tolerance_0995_at_tstar
        assert!((ktp_tol - 0.03792151721907197).abs() < 1e-6, "{ktp_tol}");
        assert!((ktp_tol - 0.05).abs() <= 0.02);

        let tight = temperature_tolerance(cat, &yvo(), nm(S), nm(I), 1.0 - 1e-12).unwrap();
        assert!(tight < 1e-5);

        let dt_pi = pi_shift_temperature(cat, &yvo(), nm(S), nm(I), 20.0).unwrap();
        let half = temperature_tolerance(cat, &yvo(), nm(S), nm(I), 0.5).unwrap();
        assert!((half - dt_pi / 2.0).abs() < 0.01 * dt_pi);
    }

    #[test]
    fn mirror_displacement() {
        let cat = Catalog::builtin();
        let air = cat.model(MaterialName::Air, Axis::Isotropic).unwrap();
        let vac = cat.model(MaterialName::Vacuum, Axis::Isotropic).unwrap();
        let (p, s) = (nm(405.4), nm(784.0));
        let i = idler_wavelength(p, s).unwrap();
        assert_eq!(mirror_displacement_phase(air, 0.0, p, s, i).unwrap(), 0.0);
        let phi = mirror_displacement_phase(air, 100.0, p, s, i).unwrap();
        // scripts/oracles.py: mirror_100um_rad
        assert!((phi - 0.023205980823138104).abs() < 1e-9, "{phi}");
        assert!(phi.abs() < 0.1);
        for d in [1.0, 37.5, 1e4] {
            assert_eq!(mirror_displacement_phase(vac, d, p, s, i).unwrap(), 0.0);
            let one = mirror_displacement_phase(air, d, p, s, i).unwrap();
            let two = mirror_displacement_phase(air, 2.0 * d, p, s, i).unwrap();
            assert_eq!(two, 2.0 * one);
        }
        assert!(mirror_displacement_phase(air, -1.0, p, s, i).is_err());
    }
}
