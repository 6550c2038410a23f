use std::fmt;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasecomp::{MapLayout, PhaseMap};
use crate::phasematch::JointSpectrum;

/// Two-photon basis order used for every 4×4 matrix in this module.
pub const BASIS: [&str; 4] = ["HH", "HV", "VH", "VV"];

const HH: usize = 0;
const VV: usize = 3;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellTarget {
    #[serde(rename = "phi+", alias = "phi_plus")]
    PhiPlus,
    #[serde(rename = "phi-", alias = "phi_minus")]
    PhiMinus,
}

impl BellTarget {
    /// `+1` for Φ+, `-1` for Φ−.
    pub fn sign(self) -> f64 {
        match self {
            BellTarget::PhiPlus => 1.0,
            BellTarget::PhiMinus => -1.0,
        }
    }

    /// `(|HH⟩ ± |VV⟩)/√2`.
    pub fn ket(self) -> Vector4<Complex64> {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Vector4::new(a, Complex64::ZERO, Complex64::ZERO, a * self.sign())
    }
}

impl fmt::Display for BellTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellTarget::PhiPlus => "phi+",
            BellTarget::PhiMinus => "phi-",
        })
    }
}

/// A validated two-photon polarization density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct PolarizationDensityMatrix {
    elements: Matrix4<Complex64>,
}

impl PolarizationDensityMatrix {
    /// Checks Hermiticity, unit trace and positive semidefiniteness.
    pub fn new(elements: Matrix4<Complex64>) -> Result<Self> {
        if elements.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::domain("density matrix has non-finite elements"));
        }
        let herm = (elements - elements.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::domain(format!("density matrix not Hermitian (deviation {herm:e})")));
        }
        let trace = elements.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::domain(format!("density matrix trace is {trace}, expected 1")));
        }
        let min_eig = Self::min_eigenvalue_of(&elements);
        if min_eig < -EIGEN_TOL {
            return Err(Error::domain(format!("density matrix has negative eigenvalue {min_eig:e}")));
        }
        Ok(PolarizationDensityMatrix { elements })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) nonzero ket.
    pub fn pure(ket: Vector4<Complex64>) -> Result<Self> {
        let norm = ket.norm();
        if !(norm > 0.0) {
            return Err(Error::domain("cannot build a state from the zero vector"));
        }
        let k = ket.unscale(norm);
        Self::new(k * k.adjoint())
    }

    pub fn bell(target: BellTarget) -> Self {
        // Built from populations so every entry is exactly ±1/2.
        Self::from_coherence(0.5, Complex64::new(target.sign(), 0.0)).expect("Bell states are valid")
    }

    /// `(|VV⟩ + e^{iφ}|HH⟩)/√2`.
    pub fn psi(phi: f64) -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let ket = Vector4::new(Complex64::from_polar(a, phi), Complex64::ZERO, Complex64::ZERO, Complex64::new(a, 0.0));
        Self::pure(ket).expect("unit ket")
    }

    pub fn maximally_mixed() -> Self {
        PolarizationDensityMatrix { elements: Matrix4::identity().scale(0.25) }
    }

    /// Diagonal populations `b` on HH and `1-b` on VV with coherence
    /// `ρ_{HH,VV} = √(b(1-b))·D`.
    pub fn from_coherence(balance: f64, coherence: Complex64) -> Result<Self> {
        if !(0.0..=1.0).contains(&balance) {
            return Err(Error::domain(format!("balance must lie in [0, 1], got {balance}")));
        }
        if coherence.norm() > 1.0 + 1e-12 {
            return Err(Error::domain("coherence factor magnitude exceeds 1"));
        }
        let mut m = Matrix4::zeros();
        m[(HH, HH)] = Complex64::new(balance, 0.0);
        m[(VV, VV)] = Complex64::new(1.0 - balance, 0.0);
        let c = coherence * (balance * (1.0 - balance)).sqrt();
        m[(HH, VV)] = c;
        m[(VV, HH)] = c.conj();
        Self::new(m)
    }

    pub fn elements(&self) -> &Matrix4<Complex64> {
        &self.elements
    }

    pub fn min_eigenvalue(&self) -> f64 {
        Self::min_eigenvalue_of(&self.elements)
    }

    fn min_eigenvalue_of(m: &Matrix4<Complex64>) -> f64 {
        // Symmetrize first so rounding noise cannot break the Hermitian solver.
        let h = (m + m.adjoint()).unscale(2.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// The HH/VV coherence element.
    pub fn coherence(&self) -> Complex64 {
        self.elements[(HH, VV)]
    }

    /// Real expectation value `Tr[ρ·op]` for a Hermitian `op`.
    pub fn expectation(&self, op: &Matrix4<Complex64>) -> f64 {
        (self.elements * op).trace().re
    }

    /// `⟨Φ±|ρ|Φ±⟩`.
    pub fn fidelity(&self, target: BellTarget) -> f64 {
        let k = target.ket();
        (k.adjoint() * self.elements * k)[(0, 0)].re
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    basis: Vec<String>,
    real: [[f64; 4]; 4],
    imag: [[f64; 4]; 4],
}

impl From<PolarizationDensityMatrix> for MatrixJson {
    fn from(rho: PolarizationDensityMatrix) -> Self {
        let mut real = [[0.0; 4]; 4];
        let mut imag = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                real[r][c] = rho.elements[(r, c)].re;
                imag[r][c] = rho.elements[(r, c)].im;
            }
        }
        MatrixJson { basis: BASIS.iter().map(|s| s.to_string()).collect(), real, imag }
    }
}

impl TryFrom<MatrixJson> for PolarizationDensityMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.basis.iter().map(String::as_str).ne(BASIS) {
            return Err(Error::Config(format!("density matrix basis must be {BASIS:?}")));
        }
        Self::new(Matrix4::from_fn(|r, c| Complex64::new(j.real[r][c], j.imag[r][c])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterShape {
    Tophat,
    Gaussian,
}

/// Band-pass filter on the signal arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFilter {
    pub center_nm: f64,
    pub fwhm_nm: f64,
    pub shape: FilterShape,
    pub peak_transmission: f64,
}

impl SpectralFilter {
    /// 3.5 nm tophat at 784 nm with 90 % transmission.
    pub fn interference_784() -> Self {
        SpectralFilter { center_nm: 784.0, fwhm_nm: 3.5, shape: FilterShape::Tophat, peak_transmission: 0.9 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_nm.is_finite() && self.center_nm > 0.0) {
            return Err(Error::Config("filter.center_nm must be > 0".into()));
        }
        if !(self.fwhm_nm.is_finite() && self.fwhm_nm > 0.0) {
            return Err(Error::Config("filter.fwhm_nm must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.peak_transmission) {
            return Err(Error::Config("filter.peak_transmission must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn transmission(&self, wavelength_nm: f64) -> f64 {
        let x = wavelength_nm - self.center_nm;
        match self.shape {
            FilterShape::Tophat => {
                if x.abs() <= 0.5 * self.fwhm_nm {
                    self.peak_transmission
                } else {
                    0.0
                }
            }
            FilterShape::Gaussian => {
                self.peak_transmission * (-4.0 * std::f64::consts::LN_2 * (x / self.fwhm_nm).powi(2)).exp()
            }
        }
    }
}

/// `D = Σ w·e^{iφ} / Σ w`.
pub fn coherence_factor(phase_rad: &[f64], weights: &[f64]) -> Result<Complex64> {
    if phase_rad.len() != weights.len() {
        return Err(Error::usage("phase and weight grids differ in length"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::domain("spectral weights must be finite and >= 0"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("spectral weight vanishes over the filter pass-band"));
    }
    let sum: Complex64 = phase_rad.iter().zip(weights).map(|(&p, &w)| Complex64::from_polar(w, p)).sum();
    let d = sum / total;
    // Rounding can push a perfectly flat average a hair above unit modulus.
    let n = d.norm();
    Ok(if n > 1.0 { d / n } else { d })
}

/// Spectrally averaged state from a diagonal phase profile and the joint
/// spectrum on the same signal grid, weighted by the signal filter.
pub fn build_state(
    phase: &PhaseMap,
    spectrum: &JointSpectrum,
    filter: &SpectralFilter,
    balance: f64,
) -> Result<PolarizationDensityMatrix> {
    if phase.layout != MapLayout::Diagonal {
        return Err(Error::usage("state construction needs a diagonal phase map"));
    }
    if phase.signal_nm.len() != spectrum.signal_nm.len()
        || phase.signal_nm.iter().zip(&spectrum.signal_nm).any(|(a, b)| (a - b).abs() > 1e-9)
    {
        return Err(Error::usage("phase map and joint spectrum use different signal grids"));
    }
    filter.validate()?;
    let weights: Vec<f64> = spectrum
        .signal_nm
        .iter()
        .zip(&spectrum.intensity)
        .map(|(&l, &s)| s * filter.transmission(l))
        .collect();
    let d = coherence_factor(&phase.phase_rad, &weights)?;
    PolarizationDensityMatrix::from_coherence(balance, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn diag_map(phase: Vec<f64>, signal: Vec<f64>) -> (PhaseMap, JointSpectrum) {
        let n = signal.len();
        let map = PhaseMap {
            layout: MapLayout::Diagonal,
            signal_nm: signal.clone(),
            idler_nm: signal.clone(),
            phase_rad: phase,
            offset_subtracted: true,
        };
        let js = JointSpectrum { signal_nm: signal, intensity: vec![1.0; n], fwhm_nm: None };
        (map, js)
    }

    #[test]
    fn flat_phase_gives_bell_states_exactly() {
        let signal: Vec<f64> = (0..21).map(|k| 782.5 + 0.15 * k as f64).collect();
        let filt = SpectralFilter::interference_784();
        let (m, js) = diag_map(vec![0.0; 21], signal.clone());
        let rho = build_state(&m, &js, &filt, 0.5).unwrap();
        assert_eq!(rho, PolarizationDensityMatrix::bell(BellTarget::PhiPlus));
        assert_eq!(rho.coherence().norm(), 0.5);
        let (m, js) = diag_map(vec![PI; 21], signal);
        let rho = build_state(&m, &js, &filt, 0.5).unwrap();
        assert!((rho.fidelity(BellTarget::PhiMinus) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_grids_are_usage_errors() {
        let (m, _) = diag_map(vec![0.0; 3], vec![783.0, 784.0, 785.0]);
        let (_, js) = diag_map(vec![0.0; 3], vec![783.0, 784.0, 785.5]);
        let err = build_state(&m, &js, &SpectralFilter::interference_784(), 0.5).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = Matrix4::<Complex64>::identity().scale(0.25);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(PolarizationDensityMatrix::new(m).is_err());
        let m = Matrix4::<Complex64>::identity().scale(0.3);
        assert!(PolarizationDensityMatrix::new(m).is_err());
        let mut m = Matrix4::<Complex64>::zeros();
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(PolarizationDensityMatrix::new(m).is_err());
        assert!(PolarizationDensityMatrix::from_coherence(1.2, Complex64::ONE).is_err());
    }

    #[test]
    fn json_round_trip_carries_basis() {
        let rho = PolarizationDensityMatrix::psi(0.7);
        let text = serde_json::to_string(&rho).unwrap();
        assert!(text.contains("\"basis\":[\"HH\",\"HV\",\"VH\",\"VV\"]"));
        let back: PolarizationDensityMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rho);
        let bad = text.replace("\"HV\",\"VH\"", "\"VH\",\"HV\"");
        assert!(serde_json::from_str::<PolarizationDensityMatrix>(&bad).is_err());
    }

    #[test]
    fn psi_fidelity_is_cos_squared() {
        for (phi, f) in [(0.0, 1.0), (PI / 2.0, 0.5), (PI, 0.0)] {
            let got = PolarizationDensityMatrix::psi(phi).fidelity(BellTarget::PhiPlus);
            assert!((got - f).abs() < 1e-12, "{phi}: {got}");
        }
    }

    #[test]
    fn filter_shapes() {
        let top = SpectralFilter::interference_784();
        assert_eq!(top.transmission(784.0), 0.9);
        assert_eq!(top.transmission(785.75), 0.9);
        assert_eq!(top.transmission(785.8), 0.0);
        let g = SpectralFilter { shape: FilterShape::Gaussian, ..top };
        assert!((g.transmission(785.75) - 0.45).abs() < 1e-12);
        let bad = SpectralFilter { fwhm_nm: 0.0, ..top };
        assert!(bad.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn constructed_states_are_valid(
            phases in proptest::collection::vec(-10.0f64..10.0, 1..40),
            balance in 0.0f64..=1.0,
        ) {
            let n = phases.len();
            let signal: Vec<f64> = (0..n).map(|k| 783.0 + 0.05 * k as f64).collect();
            let (m, js) = diag_map(phases, signal);
            let rho = build_state(&m, &js, &SpectralFilter::interference_784(), balance).unwrap();
            let e = rho.elements();
            proptest::prop_assert!((e - e.adjoint()).iter().all(|z| z.norm() <= HERMITIAN_TOL));
            proptest::prop_assert!((e.trace().re - 1.0).abs() <= TRACE_TOL);
            proptest::prop_assert!(rho.min_eigenvalue() >= -EIGEN_TOL);
            let d = rho.coherence() / (balance * (1.0 - balance)).sqrt().max(f64::MIN_POSITIVE);
            proptest::prop_assert!(balance == 0.0 || balance == 1.0 || d.norm() <= 1.0 + 1e-12);
        }
    }
}
