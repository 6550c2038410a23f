use nalgebra::{Matrix2, Matrix4, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::PolarizationDensityMatrix;
use super::VisibilitySet;
use crate::error::{Error, Result};

/// One polarization analyzer: an optional quarter-wave plate followed by a
/// linear polarizer. Angles in degrees from H.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub theta_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qwp_deg: Option<f64>,
}

impl AnalyzerSetting {
    pub fn linear(theta_deg: f64) -> Self {
        AnalyzerSetting { theta_deg, qwp_deg: None }
    }

    pub fn circular(theta_deg: f64) -> Self {
        AnalyzerSetting { theta_deg, qwp_deg: Some(45.0) }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_deg.is_finite() || self.qwp_deg.is_some_and(|q| !q.is_finite()) {
            return Err(Error::domain("analyzer angles must be finite"));
        }
        Ok(())
    }

    /// `Π = J†|θ⟩⟨θ|J`.
    pub fn projector(&self) -> Matrix2<Complex64> {
        let t = self.theta_deg.to_radians();
        let pol = Vector2::new(Complex64::new(t.cos(), 0.0), Complex64::new(t.sin(), 0.0));
        let v = match self.qwp_deg {
            Some(q) => qwp_jones(q.to_radians()).adjoint() * pol,
            None => pol,
        };
        v * v.adjoint()
    }
}

fn rotation(a: f64) -> Matrix2<Complex64> {
    let (s, c) = a.sin_cos();
    Matrix2::new(c, -s, s, c).map(|x| Complex64::new(x, 0.0))
}

/// Quarter-wave plate with its fast axis at `alpha`: `R(α)·diag(1, i)·R(-α)`.
fn qwp_jones(alpha: f64) -> Matrix2<Complex64> {
    let retarder = Matrix2::new(Complex64::ONE, Complex64::ZERO, Complex64::ZERO, Complex64::I);
    rotation(alpha) * retarder * rotation(-alpha)
}

/// `Tr[ρ·(Π_A ⊗ Π_B)]`, clamped to [0, 1] against rounding.
pub fn coincidence_probability(
    rho: &PolarizationDensityMatrix,
    a: &AnalyzerSetting,
    b: &AnalyzerSetting,
) -> f64 {
    let op: Matrix4<Complex64> = a.projector().kronecker(&b.projector());
    rho.expectation(&op).clamp(0.0, 1.0)
}

/// Coincidence probability versus `θ_A` with the idler analyzer fixed.
pub fn correlation_scan(
    rho: &PolarizationDensityMatrix,
    setting_b: &AnalyzerSetting,
    theta_a_deg: &[f64],
) -> Result<Vec<f64>> {
    if theta_a_deg.is_empty() {
        return Err(Error::usage("angle grid is empty"));
    }
    Ok(theta_a_deg
        .iter()
        .map(|&t| coincidence_probability(rho, &AnalyzerSetting::linear(t), setting_b))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    HV,
    DA,
    LR,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::HV, Basis::DA, Basis::LR];

    /// The two outcome settings `(i, j)`.
    pub fn settings(self) -> [AnalyzerSetting; 2] {
        match self {
            Basis::HV => [AnalyzerSetting::linear(0.0), AnalyzerSetting::linear(90.0)],
            Basis::DA => [AnalyzerSetting::linear(45.0), AnalyzerSetting::linear(-45.0)],
            Basis::LR => [AnalyzerSetting::circular(0.0), AnalyzerSetting::circular(90.0)],
        }
    }

    pub fn labels(self) -> [&'static str; 2] {
        match self {
            Basis::HV => ["H", "V"],
            Basis::DA => ["D", "A"],
            Basis::LR => ["L", "R"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Basis::HV => "HV",
            Basis::DA => "DA",
            Basis::LR => "LR",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HV" | "H/V" => Ok(Basis::HV),
            "DA" | "D/A" => Ok(Basis::DA),
            "LR" | "L/R" => Ok(Basis::LR),
            _ => Err(Error::usage(format!("unknown basis '{s}' (expected HV, DA or LR)"))),
        }
    }
}

/// Joint outcome probabilities `[p_ii, p_ij, p_ji, p_jj]` in `basis`.
pub fn basis_probabilities(rho: &PolarizationDensityMatrix, basis: Basis) -> [f64; 4] {
    let [i, j] = basis.settings();
    [
        coincidence_probability(rho, &i, &i),
        coincidence_probability(rho, &i, &j),
        coincidence_probability(rho, &j, &i),
        coincidence_probability(rho, &j, &j),
    ]
}

/// Visibilities a perfect measurement of `rho` would return.
pub fn state_visibilities(rho: &PolarizationDensityMatrix) -> VisibilitySet {
    let v = |b| {
        let [ii, ij, ji, jj] = basis_probabilities(rho, b);
        (ii + jj - ij - ji) / (ii + jj + ij + ji)
    };
    VisibilitySet { v_hv: v(Basis::HV), v_da: v(Basis::DA), v_lr: v(Basis::LR), corrected: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polstate::{fidelity_witness, BellTarget};
    use proptest::prelude::*;

    fn phi_plus() -> PolarizationDensityMatrix {
        PolarizationDensityMatrix::bell(BellTarget::PhiPlus)
    }

    #[test]
    fn reference_probabilities() {
        let p = coincidence_probability(&phi_plus(), &AnalyzerSetting::linear(0.0), &AnalyzerSetting::linear(0.0));
        assert!((p - 0.5).abs() < 1e-15);
        // ⟨D,A|Φ+⟩ = 0 pins the sign convention.
        let p = coincidence_probability(&phi_plus(), &AnalyzerSetting::linear(45.0), &AnalyzerSetting::linear(-45.0));
        assert!(p.abs() < 1e-15);
        let mixed = PolarizationDensityMatrix::maximally_mixed();
        for (a, b) in [(0.0, 0.0), (13.0, -71.0), (45.0, 90.0)] {
            let p = coincidence_probability(&mixed, &AnalyzerSetting::linear(a), &AnalyzerSetting::circular(b));
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn circular_settings_project_on_l_and_r() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let l = Vector2::new(Complex64::new(s, 0.0), Complex64::new(0.0, s));
        let pl = AnalyzerSetting::circular(0.0).projector();
        assert!((pl - l * l.adjoint()).norm() < 1e-15);
        let pr = AnalyzerSetting::circular(90.0).projector();
        assert!((pl + pr - Matrix2::identity()).norm() < 1e-15);
    }

    #[test]
    fn scans_peak_where_expected() {
        let grid: Vec<f64> = (0..36).map(|k| 5.0 * k as f64).collect();
        let curve = correlation_scan(&phi_plus(), &AnalyzerSetting::linear(0.0), &grid).unwrap();
        assert!((curve[0] - 0.5).abs() < 1e-15);
        assert!(curve[18].abs() < 1e-15);
        let curve = correlation_scan(&phi_plus(), &AnalyzerSetting::linear(45.0), &grid).unwrap();
        let imax = (0..36).max_by(|&a, &b| curve[a].total_cmp(&curve[b])).unwrap();
        assert_eq!(grid[imax], 45.0);
        assert!(correlation_scan(&phi_plus(), &AnalyzerSetting::linear(0.0), &[]).is_err());
    }

    #[test]
    fn bell_visibilities_follow_phi_plus_convention() {
        let v = state_visibilities(&phi_plus());
        assert!((v.v_hv - 1.0).abs() < 1e-14);
        assert!((v.v_da - 1.0).abs() < 1e-14);
        assert!((v.v_lr + 1.0).abs() < 1e-14);
        assert!((fidelity_witness(&v, BellTarget::PhiPlus).unwrap() - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn scans_have_period_pi(theta_b in -90.0f64..90.0, theta_a in 0.0f64..180.0, phi in -3.2f64..3.2) {
            let rho = PolarizationDensityMatrix::psi(phi);
            let b = AnalyzerSetting::linear(theta_b);
            let c = correlation_scan(&rho, &b, &[theta_a, theta_a + 180.0]).unwrap();
            prop_assert!((c[0] - c[1]).abs() < 1e-12);
            // Uniform marginals bound every coincidence probability by 1/2.
            prop_assert!(c[0] <= 0.5 + 1e-12);
        }

        #[test]
        fn balanced_family_visibilities(phi in -3.2f64..3.2, mag in 0.0f64..=1.0) {
            let d = Complex64::from_polar(mag, phi);
            let rho = PolarizationDensityMatrix::from_coherence(0.5, d).unwrap();
            let v = state_visibilities(&rho);
            prop_assert!((v.v_hv - 1.0).abs() < 1e-12);
            prop_assert!((v.v_da - d.re).abs() < 1e-12);
            prop_assert!((v.v_lr + d.re).abs() < 1e-12);
        }
    }
}
