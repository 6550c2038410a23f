use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Detector dead time used when none is configured, s.
///
/// Not a measured value: chosen so the twofold rate bends away from linear in
/// the low-mW range.
pub const DEFAULT_DEAD_TIME_S: f64 = 22e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub eta_s: f64,
    pub eta_i: f64,
    pub dark_s_cps: f64,
    pub dark_i_cps: f64,
    pub tau_cc_s: f64,
    #[serde(default = "default_dead_time")]
    pub tau_dead_s: f64,
    /// Transmission of each polarization analyzer.
    pub analyzer_transmission: f64,
}

fn default_dead_time() -> f64 {
    DEFAULT_DEAD_TIME_S
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_s", self.eta_s), ("eta_i", self.eta_i), ("analyzer_transmission", self.analyzer_transmission)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("detection.{name} must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("dark_s_cps", self.dark_s_cps),
            ("dark_i_cps", self.dark_i_cps),
            ("tau_cc_s", self.tau_cc_s),
            ("tau_dead_s", self.tau_dead_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("detection.{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_window(self, tau_cc_s: f64) -> Self {
        DetectionConfig { tau_cc_s, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceBrightness {
    /// Pairs generated per second per mW of pump at the crystal.
    pub pairs_per_mw: f64,
    pub spectral_fwhm_nm: f64,
}

impl SourceBrightness {
    pub fn validate(&self) -> Result<()> {
        if !(self.pairs_per_mw.is_finite() && self.pairs_per_mw > 0.0) {
            return Err(Error::Config("brightness.pairs_per_mw must be > 0".into()));
        }
        if !(self.spectral_fwhm_nm.is_finite() && self.spectral_fwhm_nm > 0.0) {
            return Err(Error::Config("brightness.spectral_fwhm_nm must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub power_mw: f64,
    pub tau_cc_s: f64,
    pub singles_s: f64,
    pub singles_i: f64,
    /// Detected pair coincidences, after dead-time losses.
    pub true_coincidences: f64,
    pub accidentals: f64,
    pub detected_twofold: f64,
    pub raw_fidelity: f64,
}

/// Non-paralyzable dead time: `R/(1 + R·τ)`.
pub fn saturate(rate: f64, tau_dead_s: f64) -> f64 {
    rate / (1.0 + rate * tau_dead_s)
}

/// `R_s·R_i·τ`.
pub fn accidental_rate(singles_s: f64, singles_i: f64, tau_cc_s: f64) -> f64 {
    singles_s * singles_i * tau_cc_s
}

/// Fidelity of a Werner-like state with visibility `v`: `(1 + 3v)/4`.
pub fn state_fidelity_from_visibility(v: f64) -> f64 {
    (1.0 + 3.0 * v) / 4.0
}

/// Closed-form rates at `power_mw`.
///
/// * generated pairs `R_g = P·pairs_per_mw`
/// * singles `S = x/(1 + xτ_d)` with `x = R_g·η·T + dark`
/// * true pairs before dead time `C = R_g·η_s·η_i·T²`
/// * detected pairs `C·l_s·l_i/(1 - C·τ_d)` where `l = 1/(1 + xτ_d)` is each
///   detector's live fraction; the denominator accounts for both detectors
///   going dead together after a detected pair
/// * accidentals `A = S_s·S_i·τ_cc`, assumed unpolarized (fidelity 1/4)
/// * twofold `min(C_det + A, S_s, S_i)`
pub fn analytic_rates(
    power_mw: f64,
    source: &SourceBrightness,
    det: &DetectionConfig,
    state_visibility: f64,
) -> Result<RateReport> {
    if !(power_mw.is_finite() && power_mw >= 0.0) {
        return Err(Error::domain(format!("pump power must be >= 0, got {power_mw}")));
    }
    if !(0.0..=1.0).contains(&state_visibility) {
        return Err(Error::domain("state visibility must lie in [0, 1]"));
    }
    source.validate()?;
    det.validate()?;
    let t = det.analyzer_transmission;
    let generated = power_mw * source.pairs_per_mw;
    let xs = generated * det.eta_s * t + det.dark_s_cps;
    let xi = generated * det.eta_i * t + det.dark_i_cps;
    let (ls, li) = (1.0 / (1.0 + xs * det.tau_dead_s), 1.0 / (1.0 + xi * det.tau_dead_s));
    let (ss, si) = (xs * ls, xi * li);
    let c = generated * det.eta_s * det.eta_i * t * t;
    let c_det = c * ls * li / (1.0 - c * det.tau_dead_s).max(f64::MIN_POSITIVE);
    let c_det = c_det.min(ss.min(si));
    let acc = accidental_rate(ss, si, det.tau_cc_s);
    let twofold = (c_det + acc).min(ss.min(si));
    let f_state = state_fidelity_from_visibility(state_visibility);
    let raw_fidelity = if c_det + acc > 0.0 { (f_state * c_det + 0.25 * acc) / (c_det + acc) } else { f_state };
    Ok(RateReport {
        power_mw,
        tau_cc_s: det.tau_cc_s,
        singles_s: ss,
        singles_i: si,
        true_coincidences: c_det,
        accidentals: acc,
        detected_twofold: twofold,
        raw_fidelity,
    })
}

/// A measured operating point used to fix brightness and path efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub power_mw: f64,
    pub singles_s_cps: f64,
    pub singles_i_cps: f64,
    pub twofold_cps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub pairs_per_mw: f64,
    pub eta_s: f64,
    pub eta_i: f64,
}

/// Inverts [`analytic_rates`] at one operating point: given darks, windows
/// and analyzer transmission from `det`, solves for the generated pair rate
/// and both path efficiencies so the model reproduces the point exactly.
pub fn calibrate(point: &CalibrationPoint, det: &DetectionConfig) -> Result<Calibration> {
    det.validate()?;
    let p = point;
    if !(p.power_mw > 0.0) {
        return Err(Error::domain("calibration power must be > 0"));
    }
    let td = det.tau_dead_s;
    let live_input = |s: f64, dark: f64| -> Result<(f64, f64)> {
        if !(s > 0.0 && s * td < 1.0) {
            return Err(Error::domain("calibration singles rate is not reachable with this dead time"));
        }
        let x = s / (1.0 - s * td);
        if x <= dark {
            return Err(Error::domain("calibration singles rate does not exceed the dark rate"));
        }
        Ok((x - dark, 1.0 / (1.0 + x * td)))
    };
    let (a_s, ls) = live_input(p.singles_s_cps, det.dark_s_cps)?;
    let (a_i, li) = live_input(p.singles_i_cps, det.dark_i_cps)?;
    let c_det = p.twofold_cps - accidental_rate(p.singles_s_cps, p.singles_i_cps, det.tau_cc_s);
    if !(c_det > 0.0) {
        return Err(Error::domain("calibration twofold rate does not exceed the accidental rate"));
    }
    let c = c_det / (ls * li + c_det * td);
    let t = det.analyzer_transmission;
    if !(t > 0.0) {
        return Err(Error::domain("analyzer transmission must be > 0 to calibrate"));
    }
    let generated = a_s * a_i / c;
    let cal = Calibration {
        pairs_per_mw: generated / p.power_mw,
        eta_s: a_s / (generated * t),
        eta_i: a_i / (generated * t),
    };
    if cal.eta_s > 1.0 || cal.eta_i > 1.0 {
        return Err(Error::domain("calibration implies a path efficiency above 1"));
    }
    Ok(cal)
}

/// Rates for every `(τ_cc, power)` pair, grouped by window.
pub fn power_sweep(
    powers_mw: &[f64],
    source: &SourceBrightness,
    det: &DetectionConfig,
    windows_s: &[f64],
    state_visibility: f64,
) -> Result<Vec<RateReport>> {
    if powers_mw.is_empty() {
        return Err(Error::usage("power list is empty"));
    }
    if windows_s.is_empty() {
        return Err(Error::usage("coincidence window list is empty"));
    }
    let mut out = Vec::with_capacity(powers_mw.len() * windows_s.len());
    for &tau in windows_s {
        let d = det.with_window(tau);
        for &p in powers_mw {
            out.push(analytic_rates(p, source, &d, state_visibility)?);
        }
    }
    Ok(out)
}

pub const RATE_COLUMNS: [&str; 7] =
    ["power_mw", "tau_cc_ns", "singles_s", "singles_i", "twofold", "accidentals", "raw_fidelity"];

pub fn write_rates_csv<W: Write>(reports: &[RateReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATE_COLUMNS)?;
    for r in reports {
        w.write_record(
            [r.power_mw, r.tau_cc_s * 1e9, r.singles_s, r.singles_i, r.detected_twofold, r.accidentals, r.raw_fidelity]
                .map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det() -> DetectionConfig {
        DetectionConfig {
            eta_s: 0.2,
            eta_i: 0.3,
            dark_s_cps: 300.0,
            dark_i_cps: 300.0,
            tau_cc_s: 3.2e-9,
            tau_dead_s: DEFAULT_DEAD_TIME_S,
            analyzer_transmission: 0.9,
        }
    }

    fn src() -> SourceBrightness {
        SourceBrightness { pairs_per_mw: 2.0e7, spectral_fwhm_nm: 2.9 }
    }

    #[test]
    fn saturation_reference_points() {
        assert_eq!(saturate(1234.5, 0.0), 1234.5);
        assert_eq!(saturate(1e8, 1e-8), 0.5e8);
        assert_eq!(accidental_rate(61e3, 88e3, 0.0), 0.0);
        assert!((accidental_rate(61e3, 88e3, 3.2e-9) - 17.18).abs() < 0.1);
        let a = accidental_rate(1e4, 2e4, 1e-9);
        assert!((accidental_rate(2e4, 4e4, 1e-9) - 4.0 * a).abs() < 1e-12);
    }

    #[test]
    fn zero_power_sees_only_darks() {
        let r = analytic_rates(0.0, &src(), &det(), 1.0).unwrap();
        assert_eq!(r.singles_s, saturate(300.0, DEFAULT_DEAD_TIME_S));
        assert_eq!(r.true_coincidences, 0.0);
        assert_eq!(r.detected_twofold, r.accidentals);
        assert_eq!(r.raw_fidelity, 0.25);
    }

    #[test]
    fn calibration_round_trip() {
        let point = CalibrationPoint { power_mw: 0.0104, singles_s_cps: 61e3, singles_i_cps: 88e3, twofold_cps: 11.8e3 };
        let cal = calibrate(&point, &det()).unwrap();
        let d = DetectionConfig { eta_s: cal.eta_s, eta_i: cal.eta_i, ..det() };
        let s = SourceBrightness { pairs_per_mw: cal.pairs_per_mw, ..src() };
        let r = analytic_rates(0.0104, &s, &d, 1.0).unwrap();
        assert!((r.detected_twofold / 11.8e3 - 1.0).abs() < 1e-9);
        assert!((r.singles_s / 61e3 - 1.0).abs() < 1e-9);
        assert!((r.singles_i / 88e3 - 1.0).abs() < 1e-9);
        assert!((r.accidentals - 17.18).abs() < 0.1);
        let bad = CalibrationPoint { twofold_cps: 1.0, ..point };
        assert!(calibrate(&bad, &det()).is_err());
    }

    #[test]
    fn sweep_layout_and_errors() {
        let one = power_sweep(&[0.5], &src(), &det(), &[3.2e-9], 0.99).unwrap();
        assert_eq!(one, vec![analytic_rates(0.5, &src(), &det(), 0.99).unwrap()]);
        let two = power_sweep(&[0.1, 0.2, 0.3], &src(), &det(), &[5e-10, 3.2e-9], 0.99).unwrap();
        assert_eq!(two.len(), 6);
        assert!(two[..3].iter().all(|r| r.tau_cc_s == 5e-10));
        assert!(power_sweep(&[], &src(), &det(), &[3.2e-9], 0.99).is_err());
        assert!(power_sweep(&[1.0], &src(), &det(), &[], 0.99).is_err());
        let mut buf = Vec::new();
        write_rates_csv(&two, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("power_mw,tau_cc_ns,singles_s,singles_i,twofold,accidentals,raw_fidelity\n"));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn low_power_is_linear() {
        let d = DetectionConfig { dark_s_cps: 0.0, dark_i_cps: 0.0, ..det() };
        let powers: Vec<f64> = (1..=10).map(|k| 1e-3 * k as f64).collect();
        let rates = power_sweep(&powers, &src(), &d, &[3.2e-9], 1.0).unwrap();
        let slope = rates[0].detected_twofold / powers[0];
        for r in &rates {
            assert!((r.detected_twofold / (slope * r.power_mw) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn accidental_free_limit_recovers_state_fidelity() {
        let d = DetectionConfig { dark_s_cps: 0.0, dark_i_cps: 0.0, ..det() };
        let f_state = state_fidelity_from_visibility(0.98);
        let mut prev = f64::INFINITY;
        for p in [1e-2, 1e-4, 1e-6, 1e-8] {
            let gap = f_state - analytic_rates(p, &src(), &d, 0.98).unwrap().raw_fidelity;
            assert!(gap >= 0.0 && gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-9);
    }

    proptest! {
        #[test]
        fn saturate_is_monotone_concave_and_bounded(r in 0.0f64..1e9, dr in 1.0f64..1e6, td in 1e-10f64..1e-6) {
            let (a, b, c) = (saturate(r, td), saturate(r + dr, td), saturate(r + 2.0 * dr, td));
            prop_assert!(b > a);
            prop_assert!(b - a >= c - b - 1e-6 * b);
            prop_assert!(a <= r.min(1.0 / td));
        }

        #[test]
        fn fidelity_nonincreasing_and_short_window_dominates(p in 1e-3f64..5.0, k in 1.01f64..3.0, v in 0.9f64..1.0) {
            let short = det().with_window(5e-10);
            let lo = analytic_rates(p, &src(), &det(), v).unwrap();
            let hi = analytic_rates(p * k, &src(), &det(), v).unwrap();
            prop_assert!(hi.raw_fidelity <= lo.raw_fidelity + 1e-12);
            prop_assert!(analytic_rates(p, &src(), &short, v).unwrap().raw_fidelity >= lo.raw_fidelity);
            prop_assert!(lo.detected_twofold <= lo.singles_s.min(lo.singles_i));
        }
    }
}
