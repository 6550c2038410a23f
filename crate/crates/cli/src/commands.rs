use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;

use foldspdc::config::{Source, SourceConfig};
use foldspdc::counting::{
    power_sweep, run_montecarlo, state_fidelity_from_visibility, write_rates_csv, write_timetags_csv,
};
use foldspdc::dispersion::Catalog;
use foldspdc::phasecomp::{
    flatness_at, linspace_nm, optimize_compensator_length, pi_shift_temperature, temperature_tolerance,
    total_phase_map, FlatnessReport, PhaseGrid, SpectralWindow, ThermalElement, Weighting,
};
use foldspdc::polstate::{
    correlation_scan, fidelity_from_state, fidelity_witness, fit_visibility, state_visibilities, AnalyzerSetting,
    BellTarget, PolarizationDensityMatrix, VisibilityFit, VisibilitySet,
};
use foldspdc::{Error, Result};
use serde::Serialize;

use crate::output::{Format, Sink};
use crate::{
    CorrelationArgs, ElementArg, MonteCarloArgs, OptimizeArgs, PhaseMapArgs, RatesArgs, TargetArg, TemperatureArgs,
    WeightingArg,
};

fn resolve(config: &SourceConfig) -> Result<(&'static Catalog, Source)> {
    let cat = Catalog::builtin();
    Ok((cat, config.resolve(cat)?))
}

fn describe(r: &FlatnessReport) -> String {
    format!(
        "peak-to-peak {:.6} rad, rms {:.6} rad over signal {:.3}-{:.3} nm / idler {:.3}-{:.3} nm",
        r.peak_to_peak_rad,
        r.rms_rad,
        r.window.signal_nm[0],
        r.window.signal_nm[1],
        r.window.idler_nm[0],
        r.window.idler_nm[1]
    )
}

pub fn phase_map(config: &SourceConfig, sink: &Sink, a: &PhaseMapArgs) -> Result<()> {
    let (cat, src) = resolve(config)?;
    let mut setup = src.interferometer.clone();
    if a.uncompensated {
        setup.compensator.length_mm = 0.0;
    } else if let Some(l) = a.length_mm {
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::Usage("--length-mm must be >= 0".into()));
        }
        setup.compensator.length_mm = l;
    }
    let signal = linspace_nm(src.signal.nm(), a.window, a.grid)?;
    let grid = if a.full {
        PhaseGrid::Full { signal, idler: linspace_nm(src.idler.nm(), a.window, a.grid)? }
    } else {
        PhaseGrid::Diagonal { signal }
    };
    let map = total_phase_map(cat, &setup, &grid, true)?;
    let report = map.flatness(None)?;
    let label = if setup.compensator.length_mm > 0.0 {
        format!("compensated ({} mm YVO4)", setup.compensator.length_mm)
    } else {
        "uncompensated".to_string()
    };
    let summary = format!("phase map, {label}: {}\n", describe(&report));
    let data = match sink.format {
        Format::Csv => sink.csv(&[format!("compensator_length_mm {}", setup.compensator.length_mm)], |buf| map.write_csv(buf))?,
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                compensator_length_mm: f64,
                flatness: &'a FlatnessReport,
                map: &'a foldspdc::phasecomp::PhaseMap,
            }
            sink.json(&Doc { compensator_length_mm: setup.compensator.length_mm, flatness: &report, map: &map })?
        }
    };
    sink.finish(&data, &summary)
}

#[derive(Serialize)]
struct DesignRow {
    weighting: Weighting,
    length_mm: f64,
    before: FlatnessReport,
    after: FlatnessReport,
}

pub fn optimize(config: &SourceConfig, sink: &Sink, a: &OptimizeArgs) -> Result<()> {
    let (cat, src) = resolve(config)?;
    let window = SpectralWindow {
        center_nm: src.signal.nm(),
        half_width_nm: a.window.unwrap_or(0.5 * src.filter.fwhm_nm),
        points: a.points,
    };
    let weightings: &[Weighting] = match a.weighting {
        WeightingArg::Uniform => &[Weighting::Uniform],
        WeightingArg::Spectrum => &[Weighting::SpectrumWeighted],
        WeightingArg::All => &[Weighting::Uniform, Weighting::SpectrumWeighted],
    };
    let mut rows = Vec::new();
    let mut summary = String::new();
    for &w in weightings {
        let design = optimize_compensator_length(cat, &src.interferometer, &window, w)?;
        let before = flatness_at(cat, &src.interferometer, &window, w, 0.0)?;
        let _ = writeln!(
            summary,
            "{w:?}: L* = {:.4} mm; uncompensated {}; optimized {}",
            design.length_mm,
            describe(&before),
            describe(&design.report)
        );
        rows.push(DesignRow { weighting: w, length_mm: design.length_mm, before, after: design.report });
    }
    let data = match sink.format {
        Format::Csv => sink.csv(&["before = no compensator, after = optimized length".into()], |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["weighting", "length_mm", "before_ptp_rad", "before_rms_rad", "after_ptp_rad", "after_rms_rad"])?;
            for r in &rows {
                let name = match r.weighting {
                    Weighting::Uniform => "uniform",
                    Weighting::SpectrumWeighted => "spectrum_weighted",
                };
                w.write_record([
                    name.to_string(),
                    r.length_mm.to_string(),
                    r.before.peak_to_peak_rad.to_string(),
                    r.before.rms_rad.to_string(),
                    r.after.peak_to_peak_rad.to_string(),
                    r.after.rms_rad.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?,
        Format::Json => sink.json(&rows)?,
    };
    sink.finish(&data, &summary)
}

#[derive(Serialize)]
struct Curve {
    theta_b_deg: f64,
    theta_a_deg: Vec<f64>,
    probability: Vec<f64>,
    fit: VisibilityFit,
}

#[derive(Serialize)]
struct CorrelationDoc {
    target: BellTarget,
    yvo_detune_k: f64,
    curves: Vec<Curve>,
    visibilities: VisibilitySet,
    witness_fidelity: f64,
    state_fidelity: f64,
    density_matrix: PolarizationDensityMatrix,
}

pub fn correlations(config: &SourceConfig, sink: &Sink, a: &CorrelationArgs) -> Result<()> {
    if a.basis_angles.is_empty() {
        return Err(Error::Usage("no --basis-angle given".into()));
    }
    if !(a.step_deg > 0.0 && a.step_deg <= 45.0) {
        return Err(Error::Usage("--step-deg must lie in (0, 45]".into()));
    }
    let (cat, src) = resolve(config)?;
    let target = match a.target {
        TargetArg::PhiPlus => BellTarget::PhiPlus,
        TargetArg::PhiMinus => BellTarget::PhiMinus,
    };
    let rho = src.state(cat, a.yvo_detune)?;
    let n = (180.0 / a.step_deg).ceil() as usize;
    let grid: Vec<f64> = (0..n).map(|k| k as f64 * a.step_deg).filter(|t| *t < 180.0).collect();
    let mut curves = Vec::new();
    let mut summary = String::new();
    for &tb in &a.basis_angles {
        let probability = correlation_scan(&rho, &AnalyzerSetting::linear(tb), &grid)?;
        let fit = fit_visibility(&grid, &probability)?;
        let _ = writeln!(summary, "θ_B = {tb:>6.1}°: V = {:.4}, θ0 = {:.2}°", fit.visibility, fit.theta0_deg);
        curves.push(Curve { theta_b_deg: tb, theta_a_deg: grid.clone(), probability, fit });
    }
    let visibilities = state_visibilities(&rho);
    let witness = fidelity_witness(&visibilities, target)?;
    let exact = fidelity_from_state(&rho, target);
    let _ = writeln!(
        summary,
        "V_HV = {:.4}, V_DA = {:.4}, V_LR = {:.4}; witness F({target}) = {witness:.4}; <{target}|rho|{target}> = {exact:.4}",
        visibilities.v_hv, visibilities.v_da, visibilities.v_lr
    );
    let data = match sink.format {
        Format::Csv => {
            let notes = [
                format!("target {target}"),
                format!("yvo_detune_k {}", a.yvo_detune),
                format!("v_hv {}", visibilities.v_hv),
                format!("v_da {}", visibilities.v_da),
                format!("v_lr {}", visibilities.v_lr),
                format!("witness_fidelity {witness}"),
                format!("state_fidelity {exact}"),
            ];
            sink.csv(&notes, |buf| {
                let mut w = csv::Writer::from_writer(buf);
                w.write_record(["theta_b_deg", "theta_a_deg", "probability", "fit_visibility", "fit_theta0_deg"])?;
                for c in &curves {
                    for (t, p) in c.theta_a_deg.iter().zip(&c.probability) {
                        w.write_record(
                            [c.theta_b_deg, *t, *p, c.fit.visibility, c.fit.theta0_deg].map(|v| v.to_string()),
                        )?;
                    }
                }
                w.flush()?;
                Ok(())
            })?
        }
        Format::Json => sink.json(&CorrelationDoc {
            target,
            yvo_detune_k: a.yvo_detune,
            curves,
            visibilities,
            witness_fidelity: witness,
            state_fidelity: exact,
            density_matrix: rho,
        })?,
    };
    sink.finish(&data, &summary)
}

/// Visibility whose Werner-state fidelity matches the modeled state.
fn model_visibility(cat: &Catalog, src: &Source) -> Result<f64> {
    let f = fidelity_from_state(&src.state(cat, 0.0)?, BellTarget::PhiPlus);
    Ok(((4.0 * f - 1.0) / 3.0).clamp(0.0, 1.0))
}

pub fn rates(config: &SourceConfig, sink: &Sink, a: &RatesArgs) -> Result<()> {
    let (cat, src) = resolve(config)?;
    let windows: Vec<f64> = if a.windows.is_empty() {
        vec![src.detection.tau_cc_s]
    } else {
        if a.windows.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Usage("--windows must be > 0 ns".into()));
        }
        a.windows.iter().map(|ns| ns * 1e-9).collect()
    };
    let v = match a.visibility {
        Some(v) => v,
        None => model_visibility(cat, &src)?,
    };
    let reports = power_sweep(&a.powers, &src.brightness, &src.detection, &windows, v)?;
    let mut summary = format!(
        "brightness {:.4e} pairs/s/mW, eta_s {:.4}, eta_i {:.4}, state visibility {v:.4} (F_state {:.4})\n",
        src.brightness.pairs_per_mw,
        src.detection.eta_s,
        src.detection.eta_i,
        state_fidelity_from_visibility(v)
    );
    for r in &reports {
        let _ = writeln!(
            summary,
            "{:>10.4} mW, {:>5.2} ns: twofold {:.1} cps, accidentals {:.2} cps, F_raw {:.4}",
            r.power_mw,
            r.tau_cc_s * 1e9,
            r.detected_twofold,
            r.accidentals,
            r.raw_fidelity
        );
    }
    let data = match sink.format {
        Format::Csv => sink.csv(&[], |buf| write_rates_csv(&reports, buf))?,
        Format::Json => sink.json(&reports)?,
    };
    sink.finish(&data, &summary)
}

pub fn montecarlo(config: &SourceConfig, sink: &Sink, a: &MonteCarloArgs) -> Result<()> {
    let (_, src) = resolve(config)?;
    let power = a.power.or(config.calibration.map(|c| c.power_mw)).unwrap_or(0.0104);
    let (summary_data, s, i) = run_montecarlo(power, &src.brightness, &src.detection, a.duration, a.seed)?;
    if let Some(path) = &a.timetags {
        write_timetags_csv(&[&s, &i], BufWriter::new(File::create(path)?))?;
    }
    let mut summary = format!(
        "{power} mW for {} s (seed {}), window {:.2} ns, accidentals from a {:.2e} s delayed window\n",
        a.duration,
        a.seed,
        src.detection.tau_cc_s * 1e9,
        summary_data.accidental_delay_s
    );
    for (name, e) in summary_data.estimates() {
        let _ = writeln!(
            summary,
            "{name:>12}: MC {:.2} ± {:.2} cps, analytic {:.2} cps, z = {:+.2}{}",
            e.rate_cps,
            e.sigma_cps,
            e.analytic_cps,
            e.z_score(),
            if e.within(3.0) { "" } else { "  (outside 3σ)" }
        );
    }
    let data = match sink.format {
        Format::Csv => sink.csv(&[format!("seed {}", a.seed), format!("power_mw {power}"), format!("duration_s {}", a.duration)], |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["quantity", "counts", "rate_cps", "sigma_cps", "analytic_cps", "z_score"])?;
            for (name, e) in summary_data.estimates() {
                w.write_record([
                    name.to_string(),
                    e.counts.to_string(),
                    e.rate_cps.to_string(),
                    e.sigma_cps.to_string(),
                    e.analytic_cps.to_string(),
                    e.z_score().to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?,
        Format::Json => sink.json(&summary_data)?,
    };
    sink.finish(&data, &summary)
}

#[derive(Serialize)]
struct TemperatureReport {
    element: &'static str,
    temperature_c: f64,
    slope_rad_per_k: f64,
    delta_t_pi_k: f64,
    fidelity_target: f64,
    delta_t_max_k: f64,
}

pub fn temperature(config: &SourceConfig, sink: &Sink, a: &TemperatureArgs) -> Result<()> {
    let (cat, src) = resolve(config)?;
    let setup = &src.interferometer;
    let (name, element) = match a.element {
        ElementArg::Yvo => ("yvo", ThermalElement::Compensator(setup.compensator.clone())),
        ElementArg::Ktp => (
            "ktp",
            ThermalElement::Crystal { crystal: setup.crystal.clone(), temperature: setup.crystal_temperature },
        ),
    };
    let slope = element.phase_slope(cat, src.signal, src.idler)?;
    let report = TemperatureReport {
        element: name,
        temperature_c: element.temperature().as_celsius(),
        slope_rad_per_k: slope,
        delta_t_pi_k: pi_shift_temperature(cat, &element, src.signal, src.idler, a.max_delta)?,
        fidelity_target: a.fidelity_target,
        delta_t_max_k: temperature_tolerance(cat, &element, src.signal, src.idler, a.fidelity_target)?,
    };
    let summary = format!(
        "{name} at {:.4} °C: dφ/dT = {:.4} rad/K, ΔT_π = {:.4} K, ΔT_max(F = {}) = ±{:.4} K\n",
        report.temperature_c, slope, report.delta_t_pi_k, a.fidelity_target, report.delta_t_max_k
    );
    let data = match sink.format {
        Format::Csv => sink.csv(&[], |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.serialize(&report)?;
            w.flush()?;
            Ok(())
        })?,
        Format::Json => sink.json(&report)?,
    };
    sink.finish(&data, &summary)
}
