use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::WaveplateStack;
use crate::dispersion::{Axis, Catalog, MaterialName};
use crate::error::{Error, Result};
use crate::phasematch::{check_grid, idler_wavelength, CrystalSpec, LENGTH_REFERENCE_C};
use crate::units::{Temperature, Wavelength};

fn default_yvo_expansion() -> f64 {
    // a-axis expansion; the compensator propagates perpendicular to c.
    4.43e-6
}

/// The YVO₄ compensation crystal. A zero length means "no compensator".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensatorSpec {
    pub length_mm: f64,
    pub temperature: Temperature,
    #[serde(default = "default_yvo_expansion")]
    pub thermal_expansion_per_k: f64,
}

impl CompensatorSpec {
    pub fn yvo4(length_mm: f64, temperature: Temperature) -> Result<Self> {
        let spec = CompensatorSpec {
            length_mm,
            temperature,
            thermal_expansion_per_k: default_yvo_expansion(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_mm.is_finite() && self.length_mm >= 0.0) {
            return Err(Error::domain(format!("compensator length must be >= 0 mm, got {}", self.length_mm)));
        }
        Ok(())
    }

    pub fn length_um_at(&self, temperature: Temperature) -> f64 {
        self.length_mm
            * 1e3
            * (1.0 + self.thermal_expansion_per_k * (temperature.as_celsius() - LENGTH_REFERENCE_C))
    }

    pub fn with_length(&self, length_mm: f64) -> Self {
        CompensatorSpec { length_mm, ..self.clone() }
    }

    pub fn at_temperature(&self, temperature: Temperature) -> Self {
        CompensatorSpec { temperature, ..self.clone() }
    }
}

/// Double-pass relative phase without compensation:
/// `2πL [n_y(λi)/λi + n_y(λs)/λs] + 2 [Γ(λs) + Γ(λi)]`.
///
/// The pump phase term is a wavelength-independent constant under a
/// monochromatic pump and is taken as zero.
pub fn uncompensated_phase(
    catalog: &Catalog,
    signal: Wavelength,
    idler: Wavelength,
    crystal: &CrystalSpec,
    waveplate: &WaveplateStack,
    temperature: Temperature,
) -> Result<f64> {
    let crystal_part = crystal_phase(catalog, signal, idler, crystal, temperature)?;
    let wp = waveplate.retardation(catalog, signal)? + waveplate.retardation(catalog, idler)?;
    Ok(crystal_part + 2.0 * wp)
}

/// The `n_y` term of the uncompensated phase alone.
pub(crate) fn crystal_phase(
    catalog: &Catalog,
    signal: Wavelength,
    idler: Wavelength,
    crystal: &CrystalSpec,
    temperature: Temperature,
) -> Result<f64> {
    let ny = catalog.model(crystal.material, Axis::Y)?;
    let k = |w: Wavelength| -> Result<f64> { Ok(ny.refractive_index(w, temperature)? / w.um()) };
    Ok(2.0 * PI * crystal.length_um_at(temperature) * (k(idler)? + k(signal)?))
}

/// Phase added by the YVO₄ compensator:
/// `2π L [n_o(λs)/λs + n_o(λi)/λi - (n_e(λs)/λs + n_e(λi)/λi)]`.
pub fn compensation_phase(
    catalog: &Catalog,
    signal: Wavelength,
    idler: Wavelength,
    compensator: &CompensatorSpec,
) -> Result<f64> {
    let length = compensator.length_um_at(compensator.temperature);
    Ok(length * compensation_phase_per_um(catalog, signal, idler, compensator.temperature)?)
}

/// Compensation phase per micrometre of (thermally expanded) YVO₄.
pub(crate) fn compensation_phase_per_um(
    catalog: &Catalog,
    signal: Wavelength,
    idler: Wavelength,
    temperature: Temperature,
) -> Result<f64> {
    let o = catalog.model(MaterialName::YVO4, Axis::Ordinary)?;
    let e = catalog.model(MaterialName::YVO4, Axis::Extraordinary)?;
    let term = |w: Wavelength| -> Result<f64> {
        Ok(crate::dispersion::birefringence(o, e, w, temperature)? / w.um())
    };
    Ok(2.0 * PI * (term(signal)? + term(idler)?))
}

/// Everything that shapes the relative phase of the two emission passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferometer {
    pub pump: Wavelength,
    pub crystal: CrystalSpec,
    pub crystal_temperature: Temperature,
    pub waveplate: WaveplateStack,
    pub compensator: CompensatorSpec,
}

impl Interferometer {
    pub fn uncompensated(&self, catalog: &Catalog, signal: Wavelength, idler: Wavelength) -> Result<f64> {
        uncompensated_phase(catalog, signal, idler, &self.crystal, &self.waveplate, self.crystal_temperature)
    }

    pub fn compensation(&self, catalog: &Catalog, signal: Wavelength, idler: Wavelength) -> Result<f64> {
        compensation_phase(catalog, signal, idler, &self.compensator)
    }

    pub fn total(&self, catalog: &Catalog, signal: Wavelength, idler: Wavelength) -> Result<f64> {
        Ok(self.uncompensated(catalog, signal, idler)? + self.compensation(catalog, signal, idler)?)
    }

    /// Total phase along the energy-conserving line, as a function of the signal.
    pub fn total_diagonal(&self, catalog: &Catalog, signal: Wavelength) -> Result<f64> {
        let idler = idler_wavelength(self.pump, signal)?;
        self.total(catalog, signal, idler)
    }

    pub fn with_compensator(&self, compensator: CompensatorSpec) -> Self {
        Interferometer { compensator, ..self.clone() }
    }
}

/// Sampling of the (signal, idler) plane.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseGrid {
    /// Energy-conserving line: each idler follows from its signal.
    Diagonal { signal: Vec<Wavelength> },
    /// Independent signal and idler axes.
    Full { signal: Vec<Wavelength>, idler: Vec<Wavelength> },
}

impl PhaseGrid {
    /// `points` signal wavelengths evenly spaced over `center ± half_width`.
    pub fn diagonal_window(center_nm: f64, half_width_nm: f64, points: usize) -> Result<Self> {
        Ok(PhaseGrid::Diagonal { signal: linspace_nm(center_nm, half_width_nm, points)? })
    }
}

/// Evenly spaced wavelengths over `center ± half_width`; a single point sits at `center`.
pub fn linspace_nm(center_nm: f64, half_width_nm: f64, points: usize) -> Result<Vec<Wavelength>> {
    if points == 0 {
        return Err(Error::usage("grid needs at least one point"));
    }
    if !(half_width_nm >= 0.0) {
        return Err(Error::usage("window half-width must be >= 0"));
    }
    if points == 1 {
        return Ok(vec![Wavelength::from_nm(center_nm)?]);
    }
    if half_width_nm == 0.0 {
        return Err(Error::usage("a zero-width window holds a single point"));
    }
    let lo = center_nm - half_width_nm;
    let step = 2.0 * half_width_nm / (points - 1) as f64;
    (0..points).map(|k| Wavelength::from_nm(lo + step * k as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapLayout {
    Diagonal,
    Grid,
}

/// Relative phase sampled over a signal/idler window.
///
/// For [`MapLayout::Diagonal`] the grids have equal length and `phase_rad[k]`
/// belongs to `(signal_nm[k], idler_nm[k])`. For [`MapLayout::Grid`]
/// `phase_rad` is row-major with one row per signal wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMap {
    pub layout: MapLayout,
    pub signal_nm: Vec<f64>,
    pub idler_nm: Vec<f64>,
    pub phase_rad: Vec<f64>,
    pub offset_subtracted: bool,
}

impl PhaseMap {
    pub fn len(&self) -> usize {
        self.phase_rad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase_rad.is_empty()
    }

    /// Phase at signal index `row`, idler index `col` (grid layout), or at
    /// point `row` when diagonal (where `col` must equal `row`).
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        match self.layout {
            MapLayout::Diagonal => (row == col).then(|| self.phase_rad.get(row).copied()).flatten(),
            MapLayout::Grid => {
                if col >= self.idler_nm.len() {
                    return None;
                }
                self.phase_rad.get(row * self.idler_nm.len() + col).copied()
            }
        }
    }

    /// `(signal_nm, idler_nm, phase_rad)` triples in storage order.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        match self.layout {
            MapLayout::Diagonal => self
                .signal_nm
                .iter()
                .zip(&self.idler_nm)
                .zip(&self.phase_rad)
                .map(|((&s, &i), &p)| (s, i, p))
                .collect(),
            MapLayout::Grid => {
                let cols = self.idler_nm.len();
                self.phase_rad
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| (self.signal_nm[k / cols], self.idler_nm[k % cols], p))
                    .collect()
            }
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["signal_nm", "idler_nm", "phase_rad"])?;
        for (s, i, p) in self.points() {
            w.write_record([s.to_string(), i.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn flatness(&self, weights: Option<&[f64]>) -> Result<FlatnessReport> {
        let weighting = if weights.is_some() { Weighting::SpectrumWeighted } else { Weighting::Uniform };
        let (ptp, rms) = flatness_stats(&self.phase_rad, weights)?;
        Ok(FlatnessReport {
            peak_to_peak_rad: ptp,
            rms_rad: rms,
            window: FlatnessWindow {
                signal_nm: min_max(&self.signal_nm),
                idler_nm: min_max(&self.idler_nm),
            },
            weighting,
        })
    }
}

fn min_max(v: &[f64]) -> [f64; 2] {
    [
        v.iter().cloned().fold(f64::INFINITY, f64::min),
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    SpectrumWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessWindow {
    pub signal_nm: [f64; 2],
    pub idler_nm: [f64; 2],
}

/// Spread of a phase profile. `rms_rad` is the (optionally weighted)
/// standard deviation about the mean, so it never exceeds half the peak-to-peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub peak_to_peak_rad: f64,
    pub rms_rad: f64,
    pub window: FlatnessWindow,
    pub weighting: Weighting,
}

pub(crate) fn flatness_stats(values: &[f64], weights: Option<&[f64]>) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::usage("flatness of an empty phase profile"));
    }
    let [lo, hi] = min_max(values);
    let uniform;
    let w = match weights {
        Some(w) => {
            if w.len() != values.len() {
                return Err(Error::usage("weights and phases differ in length"));
            }
            w
        }
        None => {
            uniform = vec![1.0; values.len()];
            &uniform
        }
    };
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || w.iter().any(|&x| x < 0.0) {
        return Err(Error::domain("weights must be nonnegative with a positive sum"));
    }
    let mean = values.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / total;
    let var = values.iter().zip(w).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / total;
    Ok((hi - lo, var.sqrt()))
}

/// Elementwise uncompensated + compensation phase over `grid`. With
/// `subtract_offset` the value at the central grid point is removed.
pub fn total_phase_map(
    catalog: &Catalog,
    setup: &Interferometer,
    grid: &PhaseGrid,
    subtract_offset: bool,
) -> Result<PhaseMap> {
    let (layout, signal, idler, mut phase, centre) = match grid {
        PhaseGrid::Diagonal { signal } => {
            check_grid(signal, "signal")?;
            let idler = signal
                .iter()
                .map(|&s| idler_wavelength(setup.pump, s))
                .collect::<Result<Vec<_>>>()?;
            let phase = signal
                .par_iter()
                .zip(idler.par_iter())
                .map(|(&s, &i)| setup.total(catalog, s, i))
                .collect::<Result<Vec<f64>>>()?;
            let centre = (signal.len() - 1) / 2;
            (MapLayout::Diagonal, signal.clone(), idler, phase, centre)
        }
        PhaseGrid::Full { signal, idler } => {
            check_grid(signal, "signal")?;
            check_grid(idler, "idler")?;
            let cols = idler.len();
            let phase = (0..signal.len() * cols)
                .into_par_iter()
                .map(|k| setup.total(catalog, signal[k / cols], idler[k % cols]))
                .collect::<Result<Vec<f64>>>()?;
            let centre = ((signal.len() - 1) / 2) * cols + (cols - 1) / 2;
            (MapLayout::Grid, signal.clone(), idler.clone(), phase, centre)
        }
    };
    if subtract_offset {
        let c = phase[centre];
        phase.iter_mut().for_each(|p| *p -= c);
    }
    if phase.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain("phase map contains non-finite values"));
    }
    Ok(PhaseMap {
        layout,
        signal_nm: signal.iter().map(|w| w.nm()).collect(),
        idler_nm: idler.iter().map(|w| w.nm()).collect(),
        phase_rad: phase,
        offset_subtracted: subtract_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nm(x: f64) -> Wavelength {
        Wavelength::from_nm(x).unwrap()
    }

    fn room() -> Temperature {
        Temperature::celsius(25.0)
    }

    pub(crate) fn reference_setup(yvo_mm: f64) -> Interferometer {
        Interferometer {
            pump: nm(405.4),
            crystal: CrystalSpec::ppktp(11.48, 3.425).unwrap(),
            crystal_temperature: room(),
            waveplate: WaveplateStack::achromat(),
            compensator: CompensatorSpec::yvo4(yvo_mm, room()).unwrap(),
        }
    }

    fn empty_setup() -> Interferometer {
        Interferometer {
            pump: nm(405.4),
            crystal: CrystalSpec::ppktp(0.0, 3.425).unwrap(),
            crystal_temperature: room(),
            waveplate: WaveplateStack::vacuum(),
            compensator: CompensatorSpec::yvo4(0.0, room()).unwrap(),
        }
    }

    const IDLER: f64 = 839.4970945589012;

    #[test]
    fn uncompensated_reference_values() {
        let cat = Catalog::builtin();
        let empty = empty_setup();
        assert_eq!(empty.uncompensated(cat, nm(784.0), nm(IDLER)).unwrap(), 0.0);

        let setup = reference_setup(18.5);
        // scripts/oracles.py: uncompensated_rad
        let u = setup.uncompensated(cat, nm(784.0), nm(IDLER)).unwrap();
        assert!((u - 312436.007846817).abs() < 1e-6, "{u}");
    }

    #[test]
    fn compensation_reference_values() {
        let cat = Catalog::builtin();
        let zero = CompensatorSpec::yvo4(0.0, room()).unwrap();
        assert_eq!(compensation_phase(cat, nm(784.0), nm(IDLER), &zero).unwrap(), 0.0);
        let comp = CompensatorSpec::yvo4(18.5, room()).unwrap();
        // scripts/oracles.py: compensation_rad
        let c = compensation_phase(cat, nm(784.0), nm(IDLER), &comp).unwrap();
        assert!((c - (-61205.362900723136)).abs() < 1e-6, "{c}");
    }

    #[test]
    fn compensation_slope_opposes_uncompensated_slope() {
        let cat = Catalog::builtin();
        let setup = reference_setup(18.5);
        let diag = |s: f64, f: &dyn Fn(Wavelength, Wavelength) -> f64| {
            let s = nm(s);
            f(s, idler_wavelength(setup.pump, s).unwrap())
        };
        let unc = |s, i| setup.uncompensated(cat, s, i).unwrap();
        let comp = |s, i| setup.compensation(cat, s, i).unwrap();
        for centre in [772.0, 784.0, 796.0] {
            let du = diag(centre + 0.5, &unc) - diag(centre - 0.5, &unc);
            let dc = diag(centre + 0.5, &comp) - diag(centre - 0.5, &comp);
            assert!(du * dc < 0.0, "{centre}: {du} {dc}");
        }
    }

    #[test]
    fn multi_radian_swing_without_compensation() {
        let cat = Catalog::builtin();
        let setup = reference_setup(0.0);
        let grid = PhaseGrid::diagonal_window(784.0, 15.0, 301).unwrap();
        let map = total_phase_map(cat, &setup, &grid, true).unwrap();
        let report = map.flatness(None).unwrap();
        assert!(report.peak_to_peak_rad > 2.0, "{report:?}");
        assert_eq!(map.get(150, 150), Some(0.0));
    }

    #[test]
    fn empty_interferometer_gives_zero_map() {
        let cat = Catalog::builtin();
        let grid = PhaseGrid::diagonal_window(784.0, 5.0, 11).unwrap();
        let map = total_phase_map(cat, &empty_setup(), &grid, false).unwrap();
        assert!(map.phase_rad.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn compensation_flattens_filter_window() {
        let cat = Catalog::builtin();
        let grid = PhaseGrid::diagonal_window(784.0, 1.75, 141).unwrap();
        let before = total_phase_map(cat, &reference_setup(0.0), &grid, true).unwrap();
        let after = total_phase_map(cat, &reference_setup(18.5), &grid, true).unwrap();
        let (b, a) = (before.flatness(None).unwrap(), after.flatness(None).unwrap());
        assert!(a.peak_to_peak_rad * 20.0 <= b.peak_to_peak_rad, "{b:?} {a:?}");
    }

    #[test]
    fn diagonal_matches_full_grid_slice() {
        let cat = Catalog::builtin();
        let setup = reference_setup(18.5);
        let signal = linspace_nm(784.0, 2.0, 9).unwrap();
        let idler: Vec<Wavelength> =
            signal.iter().map(|&s| idler_wavelength(setup.pump, s).unwrap()).rev().collect();
        let diag = total_phase_map(cat, &setup, &PhaseGrid::Diagonal { signal: signal.clone() }, false).unwrap();
        let full =
            total_phase_map(cat, &setup, &PhaseGrid::Full { signal: signal.clone(), idler }, false).unwrap();
        let n = signal.len();
        for k in 0..n {
            assert_eq!(diag.get(k, k).unwrap(), full.get(k, n - 1 - k).unwrap());
        }
        assert_eq!(full.len(), n * n);
        assert!(full.get(0, n).is_none());
    }

    #[test]
    fn single_point_map() {
        let cat = Catalog::builtin();
        let grid = PhaseGrid::diagonal_window(784.0, 1.75, 1).unwrap();
        let map = total_phase_map(cat, &reference_setup(18.5), &grid, true).unwrap();
        assert_eq!(map.phase_rad, vec![0.0]);
        let r = map.flatness(None).unwrap();
        assert_eq!(r.peak_to_peak_rad, 0.0);
    }

    #[test]
    fn csv_layout() {
        let cat = Catalog::builtin();
        let grid = PhaseGrid::diagonal_window(784.0, 1.0, 3).unwrap();
        let map = total_phase_map(cat, &reference_setup(18.5), &grid, true).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "signal_nm,idler_nm,phase_rad");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("784,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn total_is_sum_of_parts(
            s in 760.0f64..800.0,
            i in 820.0f64..860.0,
            l_ktp in 0.0f64..30.0,
            l_yvo in 0.0f64..40.0,
            t in 10.0f64..60.0,
        ) {
            let cat = Catalog::builtin();
            let setup = Interferometer {
                pump: nm(405.4),
                crystal: CrystalSpec::ppktp(l_ktp, 3.425).unwrap(),
                crystal_temperature: Temperature::celsius(t),
                waveplate: WaveplateStack::achromat(),
                compensator: CompensatorSpec::yvo4(l_yvo, Temperature::celsius(t)).unwrap(),
            };
            let grid = PhaseGrid::Full { signal: vec![nm(s)], idler: vec![nm(i)] };
            let map = total_phase_map(cat, &setup, &grid, false).unwrap();
            let expected = setup.uncompensated(cat, nm(s), nm(i)).unwrap()
                + setup.compensation(cat, nm(s), nm(i)).unwrap();
            prop_assert_eq!(map.phase_rad[0], expected);
        }

        #[test]
        fn rms_bounded_by_half_range(values in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
            let (ptp, rms) = flatness_stats(&values, None).unwrap();
            prop_assert!(rms <= ptp / 2.0 + 1e-12);
        }
    }
}
