use foldspdc::config::SourceConfig;
use foldspdc::counting::{analytic_rates, run_montecarlo};
use foldspdc::dispersion::Catalog;
use foldspdc::phasecomp::{linspace_nm, total_phase_map, PhaseGrid};
use foldspdc::polstate::{
    accidental_correction, basis_probabilities, fidelity_from_state, fidelity_witness, read_counts_csv,
    state_visibilities, write_counts_csv, Basis, BellTarget, CountsRecord, VisibilitySet,
};

/// Expected counts per basis from the modeled state and detected pair rate,
/// through a CSV round trip, back to the same witness.
#[test]
fn counts_from_model_reproduce_witness() {
    let cat = Catalog::builtin();
    let src = SourceConfig::reference().resolve(cat).unwrap();
    let rho = src.state(cat, 0.0).unwrap();
    let rates = analytic_rates(0.0104, &src.brightness, &src.detection, 1.0).unwrap();
    let duration = 10.0;
    let pairs = rates.true_coincidences * duration;
    let records: Vec<CountsRecord> = Basis::ALL
        .iter()
        .map(|&b| {
            let p = basis_probabilities(&rho, b);
            CountsRecord::new(b, p.map(|x| x * pairs), duration).unwrap()
        })
        .collect();

    let mut buf = Vec::new();
    write_counts_csv(&records, &mut buf).unwrap();
    let back = read_counts_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), records.len());

    let measured = VisibilitySet::from_records(&back).unwrap();
    let exact = state_visibilities(&rho);
    assert!((measured.v_hv - exact.v_hv).abs() < 1e-9);
    assert!((measured.v_da - exact.v_da).abs() < 1e-9);
    assert!((measured.v_lr - exact.v_lr).abs() < 1e-9);
    let w = fidelity_witness(&measured, BellTarget::PhiPlus).unwrap();
    assert!((w - fidelity_from_state(&rho, BellTarget::PhiPlus)).abs() < 1e-9);
}

#[test]
fn accidental_subtraction_raises_visibility() {
    let signal = [60_000.0; 2];
    let idler = [90_000.0; 2];
    let counts = [5_000.0, 200.0, 200.0, 5_000.0];
    let raw = CountsRecord::new(Basis::DA, counts, 1.0).unwrap().with_singles(signal, idler).unwrap();
    let corrected = accidental_correction(&raw, 3.2e-9).unwrap();
    let v = |r: &CountsRecord| (r.counts[0] + r.counts[3] - r.counts[1] - r.counts[2]) / r.total();
    assert!(v(&corrected) > v(&raw));
    assert!(corrected.accidentals_subtracted);
}

#[test]
fn compensated_map_is_flat_across_filter() {
    let cat = Catalog::builtin();
    let src = SourceConfig::reference().resolve(cat).unwrap();
    let grid = PhaseGrid::Diagonal { signal: linspace_nm(784.0, 1.75, 81).unwrap() };
    let comp = total_phase_map(cat, &src.interferometer, &grid, true).unwrap();
    let bare = src.interferometer.with_compensator(src.interferometer.compensator.with_length(0.0));
    let raw = total_phase_map(cat, &bare, &grid, true).unwrap();
    let ptp = |p: &[f64]| p.iter().cloned().fold(f64::MIN, f64::max) - p.iter().cloned().fold(f64::MAX, f64::min);
    assert!(ptp(&raw.phase_rad) > 20.0 * ptp(&comp.phase_rad));
}

#[test]
fn montecarlo_reproducible_per_seed() {
    let cat = Catalog::builtin();
    let src = SourceConfig::reference().resolve(cat).unwrap();
    let (a, _, _) = run_montecarlo(0.0104, &src.brightness, &src.detection, 0.2, 11).unwrap();
    let (b, _, _) = run_montecarlo(0.0104, &src.brightness, &src.detection, 0.2, 11).unwrap();
    let (c, _, _) = run_montecarlo(0.0104, &src.brightness, &src.detection, 0.2, 12).unwrap();
    assert_eq!(a.twofold.counts, b.twofold.counts);
    assert_eq!(a.singles_s.counts, b.singles_s.counts);
    assert_ne!(a.singles_s.counts, c.singles_s.counts);
}
