//! Relative phase of the folded interferometer and its compensation.

mod optimize;
mod phase;
mod thermal;
mod waveplate;

pub use optimize::{
    flatness_at, golden_section_min, optimize_compensator_length, CompensatorDesign, SpectralWindow,
    LENGTH_BOUNDS_MM, LENGTH_RESOLUTION_MM,
};
pub use phase::{
    compensation_phase, linspace_nm, total_phase_map, uncompensated_phase, CompensatorSpec, FlatnessReport,
    FlatnessWindow, Interferometer, MapLayout, PhaseGrid, PhaseMap, Weighting,
};
pub use thermal::{
    fidelity_for_phase, max_phase_for_fidelity, mirror_displacement_phase, pi_shift_temperature,
    temperature_phase_shift, temperature_tolerance, ThermalElement,
};
pub use waveplate::{WaveplateLayer, WaveplateStack};
