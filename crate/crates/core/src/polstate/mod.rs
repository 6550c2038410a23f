//! Spectrally averaged two-photon polarization state and its analysis.

mod analyzer;
mod counts;
mod fit;
mod state;

pub use analyzer::{
    basis_probabilities, coincidence_probability, correlation_scan, state_visibilities, AnalyzerSetting, Basis,
};
pub use counts::{
    accidental_correction, basis_visibility, fidelity_from_state, fidelity_witness, read_counts_csv,
    write_counts_csv, CountsRecord, VisibilitySet,
};
pub use fit::{fit_visibility, VisibilityFit};
pub use state::{
    build_state, coherence_factor, BellTarget, FilterShape, PolarizationDensityMatrix, SpectralFilter, BASIS,
    EIGEN_TOL, HERMITIAN_TOL, TRACE_TOL,
};
