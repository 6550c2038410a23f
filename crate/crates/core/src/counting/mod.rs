//! Count rates, accidentals and raw fidelity versus pump power.

mod analytic;
mod timetag;

pub use analytic::{
    accidental_rate, analytic_rates, calibrate, power_sweep, saturate, state_fidelity_from_visibility,
    write_rates_csv, Calibration, CalibrationPoint, DetectionConfig, RateReport, SourceBrightness,
    DEFAULT_DEAD_TIME_S, RATE_COLUMNS,
};
pub use timetag::{
    count_coincidences, count_with_delay, run_montecarlo, simulate_timetags, write_timetags_csv, Channel,
    MonteCarloSummary, RateEstimate, TimeTagStream, MIN_ACCIDENTAL_DELAY_S,
};
