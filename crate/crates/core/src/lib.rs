#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod counting;
pub mod dispersion;
pub mod error;
pub mod phasecomp;
pub mod phasematch;
pub mod polstate;
pub mod units;

pub use error::{Error, ErrorKind, Result};
pub use units::{Temperature, Wavelength};
