use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Domain,
    Numeric,
    Usage,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("wavelength {wavelength_nm} nm is outside the validity range of {model} [{min_nm}, {max_nm}] nm")]
    WavelengthRange {
        model: String,
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    #[error("temperature {temperature_c} °C is outside the validity range of {model} [{min_c}, {max_c}] °C")]
    TemperatureRange {
        model: String,
        temperature_c: f64,
        min_c: f64,
        max_c: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(
        "no phase-matching temperature in [{low_c}, {high_c}] °C: \
         residual ΔkL/2 is {low_residual:.4e} rad at the low end and {high_residual:.4e} rad at the high end"
    )]
    NoRoot {
        low_c: f64,
        high_c: f64,
        low_residual: f64,
        high_residual: f64,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::WavelengthRange { .. } | Error::TemperatureRange { .. } | Error::Domain(_) => {
                ErrorKind::Domain
            }
            Error::NoRoot { .. } | Error::Fit(_) => ErrorKind::Numeric,
            Error::Usage(_) => ErrorKind::Usage,
            Error::Config(_) | Error::Json(_) | Error::Csv(_) => ErrorKind::Config,
            Error::Io(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
