use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("anti-squeezed spectrum diverges at threshold (epsilon = gamma/2) at omega = {omega}")]
    ThresholdDivergence { omega: f64 },

    #[error("non-physical spectrum: value {value} at omega = {omega}")]
    NonPhysicalSpectrum { omega: f64, value: f64 },

    #[error("detector pulse is non-zero at negative time t = {t}")]
    NonCausalPulse { t: f64 },

    #[error("averaging time {t} is shorter than {required} (ten heterodyne periods)")]
    InsufficientAveraging { t: f64, required: f64 },

    #[error("heterodyne frequency {omega} rad/s too close to Nyquist for sample rate {sample_rate} Hz")]
    AliasRisk { omega: f64, sample_rate: f64 },

    #[error("insufficient data: {needed} samples needed, {available} available")]
    InsufficientData { needed: usize, available: usize },

    #[error("demodulation frequency {difference} rad/s does not clear low-pass cutoff {cutoff} rad/s")]
    DemodClash { difference: f64, cutoff: f64 },

    #[error("loop failed to lock within {duration} s (final offset {offset} rad)")]
    LockFailure { duration: f64, offset: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
