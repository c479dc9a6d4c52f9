use thiserror::Error;

/// Errors raised by the simulator core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HtmError {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("unknown config key `{key}` on line {line}")]
    UnknownConfigKey { key: String, line: usize },

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("read voltage {volts} V reaches the switching threshold {threshold} V")]
    ReadDisturb { volts: f64, threshold: f64 },

    #[error("programming to level {target} gave up at level {reached} after {pulses} pulses")]
    ProgrammingFailed {
        target: u32,
        reached: u32,
        pulses: u32,
    },

    #[error("device ({row}, {col}): {source}")]
    CrossbarProgramming {
        row: usize,
        col: usize,
        #[source]
        source: Box<HtmError>,
    },

    #[error("{dimension} = {value} is not divisible by {divisor}")]
    GridNotDivisible {
        dimension: &'static str,
        value: usize,
        divisor: usize,
    },

    #[error("image is empty")]
    EmptyImage,

    #[error("{0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, HtmError>;

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(HtmError::LengthMismatch {
            what,
            expected,
            actual,
        })
    }
}

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(HtmError::IndexOutOfRange { what, index, len })
    }
}
