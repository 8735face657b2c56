use std::fmt;

/// Errors raised by the library's domain checks.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A Rademacher order of zero, or one too large for f64 dyadic arithmetic.
    InvalidRademacherOrder(u32),
    /// Time fraction outside [0, 1) or time outside [0, T).
    TimeOutOfDomain { t: f64, limit: f64 },
    /// Index `m` does not fit in the requested order `n`.
    IndexOutOfRange { m: u32, n: u32 },
    /// A transform input whose length is not a power of two.
    NonPowerOfTwoLength(usize),
    /// Hadamard matrix order above the configured materialization cap.
    OrderAboveCap { n: u32, cap: u32 },
    /// Quadrature grid that does not align with the filter switchings.
    GridMisaligned { grid: usize, required_multiple: usize },
    /// A quantity that must be strictly positive was not.
    NonPositive { what: &'static str, value: f64 },
    /// Photon count rates with S0 == S1 carry no signal.
    DegenerateCountRates,
    /// Fit rejected: fewer measurement points than the model can support.
    InsufficientPoints { have: usize, need: usize },
    /// Phase sweep spans too little of the circle to identify the phase.
    SweepSpanTooSmall { span_rad: f64, need_rad: f64 },
    /// Curve and operation disagree on the swept variable.
    SweptVariableMismatch { expected: &'static str },
    /// Empty input where at least one element is required.
    EmptyInput(&'static str),
    /// Derivative requested for a waveform arm that does not define one.
    NonDifferentiable(&'static str),
    /// Mismatched vector lengths.
    LengthMismatch { left: usize, right: usize },
    /// Coefficient budget outside `1..=N`.
    BudgetOutOfRange { budget: usize, n_coeffs: usize },
    /// The sequential baseline cannot run: its sub-interval is too short or
    /// exceeds the dephasing time.
    InfeasibleBaseline { tau_us: f64, limit_us: f64, constraint: &'static str },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidRademacherOrder(k) => {
                write!(f, "Rademacher order k={k} outside supported range 1..=52")
            }
            Error::TimeOutOfDomain { t, limit } => {
                write!(f, "time {t} outside the domain [0, {limit})")
            }
            Error::IndexOutOfRange { m, n } => {
                write!(f, "index m={m} out of range for order n={n} (need m < 2^n)")
            }
            Error::NonPowerOfTwoLength(len) => {
                write!(f, "input length {len} is not a power of two")
            }
            Error::OrderAboveCap { n, cap } => {
                write!(f, "order n={n} above the materialization cap n<={cap}; use the fast transform instead")
            }
            Error::GridMisaligned { grid, required_multiple } => {
                write!(
                    f,
                    "grid of {grid} points is not a power-of-two multiple of {required_multiple}, \
                     so filter switchings would fall inside grid cells"
                )
            }
            Error::NonPositive { what, value } => {
                write!(f, "{what} must be positive, got {value}")
            }
            Error::DegenerateCountRates => {
                write!(f, "photon count rates S0 and S1 are equal; the readout carries no signal")
            }
            Error::InsufficientPoints { have, need } => {
                write!(f, "fit needs at least {need} points, got {have}")
            }
            Error::SweepSpanTooSmall { span_rad, need_rad } => {
                write!(f, "phase sweep spans {span_rad} rad, need at least {need_rad} rad")
            }
            Error::SweptVariableMismatch { expected } => {
                write!(f, "measurement curve does not sweep {expected}")
            }
            Error::EmptyInput(what) => write!(f, "{what} must not be empty"),
            Error::NonDifferentiable(what) => {
                write!(f, "no derivative is defined for {what}")
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::BudgetOutOfRange { budget, n_coeffs } => {
                write!(f, "coefficient budget {budget} outside 1..={n_coeffs}")
            }
            Error::InfeasibleBaseline { tau_us, limit_us, constraint } => {
                write!(
                    f,
                    "sequential baseline infeasible: sub-interval {tau_us} us violates {constraint} \
                     {limit_us} us"
                )
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
