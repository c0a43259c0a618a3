//! Error types for the engine layers.

use std::fmt;

/// Errors from symbolic operations.
#[derive(Debug, Clone, PartialEq)]
pub enum SymError {
    /// Differentiation with respect to the time symbol is not defined.
    DifferentiateWrtTime,
    /// The differentiation variable must be a state, past state, or parameter.
    InvalidDifferentiationVariable,
    /// A helper reference must be expanded before differentiation.
    UnexpandedHelper(String),
    /// Group partitions must be disjoint, in range, and of size >= 2.
    InvalidGroups(String),
    /// Delay site with a constant lag not covered by the supplied delay list.
    UnlistedDelay(f64),
    /// Operation requires a property the system does not have.
    Unsupported(String),
}

impl fmt::Display for SymError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymError::DifferentiateWrtTime => {
                write!(f, "cannot differentiate with respect to the time symbol")
            }
            SymError::InvalidDifferentiationVariable => write!(
                f,
                "differentiation variable must be a state, delayed state, or parameter"
            ),
            SymError::UnexpandedHelper(name) => write!(
                f,
                "helper '{name}' must be expanded before this operation"
            ),
            SymError::InvalidGroups(msg) => write!(f, "invalid group partition: {msg}"),
            SymError::UnlistedDelay(tau) => write!(
                f,
                "expressions access the past at constant lag {tau} which is not in the delay list"
            ),
            SymError::Unsupported(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for SymError {}

/// Expression / model text parse error with source location.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Violations of the `SystemSpec` invariants.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecError {
    DimensionMismatch { expected: usize, got: usize },
    StateOutOfRange { index: usize, dimension: usize },
    NestedDelay,
    DiffusionWithoutCalculus,
    CalculusWithoutDiffusion,
    UnlistedParameter(String),
    UnknownHelper(String),
    HelperOrder(String),
    DelayedDiffusion,
    ZeroDimension,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::DimensionMismatch { expected, got } => {
                write!(f, "system dimension is {expected} but {got} equations were given")
            }
            SpecError::StateOutOfRange { index, dimension } => {
                write!(f, "state index {index} out of range for dimension {dimension}")
            }
            SpecError::NestedDelay => {
                write!(f, "a delay argument must not contain another delayed state")
            }
            SpecError::DiffusionWithoutCalculus => {
                write!(f, "diffusion terms given but the stochastic calculus is 'none'")
            }
            SpecError::CalculusWithoutDiffusion => {
                write!(f, "a stochastic calculus is set but no diffusion terms were given")
            }
            SpecError::UnlistedParameter(name) => {
                write!(f, "parameter '{name}' appears in expressions but is not declared")
            }
            SpecError::UnknownHelper(name) => write!(f, "unknown helper '{name}'"),
            SpecError::HelperOrder(name) => {
                write!(f, "helper '{name}' is referenced before its definition")
            }
            SpecError::DelayedDiffusion => {
                write!(f, "stochastic systems must not access past states")
            }
            SpecError::ZeroDimension => write!(f, "system dimension must be positive"),
        }
    }
}

impl std::error::Error for SpecError {}

/// Errors while lowering a spec to an executable program.
#[derive(Debug, Clone, PartialEq)]
pub enum LowerError {
    Spec(SpecError),
    UnknownParameter(String),
    UnknownHelper(String),
    InvalidChunkSize,
}

impl fmt::Display for LowerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LowerError::Spec(e) => write!(f, "{e}"),
            LowerError::UnknownParameter(name) => {
                write!(f, "reference to unknown parameter '{name}'")
            }
            LowerError::UnknownHelper(name) => write!(f, "reference to unknown helper '{name}'"),
            LowerError::InvalidChunkSize => write!(f, "chunk size must be positive"),
        }
    }
}

impl std::error::Error for LowerError {}

impl From<SpecError> for LowerError {
    fn from(e: SpecError) -> Self {
        LowerError::Spec(e)
    }
}

/// Errors while evaluating an executable program.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// The program accesses past states but no past accessor was supplied.
    MissingPast,
    ParameterCount { expected: usize, got: usize },
    StateLength { expected: usize, got: usize },
    Past(StepError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::MissingPast => {
                write!(f, "system accesses past states but no past accessor was supplied")
            }
            EvalError::ParameterCount { expected, got } => {
                write!(f, "expected {expected} parameter values, got {got}")
            }
            EvalError::StateLength { expected, got } => {
                write!(f, "expected a state vector of length {expected}, got {got}")
            }
            EvalError::Past(e) => write!(f, "past access failed: {e}"),
        }
    }
}

impl std::error::Error for EvalError {}

/// Errors raised by the steppers.
#[derive(Debug, Clone, PartialEq)]
pub enum StepError {
    /// The controller pushed the step size below its minimum.
    StepSizeUnderflow { t: f64, h: f64 },
    /// A state or stage value became non-finite.
    NonFinite { t: f64 },
    /// Requested past time lies before the earliest stored anchor.
    PastUnderflow { t: f64 },
    /// Two anchors with equal times cannot define an interpolant.
    DegenerateInterval { t: f64 },
    /// Target time lies behind the current integration time.
    TargetBehind { t: f64, target: f64 },
    /// Tangent norms over- or underflowed; orthonormalize more often.
    NormOverflow,
    /// Initial-past construction received non-finite function values.
    NonFiniteInput,
    Eval(EvalError),
    Usage(String),
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::StepSizeUnderflow { t, h } => write!(
                f,
                "step size underflow at t = {t} (h = {h}); the problem may be stiff or singular"
            ),
            StepError::NonFinite { t } => write!(f, "non-finite state at t = {t}"),
            StepError::PastUnderflow { t } => write!(
                f,
                "past state requested at t = {t}, before the earliest stored anchor; \
                 the initial past is too short"
            ),
            StepError::DegenerateInterval { t } => {
                write!(f, "degenerate anchor interval at t = {t}")
            }
            StepError::TargetBehind { t, target } => {
                write!(f, "target time {target} lies behind current time {t}")
            }
            StepError::NormOverflow => write!(
                f,
                "tangent norm over- or underflow; use a smaller sample interval"
            ),
            StepError::NonFiniteInput => write!(f, "non-finite values in supplied function"),
            StepError::Eval(e) => write!(f, "{e}"),
            StepError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for StepError {}

impl From<EvalError> for StepError {
    fn from(e: EvalError) -> Self {
        StepError::Eval(e)
    }
}

/// Errors while reading a compiled-program file.
#[derive(Debug)]
pub enum LoadError {
    Io(std::io::Error),
    BadMagic,
    Version(u32),
    Truncated,
    Checksum,
    Malformed(String),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(e) => write!(f, "i/o error: {e}"),
            LoadError::BadMagic => write!(f, "not a compiled system file (bad magic)"),
            LoadError::Version(v) => write!(f, "unsupported format version {v}"),
            LoadError::Truncated => write!(f, "file is truncated"),
            LoadError::Checksum => write!(f, "checksum mismatch; the file is corrupted"),
            LoadError::Malformed(msg) => write!(f, "malformed file: {msg}"),
        }
    }
}

impl std::error::Error for LoadError {}

impl From<std::io::Error> for LoadError {
    fn from(e: std::io::Error) -> Self {
        LoadError::Io(e)
    }
}
