//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Both boxes have zero area, so overlap ratios are undefined.
    #[error("overlap is undefined: both boxes have zero area")]
    UndefinedOverlap,

    /// A box was constructed with a negative width or height.
    #[error("invalid box: width and height must be non-negative and finite (w={w}, h={h})")]
    InvalidBox { w: f64, h: f64 },

    /// An embedding cannot be normalized.
    #[error("cannot normalize a zero or non-finite vector")]
    ZeroVector,

    /// Two vectors that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A value that must lie in a range does not.
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// An operation received an empty input it cannot handle.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A label index is not a valid class index.
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    /// Fewer classes than the loss requires.
    #[error("need at least {needed} classes, got {got}")]
    TooFewClasses { needed: usize, got: usize },

    /// Gradient blocks with incompatible shapes were compared.
    #[error("shape mismatch: analytic has {analytic} coordinates, numeric has {numeric}")]
    ShapeMismatch { analytic: usize, numeric: usize },

    /// A scalar function evaluated to NaN or infinity.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// No anchor in the batch satisfies the loss preconditions.
    #[error("no usable anchor: {0}")]
    NoUsableAnchor(&'static str),

    /// The Eq.-11 form needs exactly one positive per anchor.
    #[error("anchor {anchor} has {positives} positives; exactly one is required")]
    SinglePositiveRequired { anchor: usize, positives: usize },

    /// Curriculum modulation was requested without a curriculum state.
    #[error("curriculum modulation requires a curriculum state")]
    MissingCurriculumState,

    /// A class-wise loss was requested without class weights.
    #[error("class-wise loss requires class weights")]
    MissingClassWeights,

    /// The requested base class has no images.
    #[error("base class {0} is absent from the class index")]
    BaseClassAbsent(usize),

    /// A structured text record could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Training aborted because the loss left the finite range.
    #[error("training aborted at step {step}: loss is not finite ({value})")]
    TrainingDiverged { step: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
