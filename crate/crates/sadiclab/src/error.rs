use thiserror::Error;

/// Errors raised by the library. Mathematical "negative" outcomes (an
/// imbalance witness, a failed coincidence check, …) are reported as values,
/// not as errors; this enum is reserved for misuse and operational limits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("letter {0} is not a valid letter (letters are 1-based)")]
    InvalidLetter(u32),

    #[error("letter {letter} lies outside the alphabet of size {size}")]
    LetterOutOfAlphabet { letter: u8, size: u8 },

    #[error("alphabet size {0} is not supported (expected 1..=35)")]
    InvalidAlphabet(usize),

    #[error("alphabet mismatch: expected size {expected}, found {found}")]
    AlphabetMismatch { expected: usize, found: usize },

    #[error("insufficient data: need {needed} letters but only {available} are available")]
    InsufficientData { needed: usize, available: usize },

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("substitution image of letter {0} is empty (substitutions must be nonerasing)")]
    ErasingImage(u8),

    #[error("unknown substitution family `{0}`")]
    UnknownFamily(String),

    #[error("substitution index {index} is out of range for a family of {size}")]
    FamilyIndex { index: usize, size: usize },

    #[error("directive sequence has no substitution at position {0}")]
    DirectiveExhausted(usize),

    #[error("directive sequence is empty")]
    EmptyDirective,

    #[error("primitivity is not witnessed within {0} levels")]
    NotPrimitive(usize),

    #[error("no admissible chain of first letters extends past level {0}")]
    ChainDied(usize),

    #[error("matrix is not unimodular (determinant {0})")]
    NotUnimodular(String),

    #[error("generalized right eigenvector not reached within {steps} steps (Hilbert diameter {diameter:e})")]
    EigenvectorUnavailable { steps: usize, diameter: f64 },

    #[error("value {value} lies outside the domain of {map}")]
    Domain { map: &'static str, value: String },

    #[error("expansion terminated: the input is rational")]
    TerminatedExpansion,

    #[error("the algorithm's branch matrices do not match the substitution family")]
    FamilyMismatch,

    #[error("patch size budget of {0} faces exceeded")]
    PatchBudget(usize),

    #[error("the seed faces are not contained in the patch")]
    SeedNotInPatch,

    #[error("the patch boundary is not reachable from the seed")]
    DisconnectedPatch,

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("ambiguous subtile membership at step {step}: labels {labels:?} within epsilon")]
    AmbiguousMembership { step: usize, labels: Vec<u8> },

    #[error("point at step {step} is outside the epsilon-hull of the cloud")]
    OutsideCloud { step: usize },

    #[error("word of length {0} does not occur within the available horizon")]
    NotInLanguage(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
