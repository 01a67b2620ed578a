use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("invalid rational `{0}`")]
    Rational(String),
    #[error("invalid polynomial `{input}`: {reason}")]
    Polynomial { input: String, reason: String },
    #[error("unknown builtin algebra `{0}`")]
    Builtin(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    // Lie algebras and groups
    #[error("elements belong to different Lie algebras")]
    AlgebraMismatch,
    #[error("step {step} exceeds the supported BCH truncation bound {bound}")]
    StepTooLarge { step: u32, bound: u32 },
    #[error("unsupported builtin size: {0}")]
    UnsupportedSize(String),
    #[error("malformed algebra: {0}")]
    InvalidAlgebra(String),

    // polynomials and polynomial maps
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable lists differ: {0:?} vs {1:?}")]
    VariableMismatch(Vec<String>, Vec<String>),
    #[error("substitution image for `{0}` is not affine")]
    NotAffine(String),
    #[error("map is the constant identity; internal class is undefined")]
    ConstantIdentity,
    #[error("differencing did not annihilate the map within {0} iterations")]
    DifferencingCap(usize),
    #[error("map does not vanish at t = 0: coordinate {coord} restricts to {residue}")]
    NotNormalized { coord: usize, residue: String },

    // PET bookkeeping
    #[error("family has no non-constant member")]
    AllConstant,
    #[error("index {index} out of range for a family with {len} entries")]
    InvalidIndex { index: usize, len: usize },
    #[error("{classes} classes at one weight exceed the exhaustive matching cap {cap}")]
    FamilyTooLarge { classes: usize, cap: usize },
    #[error("PET trace truncated at depth {depth}: {reason}")]
    Truncated { depth: usize, reason: String },
    #[error("derived family does not precede its parent at step {step}")]
    DescentViolation { step: usize },

    // Zariski sampling
    #[error("variety {0} is not proper (every generator vanishes identically)")]
    ImproperVariety(usize),
    #[error("no generic point found after {0} attempts")]
    AttemptsExhausted(usize),

    // dynamics and averaging
    #[error("unsupported system: {0}")]
    UnsupportedSystem(String),
    #[error("invalid numerical setting: {0}")]
    InvalidSetting(String),
    #[error("grid too short: need coverage up to {needed}, have {available}")]
    GridTooShort { needed: f64, available: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
