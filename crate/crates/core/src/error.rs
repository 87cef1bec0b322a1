use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown variable `{name}` at offset {offset}")]
    UnknownVariable { name: String, offset: usize },

    #[error("variable `{0}` has no value in the assignment")]
    Unassigned(String),

    #[error("non-finite value while evaluating `{subtree}`")]
    Domain { subtree: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("`{slot}` references `{var}`, which is outside its allowed variables")]
    Scope { slot: String, var: String },

    #[error("{variant} requires the fixing {slot} = {expected}")]
    MissingFixing {
        variant: String,
        slot: String,
        expected: String,
    },

    #[error("{variant}: {slot} must equal {expected}")]
    FixingMismatch {
        variant: String,
        slot: String,
        expected: String,
    },

    #[error("invalid normal form data: {0}")]
    InvalidSpec(String),

    #[error("{0} is a generic form; specialize it to a catalogue row first")]
    GenericVariant(String),

    #[error("feedback matrix is singular at the base point (|det| = {det:e})")]
    SingularFeedback { det: f64 },

    #[error("coordinate change is not a local diffeomorphism at the base point (|det| = {det:e})")]
    SingularCoordinates { det: f64 },

    #[error("system is not static feedback linearizable")]
    NotLinearizable,

    #[error("could only draw {got} of {wanted} sample points away from poles")]
    Sampling { got: usize, wanted: usize },

    #[error("flatness singularity at node {node} (t = {t}): margin {margin:e}")]
    SingularNode { node: usize, t: f64, margin: f64 },

    #[error("Newton iteration did not converge at node {node} (t = {t})")]
    NewtonFailure { node: usize, t: f64 },

    #[error("flat output curve is degenerate: {0}")]
    DegenerateCurve(String),

    #[error("integration blew up at step {step} (t = {t})")]
    BlowUp { step: usize, t: f64 },

    #[error("invalid document: {0}")]
    Document(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::UnknownVariable { .. } => "unknown_variable",
            Error::Unassigned(_) => "unassigned",
            Error::Domain { .. } => "domain",
            Error::Dimension(_) => "dimension",
            Error::Scope { .. } => "scope",
            Error::MissingFixing { .. } => "missing_fixing",
            Error::FixingMismatch { .. } => "fixing_mismatch",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::GenericVariant(_) => "generic_variant",
            Error::SingularFeedback { .. } => "singular_feedback",
            Error::SingularCoordinates { .. } => "singular_coordinates",
            Error::NotLinearizable => "not_linearizable",
            Error::Sampling { .. } => "sampling",
            Error::SingularNode { .. } => "singular_node",
            Error::NewtonFailure { .. } => "newton_failure",
            Error::DegenerateCurve(_) => "degenerate_curve",
            Error::BlowUp { .. } => "blow_up",
            Error::Document(_) => "document",
            Error::Io(_) => "io",
        }
    }
}
