use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Partial-order axiom named in [`Error::NotAPartialOrder`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Reflexivity,
    Antisymmetry,
    Transitivity,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axiom::Reflexivity => "reflexivity",
            Axiom::Antisymmetry => "antisymmetry",
            Axiom::Transitivity => "transitivity",
        })
    }
}

/// Law of an embedding-projection pair named in [`Error::NotEp`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpLaw {
    /// `p ∘ e = id`
    Retraction,
    /// `e ∘ p ⊑ id`
    Deflation,
}

impl fmt::Display for EpLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpLaw::Retraction => "p∘e = id",
            EpLaw::Deflation => "e∘p ⊑ id",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Error {
    #[error("not a partial order: {axiom} fails at ({}, {})", witness.0, witness.1)]
    NotAPartialOrder { axiom: Axiom, witness: (usize, usize) },

    #[error("no least element: {witness} is not above the claimed bottom {bottom}")]
    NoLeastElement { bottom: usize, witness: usize },

    #[error("element {id} out of range for a carrier of size {size}")]
    ElementOutOfRange { id: usize, size: usize },

    #[error("map is not monotone: {x} ⊑ {y} but their images are unordered")]
    NotMonotone { x: usize, y: usize },

    #[error("size cap exceeded while building {what}: more than {limit}{}", fmt_level(*level))]
    SizeCapExceeded { what: String, limit: usize, level: Option<usize> },

    #[error("sequence is not increasing at index {index}")]
    NotAChain { index: usize },

    #[error("not an embedding-projection pair: {law} fails at element {witness}")]
    NotEp { law: EpLaw, witness: usize },

    #[error("map is not an embedding: no projection exists")]
    NotAnEmbedding,

    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("law violated: {law} ({witness})")]
    LawViolation { law: String, witness: String },

    #[error("dual gluing mismatch at pair {pair:?}: present only in the {present_in} gluing")]
    DualMismatch { pair: (usize, usize), present_in: &'static str },

    #[error("knaster-tarski fixed point has R- != R+ at level {level}, pair {pair:?}")]
    NegPosMismatch { level: usize, pair: (usize, usize) },

    #[error("family is not coherent at level {level}, pair {pair:?}")]
    CoherenceViolation { level: usize, pair: (usize, usize) },

    #[error("operator is not contractive: stabilization bound violated at levels {levels:?}")]
    NotContractive { levels: Vec<usize> },

    #[error("methods {left} and {right} disagree at level {level}: {difference:?}")]
    MethodDisagreement {
        left: String,
        right: String,
        level: usize,
        difference: Vec<(usize, usize)>,
    },

    #[error("characterizations of {n}-equality disagree: {detail}")]
    CharacterizationMismatch { n: usize, detail: String },

    #[error("family is not uniform: {0}")]
    NotUniform(String),

    #[error("sequence is not Cauchy: terms {i} and {j} differ at index {n}")]
    NotCauchy { n: usize, i: usize, j: usize },

    #[error("the two idempotent-order conditions disagree: {0}")]
    EquivalenceMismatch(String),

    #[error("{engine} did not stabilize within {cap} iterations")]
    IterationCap { engine: &'static str, cap: usize },

    #[error("parse error at {line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Parse { line: usize, col: usize, expected: Vec<String>, found: String },

    #[error("unresolved name `{name}` at {line}:{col}")]
    Resolve { name: String, line: usize, col: usize },

    #[error("constant relation `{name}` is not admissible (missing the bottom pair)")]
    InadmissibleConstRelation { name: String },
}

fn fmt_level(level: Option<usize>) -> String {
    level.map(|l| format!(" (level {l})")).unwrap_or_default()
}

impl Error {
    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SizeCapExceeded { .. } => 3,
            Error::Parse { .. } | Error::Resolve { .. } | Error::InadmissibleConstRelation { .. } => 2,
            _ => 1,
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotAPartialOrder { .. } => "NotAPartialOrder",
            Error::NoLeastElement { .. } => "NoLeastElement",
            Error::ElementOutOfRange { .. } => "ElementOutOfRange",
            Error::NotMonotone { .. } => "NotMonotone",
            Error::SizeCapExceeded { .. } => "SizeCapExceeded",
            Error::NotAChain { .. } => "NotAChain",
            Error::NotEp { .. } => "NotEp",
            Error::NotAnEmbedding => "NotAnEmbedding",
            Error::InternalInvariantViolation(_) => "InternalInvariantViolation",
            Error::TypeMismatch(_) => "TypeMismatch",
            Error::LawViolation { .. } => "LawViolation",
            Error::DualMismatch { .. } => "DualMismatch",
            Error::NegPosMismatch { .. } => "NegPosMismatch",
            Error::CoherenceViolation { .. } => "CoherenceViolation",
            Error::NotContractive { .. } => "NotContractive",
            Error::MethodDisagreement { .. } => "MethodDisagreement",
            Error::CharacterizationMismatch { .. } => "CharacterizationMismatch",
            Error::NotUniform(_) => "NotUniform",
            Error::NotCauchy { .. } => "NotCauchy",
            Error::EquivalenceMismatch(_) => "EquivalenceMismatch",
            Error::IterationCap { .. } => "IterationCap",
            Error::Parse { .. } => "ParseError",
            Error::Resolve { .. } => "ResolveError",
            Error::InadmissibleConstRelation { .. } => "InadmissibleConstRelation",
        }
    }

    pub(crate) fn at_level(self, n: usize) -> Self {
        match self {
            Error::SizeCapExceeded { what, limit, level: None } => {
                Error::SizeCapExceeded { what, limit, level: Some(n) }
            }
            other => other,
        }
    }
}

/// Resource limits applied to every enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Caps {
    /// Maximum number of elements in any constructed poset.
    pub max_elements: usize,
    /// Maximum number of cells in any order matrix or relation.
    pub max_pairs: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_elements: 200_000, max_pairs: 10_000_000 }
    }
}

impl Caps {
    pub(crate) fn check_size(&self, what: &str, size: usize) -> Result<()> {
        if size > self.max_elements {
            return Err(Error::SizeCapExceeded {
                what: format!("{what} elements"),
                limit: self.max_elements,
                level: None,
            });
        }
        if size.saturating_mul(size) > self.max_pairs {
            return Err(Error::SizeCapExceeded {
                what: format!("{what} order pairs"),
                limit: self.max_pairs,
                level: None,
            });
        }
        Ok(())
    }
}
