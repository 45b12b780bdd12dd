use thiserror::Error;

use crate::geometry::Site;

/// Errors surfaced by the lattice-lab operations.
///
/// Statistical verdicts ("not found", "counterexample") are not errors; they are
/// ordinary return values. Errors mean the request itself could not be carried out.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty site set")]
    EmptySiteSet,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("symbol index {symbol} out of range (alphabet size {alphabet})")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("unknown symbol name `{0}`")]
    UnknownSymbol(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("enumeration cap exceeded ({emitted} patterns emitted before the cap)")]
    EnumerationCap { emitted: u64 },

    #[error("mismatched supports: {0}")]
    SupportMismatch(String),

    #[error("holonomy domain: configuration does not restrict to the swap source")]
    HolonomyDomain,

    #[error("swap source and target disagree on the support boundary")]
    BoundaryMismatch,

    #[error("pattern not locally admissible: {0}")]
    NotAdmissible(String),

    #[error("collar incomplete; missing sites: {0:?}")]
    MissingCollar(Vec<Site>),

    #[error("integer overflow in cocycle/lattice arithmetic")]
    Overflow,

    #[error("rank mismatch: expected vectors of rank {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },

    #[error("{0}")]
    BudgetExhausted(String),

    #[error("condition vacuous: boundary pins everything (window has empty interior)")]
    VacuousWindow,

    #[error("no proper subgroup given (K equals the reference lattice)")]
    NoProperSubgroup,

    #[error("subgroup is not contained in the reference lattice")]
    NotASublattice,

    #[error("transition matrix is not irreducible; communicating classes: {classes:?}")]
    NotIrreducible { classes: Vec<Vec<usize>> },

    #[error("transition matrix is not primitive (period {period}); use the periodic decomposition")]
    NotPrimitive { period: usize },

    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("frozen site {0:?}: no admissible symbol under the current boundary")]
    FrozenSite(Site),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
