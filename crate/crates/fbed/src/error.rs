use crate::selection::SelectionResult;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {msg} (line {line}, column {col})")]
    Csv { line: usize, col: usize, msg: String },

    #[error("target column '{0}' not found in header")]
    MissingTarget(String),

    #[error("duplicate column name '{0}'")]
    DuplicateName(String),

    #[error("degenerate binary target: only one class present")]
    DegenerateBinaryTarget,

    #[error("constant column '{0}': zero variance makes the design singular")]
    ConstantColumn(String),

    #[error("non-finite value in column '{name}' at row {row}")]
    NonFinite { name: String, row: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular weighted normal equations (ridge fallback failed)")]
    SingularSystem,

    #[error("rank-deficient design matrix (ridge fallback failed)")]
    RankDeficient,

    #[error("node index {0} out of range")]
    InvalidNode(usize),

    #[error("invalid separation query: {0}")]
    InvalidQuery(String),

    #[error("edge ({0} -> {1}) is invalid here")]
    InvalidEdge(usize, usize),

    #[error("edge list contains a directed cycle")]
    CyclicGraph,

    #[error("graph parse error at line {line}: {msg}")]
    GraphParse { line: usize, msg: String },

    #[error("graph has latent nodes; use brute_force_mb for the marginal blanket")]
    LatentNodesPresent,

    #[error("target node {0} is latent")]
    LatentTarget(usize),

    #[error("markov blanket not unique: {0:?} and {1:?} are both minimal")]
    NonUniqueMarkovBlanket(Vec<usize>, Vec<usize>),

    #[error("exhaustive blanket search supports at most 14 observed non-target nodes, got {0}")]
    SubsetSearchTooLarge(usize),

    #[error("oracle criterion expects {expected} variables, dataset has {actual}")]
    VariableCountMismatch { expected: usize, actual: usize },

    /// A numerical error inside a selection run. The partial result carries
    /// the trace accumulated up to the failing evaluation.
    #[error("selection aborted after {} evaluations: {source}", partial.n_evaluations)]
    SelectionAborted {
        #[source]
        source: Box<Error>,
        partial: Box<SelectionResult>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
