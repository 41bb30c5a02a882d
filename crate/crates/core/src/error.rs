use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A scenario parameter violates one of the model invariants.
    #[error("invalid scenario: {0}")]
    Validation(String),

    /// The built-in layout only exists for one network shape.
    #[error("default layout requires L=4 cells and K=2 users (got L={cells}, K={users})")]
    UnsupportedLayout { cells: usize, users: usize },

    /// A matrix that must be Hermitian positive definite failed to factorize.
    #[error("{context}: matrix is not Hermitian positive definite")]
    NotPositiveDefinite { context: &'static str },

    /// Two LoS steering vectors of the same cell are collinear, so the
    /// projector design has no inverse Gram matrix.
    #[error("LoS matrix of cell {cell} is rank deficient: users {first} and {second} have collinear LoS components")]
    RankDeficientLos { cell: usize, first: usize, second: usize },

    /// The covariance matrices of a pilot group are (asymptotically)
    /// linearly dependent and the M-MMSE approximation does not exist.
    #[error("covariances of user {user} seen by cell {cell} are not asymptotically linearly independent ({detail})")]
    LinearlyDependent { cell: usize, user: usize, detail: String },

    /// A per-trial computation failed inside a Monte Carlo run.
    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
