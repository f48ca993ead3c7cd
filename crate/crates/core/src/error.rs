use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: undeclared condition `{name}`")]
    UndeclaredCondition { line: usize, name: String },

    #[error("line {line}: duplicate operator `{name}`")]
    DuplicateOperator { line: usize, name: String },

    #[error("line {line}: effect probabilities of `{operator}` sum to {sum}, expected 1")]
    ProbabilitySum {
        line: usize,
        operator: String,
        sum: String,
    },

    #[error("state space has {states} states, above the cap of {cap}")]
    CapExceeded { states: u128, cap: u128 },

    #[error("lattice cannot be enumerated")]
    NotEnumerable,

    #[error("state enumeration attempted while forbidden")]
    EnumerationForbidden,

    #[error("singular linear system")]
    SingularSystem,

    #[error("partition domains differ")]
    DomainMismatch,

    #[error("cannot pick an element of an empty set")]
    EmptySet,

    #[error("no proper state: the goal is unreachable with probability 1 from the requested states")]
    NoProperState,

    #[error("block {block} mixes goal and non-goal states")]
    GoalImpureBlock { block: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}
