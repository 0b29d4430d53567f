use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: u64,
        found: usize,
        expected: usize,
    },

    #[error("column {column} has {found} observations, expected {expected}")]
    ColumnLength {
        column: usize,
        found: usize,
        expected: usize,
    },

    #[error("input table has no variables or no observations")]
    EmptyTable,

    #[error("need at least 2 observations, found {0}")]
    TooFewRows(usize),

    #[error("missing value in row {row}, column {column:?}")]
    MissingValue { row: u64, column: String },

    #[error("duplicate variable name {0:?}")]
    DuplicateVariable(String),

    #[error("{n} variables exceed the supported maximum of {cap}")]
    TooManyVariables { n: usize, cap: usize },

    #[error("variable {name:?} declared with arity {declared} but has {observed} distinct states")]
    DeclaredArityTooSmall {
        name: String,
        declared: usize,
        observed: usize,
    },

    #[error("arity declaration names unknown variable {0:?}")]
    UnknownVariable(String),

    #[error("malformed arity declaration on line {line}: {text:?}")]
    MalformedArity { line: usize, text: String },

    #[error("memory budget of {budget} bytes cannot hold the first layer ({required} bytes)")]
    BudgetTooSmall { budget: u64, required: u64 },

    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),

    #[error("brute-force oracle supports at most {cap} variables, got {n}")]
    OracleTooLarge { n: usize, cap: usize },
}
