use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression too large: {0} terms exceeds the configured limit")]
    SizeLimit(usize),
    #[error("exponent out of range in a monomial")]
    DegreeOverflow,
    #[error("not polynomial in `{0}`")]
    NotPolynomial(String),
    #[error("cyclic binding through `{0}`")]
    CyclicBinding(String),
    #[error("jet order overflow: {0}")]
    JetOrder(String),
    #[error("no mirror variable for `{0}`")]
    NoMirror(String),
    #[error("`{0}` is an auxiliary name and has no total derivative")]
    Auxiliary(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("binding violates admissibility: {0}")]
    Admissibility(String),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("lemma premise violated: {0}")]
    Premise(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
