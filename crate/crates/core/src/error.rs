use thiserror::Error;

use crate::coframe::BranchTag;
use crate::expr::{EvalError, ParseError, ZeroTestError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("total derivative is undefined on expressions containing a13")]
    A13InTotalDerivative,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("branch condition fails for {branch}: {condition}")]
    BranchMismatch { branch: BranchTag, condition: String },
    #[error("radicand of {0} is identically zero")]
    DegenerateRadical(String),
    #[error("explicit radical for {0} does not satisfy its defining power")]
    RadicalMismatch(String),
    #[error("coframe is singular at {singular} of {total} sample points")]
    Singular { singular: usize, total: usize },
    #[error("matrix has wrong shape: {0}")]
    Shape(String),
    #[error("unknown canonical form `{0}`")]
    UnknownForm(String),
    #[error("parameter {name} = {value} is excluded for form `{form}`")]
    ExcludedParameter { form: String, name: String, value: String },
    #[error("form `{form}` needs parameter {name}")]
    MissingParameter { form: String, name: String },
    #[error("parameter relation degenerates: {0}")]
    DegenerateRelation(String),
    #[error("fingerprint belongs to branch {found:?}, relation needs {expected}")]
    WrongBranch { expected: BranchTag, found: Option<BranchTag> },
    #[error("structure functions are not constant (deviation {0:.3e})")]
    NotConstant(f64),
    #[error("invalid transformation: {0}")]
    InvalidTransform(String),
    #[error("canonical database: {0}")]
    Database(String),
    #[error("unsupported target: {0}")]
    UnsupportedTarget(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
