//! Point-equivalence classification of fourth-order ODEs `u'''' = f(x, u, u', u'', u''')`.
//!
//! The pipeline goes expression -> relative invariants -> invariant coframe ->
//! structure functions, and compares constant structure functions against a database
//! of canonical forms. Numeric code is generic over [`Scalar`]; the aliases below fix
//! it to `f64`.

pub mod canonical;
pub mod classifier;
pub mod coframe;
pub mod error;
pub mod expr;
pub mod forms;
pub mod invariants;
pub mod scalar;
pub mod transform;

pub use error::{Error, ExprError, Result};
pub use expr::{Expr, JetVar, Rational};
pub use scalar::Scalar;

pub type Complex64 = num_complex::Complex<f64>;
pub type Fingerprint = forms::StructureFingerprint<f64>;
pub type Tensor = forms::StructureTensor<f64>;
pub type Sample = expr::JetSample<f64>;
pub type Params = expr::ParamBinding<f64>;
