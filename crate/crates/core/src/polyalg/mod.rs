//! Exact arithmetic for matrix-valued polynomials in `s` and `(s, th)`.

mod expr;
mod mat;
mod poly1;
mod poly2;
mod ratmat;

pub use expr::{format_matrix, parse_expr, parse_matrix, MPoly, Monomial};
pub use mat::{Entry, Mat, PolyMat1, PolyMat2, Shift};
pub use poly1::Poly1;
pub use poly2::{Bound, Poly2, Var};
pub use ratmat::RatMatrix;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PolyError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("malformed bound: {0}")]
    MalformedBound(String),
    #[error("column {column}: {message}")]
    Parse { column: usize, message: String },
    #[error("unbound symbol '{0}'")]
    UnboundSymbol(String),
}
