//! Geometric tests, normal forms and flat parametrizations for x-flat
//! two-input control-affine systems on R^5.

pub mod case_studies;
pub mod catalogue;
pub mod cli;
pub mod distributions;
pub mod documents;
pub mod error;
pub mod expr;
pub mod field;
pub mod flat;
pub mod linearizability;
pub mod normal_forms;
pub mod prolongation;
pub mod verification;

pub use error::{Error, Result};
pub use expr::{parse_expr, Assignment, Expr};
pub use field::{lie_bracket, lie_derivative, ControlAffineSystem, VectorField};
