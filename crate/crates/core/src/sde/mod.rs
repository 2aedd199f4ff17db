//! fBM-driven SDEs: fields, the Euler scheme and its error constant.

mod constants;
mod euler;
mod field;
mod ssde;

pub use constants::{euler_constants, euler_level, k_series, EulerConstants};
pub use euler::euler_solve;
pub use field::{FieldBounds, Monomial, Polynomial, VectorFieldSpec};
pub use ssde::{ssde, SdeResult};
