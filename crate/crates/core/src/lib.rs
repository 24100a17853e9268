//! Central values of quadratic twists of a fixed elliptic curve: coefficient
//! tables, twist families, Gauss sums, approximate functional equations,
//! mollifier diagnostics and moment statistics.

pub mod arith;
pub mod curve;
pub mod discriminants;
pub mod error;
pub mod gauss;
pub mod lvalue;
pub mod mollifier;
pub mod moments;
pub mod numerics;

pub use curve::{CoefficientTable, CurveModel, SplittingClass, SplittingDegree};
pub use discriminants::{kronecker, twist_root_number, DiscriminantStream, TwistClass};
pub use error::{Error, Result};
