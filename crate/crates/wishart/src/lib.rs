pub mod bounds;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod partitions;
pub mod quad;
pub mod sampling;
pub mod scalar;
pub mod specnum;
pub mod tracepoly;
pub mod wick;

pub use error::{Error, Result};
pub use linalg::{Matrix, SymMatrix};
pub use partitions::{PartitionClass, PartitionType, SetPartition};
pub use scalar::Real;
pub use tracepoly::{RLaurent, TracePolynomial};

/// Exact rational scalar used by all symbolic algebra.
pub type Rational = num_rational::BigRational;
/// Arbitrary-precision integer used for counts.
pub type Integer = num_bigint::BigInt;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type SymMatrix64 = SymMatrix<f64>;
pub type SymMatrix32 = SymMatrix<f32>;
