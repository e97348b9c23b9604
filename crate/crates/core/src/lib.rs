//! Teleportation schemes, Pimsner-Popa bases and quantum-graph colourings for
//! inclusions of finite-dimensional von Neumann algebras `N ⊆ M`.
//!
//! Everything is generic over the real scalar (`f32` or `f64`); the `*64`
//! aliases fix `f64`, which the default tolerances assume.

pub mod algebra;
pub mod error;
pub mod inclusion;
pub mod linalg;
pub mod pp_basis;
pub mod qgraph;
pub mod report;
pub mod scalar;
pub mod teleport;
pub mod tower;

pub use algebra::{Block, FinDimAlgebra, TraceFunctional};
pub use error::{Error, Result};
pub use inclusion::{Inclusion, Superoperator};
pub use linalg::{CMatrix, CVector, Subspace, Tolerance};
pub use pp_basis::{BasisFlags, BasisReport, PPBasis};
pub use report::{Check, Report};
pub use scalar::{Real, C};
pub use tower::{GnsSpace, Level, Tower};

pub type CMatrix64 = CMatrix<f64>;
pub type CVector64 = CVector<f64>;
pub type Tolerance64 = Tolerance<f64>;
