//! Convex solvers: an ellipsoid method, a conic interior-point method and a
//! small modeling layer for Hermitian matrix variables.

pub mod builder;
pub mod ellipsoid;
pub mod sdp;

pub use ellipsoid::{ellipsoid_minimize, EllipsoidOptions, EllipsoidResult, EllipsoidState};
pub use builder::{AffineHerm, CVecVar, HermVar, LinExpr, Lmi, Model, ModelSolution};
pub use sdp::{
    solve_conic, ConicProblem, ConicSolution, SdpBlock, SdpOptions, SolveReport, SolveStatus,
    SymSparse,
};
