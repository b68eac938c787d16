//! Numerical toolkit for γ-divergences on density manifolds: grids and
//! discrete operators, divergence functionals, the mobility-weighted elliptic
//! metric, drift-diffusion flows, γ-Wasserstein geodesics, Hessian and
//! Bakry–Émery calculus, and inequality verification.
//!
//! Every routine is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`). The aliases below fix the common double-precision case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densities;
pub mod elliptic;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod gamma_calculus;
pub mod geodesic;
pub mod geometry;
pub mod grid;
mod linalg;
pub mod scalar;
pub mod verify;

pub use elliptic::{PotentialField, SolverOptions, TangentField};
pub use error::{Error, Result};
pub use flow::{FlowOptions, FlowTrace};
pub use functionals::{Branch, DensityField, FisherForm, GammaParams};
pub use gamma_calculus::CriterionReport;
pub use geodesic::{GeodesicPath, ShootingOptions, WassersteinResult};
pub use geometry::{HessianReport, LogGradientCoupling, YanoReport};
pub use grid::{build_grid, Grid, GridConfig, ScalarField, SymMatrixField, Topology, VectorField};
pub use scalar::Real;
pub use verify::{PoincareEigen, VerifyReport};

pub type Grid64 = Grid<f64>;
pub type Grid32 = Grid<f32>;
pub type ScalarField64 = ScalarField<f64>;
pub type ScalarField32 = ScalarField<f32>;
pub type DensityField64 = DensityField<f64>;
pub type DensityField32 = DensityField<f32>;
pub type GammaParams64 = GammaParams<f64>;
pub type GammaParams32 = GammaParams<f32>;
