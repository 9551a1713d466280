// `!(x > 0.0)` style guards are used throughout to reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]

//! Numerical laboratory for spectral gaps of Dirac operators with Coulomb
//! potentials generated by finite charge distributions.
//!
//! The reduced formulation works with the upper spinor only: the smallest
//! eigenvalue of a lambda-dependent quadratic form crosses zero exactly at
//! the first gap eigenvalue, which turns the strongly indefinite Dirac
//! problem into a one-parameter family of definite pencils. On top of the
//! solvers sit estimators for the critical couplings, analytic bounds, and
//! a derivative-free search for eigenvalue-minimizing charge configurations
//! at fixed total mass.

pub mod basis;
pub mod bspline;
pub mod critical;
pub mod error;
pub mod forms;
pub mod linalg;
pub mod measure;
pub mod optim;
pub mod quad;
pub mod radial_solver;
pub(crate) mod rootfind;
pub mod solver3d;
pub mod spinor;

pub use error::{Error, Result};
pub use measure::{
    ChargeDistribution, GaussianCloud, MeasureSpec, PointCharge, SignedChargeDistribution,
    UniformBall,
};
