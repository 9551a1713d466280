//! Radial, angular and multicenter quadrature.

pub mod angular;
pub mod gauss;
pub mod molecular;
pub mod radial;

pub use angular::{angular_rule, AngularRule, SUPPORTED_ANGULAR_ORDERS};
pub use molecular::{build_multicenter_grid, GridParams, GridPoint, MulticenterGrid};
pub use radial::{build_radial_grid, RadialGrid, RadialMapping};
