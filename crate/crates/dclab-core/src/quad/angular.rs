//! Unit-sphere quadrature exact up to a chosen spherical-harmonic degree.
//!
//! The rules are Gauss-Legendre in cos(theta) crossed with a uniform
//! azimuthal grid, which integrates every spherical harmonic of degree at
//! most `order` exactly. Weights sum to 4 pi.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::quad::gauss::gauss_legendre;

/// Angular orders with precomputed validation; `order` is the highest
/// spherical-harmonic degree integrated exactly.
pub const SUPPORTED_ANGULAR_ORDERS: [usize; 7] = [5, 9, 11, 17, 23, 29, 35];

/// A quadrature rule on the unit sphere.
#[derive(Debug, Clone)]
pub struct AngularRule {
    order: usize,
    points: Vec<(Vector3<f64>, f64)>,
}

impl AngularRule {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[(Vector3<f64>, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Builds the product rule of polynomial exactness degree `order`.
pub fn angular_rule(order: usize) -> Result<AngularRule> {
    if !SUPPORTED_ANGULAR_ORDERS.contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "angular order {order} not in the supported set {SUPPORTED_ANGULAR_ORDERS:?}"
        )));
    }
    let n_theta = (order + 1).div_ceil(2);
    let n_phi = order + 1;
    let (cos_nodes, cos_weights) = gauss_legendre(n_theta);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut points = Vec::with_capacity(n_theta * n_phi);
    for (ct, wt) in cos_nodes.iter().zip(&cos_weights) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for k in 0..n_phi {
            let phi = dphi * k as f64;
            let dir = Vector3::new(st * phi.cos(), st * phi.sin(), *ct);
            points.push((dir, wt * dphi));
        }
    }
    Ok(AngularRule { order, points })
}
