//! One-dimensional radial quadrature on (0, infinity).
//!
//! Two node layouts are supported. The log map places Gauss-Legendre nodes
//! in ln r between r_min and r_max and handles integrands with integrable
//! power-law behavior r^(2 gamma - 2) * r^2 down to gamma ~ 0.14. The
//! algebraic map r = alpha t / (1 - t) with Gauss-Chebyshev nodes in t is
//! the workhorse for the per-center shells of the molecular grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss::gauss_legendre_on;

/// Node layout of a radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadialMapping {
    /// Gauss-Legendre in ln r on [ln r_min, ln r_max].
    Log { r_min: f64 },
    /// r = alpha t/(1-t), Gauss-Chebyshev (second kind) nodes in t.
    Algebraic { alpha: f64 },
}

/// A 1D quadrature rule for integrals of the form `int_0^inf f(r) dr`.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<(f64, f64)>,
    r_max: f64,
    mapping: RadialMapping,
}

impl RadialGrid {
    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn mapping(&self) -> RadialMapping {
        self.mapping
    }

    /// Integrates `f` over (0, infinity) in fixed node order.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<f64> {
        let mut sum = 0.0;
        for &(r, w) in &self.nodes {
            let v = f(r);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand {
                    point: nalgebra::Vector3::new(r, 0.0, 0.0),
                    value: v,
                });
            }
            sum += w * v;
        }
        Ok(sum)
    }
}

/// Builds an `n`-node radial grid reaching out to roughly `r_max`.
///
/// Nodes cluster near r = 0 under both mappings; see the module docs for
/// which map suits which integrand class.
pub fn build_radial_grid(n: usize, r_max: f64, mapping: RadialMapping) -> Result<RadialGrid> {
    if n < 16 {
        return Err(Error::InvalidParameter(format!(
            "radial grid needs n >= 16, got {n}"
        )));
    }
    if !(r_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "r_max {r_max} must be positive"
        )));
    }
    let nodes = match mapping {
        RadialMapping::Log { r_min } => {
            if !(r_min > 0.0) || r_min >= r_max {
                return Err(Error::InvalidParameter(format!(
                    "log map needs 0 < r_min < r_max, got r_min = {r_min}, r_max = {r_max}"
                )));
            }
            let (y, wy) = gauss_legendre_on(n, r_min.ln(), r_max.ln());
            y.iter()
                .zip(&wy)
                .map(|(yi, wi)| {
                    let r = yi.exp();
                    (r, wi * r)
                })
                .collect()
        }
        RadialMapping::Algebraic { alpha } => {
            if !(alpha > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "alpha {alpha} must be positive"
                )));
            }
            // t_i = (1 + cos theta_i)/2 with the plain-rule Chebyshev weights;
            // listed in increasing r, i.e. decreasing theta.
            let m = n as f64 + 1.0;
            let mut nodes = Vec::with_capacity(n);
            for i in (1..=n).rev() {
                let theta = std::f64::consts::PI * i as f64 / m;
                let t = 0.5 * (1.0 + theta.cos());
                let r = alpha * t / (1.0 - t);
                let jac = alpha / ((1.0 - t) * (1.0 - t));
                let w = std::f64::consts::PI / m * theta.sin() * 0.5 * jac;
                nodes.push((r, w));
            }
            nodes
        }
    };
    let r_last = nodes.last().map(|&(r, _)| r).unwrap_or(0.0);
    Ok(RadialGrid {
        nodes,
        r_max: r_max.max(r_last),
        mapping,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_radial_grid(8, 10.0, RadialMapping::Log { r_min: 1e-10 }).is_err());
        assert!(build_radial_grid(32, -1.0, RadialMapping::Log { r_min: 1e-10 }).is_err());
        assert!(build_radial_grid(32, 10.0, RadialMapping::Algebraic { alpha: 0.0 }).is_err());
    }

    #[test]
    fn nodes_increase_and_weights_positive() {
        for mapping in [
            RadialMapping::Log { r_min: 1e-10 },
            RadialMapping::Algebraic { alpha: 1.0 },
        ] {
            let grid = build_radial_grid(120, 40.0, mapping).unwrap();
            for pair in grid.nodes().windows(2) {
                assert!(pair[1].0 > pair[0].0);
            }
            assert!(grid.nodes().iter().all(|&(r, w)| r > 0.0 && w > 0.0));
        }
    }

    #[test]
    fn gamma_function_integrands() {
        // int_0^inf e^{-r} r^2 dr = Gamma(3) = 2
        let grid = build_radial_grid(200, 60.0, RadialMapping::Log { r_min: 1e-10 }).unwrap();
        let v = grid.integrate(|r| (-r).exp() * r * r).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "got {v}");

        // int_0^inf e^{-r}/r * r^2 dr = Gamma(2) = 1
        let v = grid.integrate(|r| (-r).exp() * r).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "got {v}");

        // Near-critical exponent: gamma = sqrt(1 - 0.99^2) ~ 0.141.
        // int_0^inf e^{-2r} r^{2 gamma - 2} r^2 dr = Gamma(2 gamma + 1) / 2^{2 gamma + 1}
        let two_gamma = 2.0 * (1.0_f64 - 0.99 * 0.99).sqrt();
        let exact = libm::tgamma(two_gamma + 1.0) / 2.0_f64.powf(two_gamma + 1.0);
        let grid = build_radial_grid(400, 60.0, RadialMapping::Log { r_min: 1e-12 }).unwrap();
        let v = grid
            .integrate(|r| (-2.0 * r).exp() * r.powf(two_gamma))
            .unwrap();
        assert!((v - exact).abs() < 1e-8 * exact, "got {v}, want {exact}");
    }

    #[test]
    fn volume_moment_reproduced() {
        // int_{r_min}^{r_max} r^2 dr to 1e-12 relative under the log map.
        let r_max = 25.0;
        let grid = build_radial_grid(200, r_max, RadialMapping::Log { r_min: 1e-8 }).unwrap();
        let v = grid.integrate(|r| r * r).unwrap();
        let exact = r_max * r_max * r_max / 3.0;
        assert!((v - exact).abs() < 1e-12 * exact, "got {v}, want {exact}");
    }

    #[test]
    fn algebraic_map_handles_smooth_decay() {
        let grid = build_radial_grid(100, 40.0, RadialMapping::Algebraic { alpha: 1.0 }).unwrap();
        // Gaussian moment: int r^2 e^{-r^2} dr = sqrt(pi)/4
        let v = grid.integrate(|r| r * r * (-r * r).exp()).unwrap();
        let exact = std::f64::consts::PI.sqrt() / 4.0;
        assert!((v - exact).abs() < 1e-10, "got {v}, want {exact}");
        // Slater moment: int r^2 e^{-r} dr = 2
        let v = grid.integrate(|r| r * r * (-r).exp()).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn nan_integrand_is_reported() {
        let grid = build_radial_grid(32, 10.0, RadialMapping::Algebraic { alpha: 1.0 }).unwrap();
        let err = grid
            .integrate(|r| if r > 1.0 { f64::NAN } else { 1.0 })
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteIntegrand { .. }));
    }
}
