//! Multicenter integration grids with a smooth partition of unity.
//!
//! Each center carries a spherical product grid (algebraic radial map times
//! an angular rule). Cell functions use the iterated polynomial switching
//! construction with three iterations; the resulting partition factors sum
//! to one at every point, turning a molecular integral into a sum of
//! single-center spherical integrals that each see at most one singularity,
//! at their own center.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::angular::angular_rule;
use crate::quad::radial::{build_radial_grid, RadialMapping};

/// Deterministic chunk length for parallel reductions. Partial sums are
/// formed per chunk and combined in chunk order, so results are bitwise
/// identical at any thread count.
pub const REDUCTION_CHUNK: usize = 2048;

/// One quadrature point of a multicenter grid.
#[derive(Debug, Clone, Copy)]
pub struct GridPoint {
    pub position: Vector3<f64>,
    pub weight: f64,
    pub owner: usize,
}

/// Parameters of the per-center spherical product grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub radial_count: usize,
    pub radial_alpha: f64,
    pub angular_order: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            radial_count: 100,
            radial_alpha: 1.0,
            angular_order: 29,
        }
    }
}

impl GridParams {
    /// Preset accuracy levels 1..=3 (coarse, default, fine).
    pub fn level(level: u8) -> Result<Self> {
        match level {
            1 => Ok(Self {
                radial_count: 60,
                radial_alpha: 1.0,
                angular_order: 11,
            }),
            2 => Ok(Self::default()),
            3 => Ok(Self {
                radial_count: 160,
                radial_alpha: 1.0,
                angular_order: 35,
            }),
            _ => Err(Error::InvalidParameter(format!(
                "grid level {level} not in 1..=3"
            ))),
        }
    }
}

/// A multicenter quadrature grid over R^3.
#[derive(Debug, Clone)]
pub struct MulticenterGrid {
    points: Vec<GridPoint>,
    centers: Vec<Vector3<f64>>,
    resolution: f64,
}

impl MulticenterGrid {
    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn centers(&self) -> &[Vector3<f64>] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f` over R^3. Evaluation runs in parallel over fixed
    /// chunks; the reduction order is independent of the thread count.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&Vector3<f64>) -> f64 + Sync,
    {
        let partials: Vec<Result<f64>> = self
            .points
            .par_chunks(REDUCTION_CHUNK)
            .map(|chunk| {
                let mut sum = 0.0;
                for p in chunk {
                    let v = f(&p.position);
                    if !v.is_finite() {
                        return Err(Error::NonFiniteIntegrand {
                            point: p.position,
                            value: v,
                        });
                    }
                    sum += p.weight * v;
                }
                Ok(sum)
            })
            .collect();
        let mut total = 0.0;
        for p in partials {
            total += p?;
        }
        Ok(total)
    }

    /// Partition factor of each center at `x` (normalized cell weights).
    pub fn partition_factors(&self, x: &Vector3<f64>) -> Vec<f64> {
        becke_factors(&self.centers, x)
    }

    /// Relative node spacing of a point at distance r from its owning
    /// center: neighboring nodes sit roughly `r * resolution()` apart.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }
}

/// Builds a Becke-style multicenter grid over the given centers.
pub fn build_multicenter_grid(
    centers: &[Vector3<f64>],
    params: &GridParams,
) -> Result<MulticenterGrid> {
    if centers.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one grid center is required".into(),
        ));
    }
    for (i, a) in centers.iter().enumerate() {
        for b in centers.iter().skip(i + 1) {
            if a == b {
                return Err(Error::InvalidParameter(format!(
                    "duplicate grid centers at ({}, {}, {})",
                    a.x, a.y, a.z
                )));
            }
        }
    }
    let radial = build_radial_grid(
        params.radial_count,
        60.0,
        RadialMapping::Algebraic {
            alpha: params.radial_alpha,
        },
    )?;
    let angular = angular_rule(params.angular_order)?;

    let mut points = Vec::with_capacity(centers.len() * radial.len() * angular.len());
    for (owner, center) in centers.iter().enumerate() {
        for &(r, wr) in radial.nodes() {
            for &(dir, wa) in angular.points() {
                let position = center + r * dir;
                // wr carries dr; the r^2 Jacobian turns it into a volume weight.
                let mut weight = wr * r * r * wa;
                if centers.len() > 1 {
                    weight *= becke_factors(centers, &position)[owner];
                }
                if weight > 0.0 {
                    points.push(GridPoint {
                        position,
                        weight,
                        owner,
                    });
                }
            }
        }
    }
    let n_theta = (params.angular_order + 1).div_ceil(2);
    let resolution = (std::f64::consts::PI / n_theta as f64).max(4.0 / params.radial_count as f64);
    Ok(MulticenterGrid {
        points,
        centers: centers.to_vec(),
        resolution,
    })
}

/// Normalized cell partition factors at `x` (one per center, summing to 1).
fn becke_factors(centers: &[Vector3<f64>], x: &Vector3<f64>) -> Vec<f64> {
    if centers.len() == 1 {
        return vec![1.0];
    }
    let dists: Vec<f64> = centers.iter().map(|c| (x - c).norm()).collect();
    let mut raw = vec![1.0; centers.len()];
    for i in 0..centers.len() {
        for j in 0..centers.len() {
            if i == j {
                continue;
            }
            let sep = (centers[i] - centers[j]).norm();
            let mu = (dists[i] - dists[j]) / sep;
            raw[i] *= switching(mu);
        }
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        // Deep inside one cell the other factors underflow; assign to the
        // nearest center.
        let nearest = dists
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite distances"))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut out = vec![0.0; centers.len()];
        out[nearest] = 1.0;
        return out;
    }
    raw.iter().map(|r| r / total).collect()
}

/// Iterated polynomial switching: three passes of f(mu) = 1.5 mu - 0.5 mu^3,
/// then mapped to the cell step s = (1 - f)/2.
fn switching(mu: f64) -> f64 {
    let mut f = mu.clamp(-1.0, 1.0);
    for _ in 0..3 {
        f = 1.5 * f - 0.5 * f * f * f;
    }
    0.5 * (1.0 - f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_center_grid() -> MulticenterGrid {
        build_multicenter_grid(&[Vector3::zeros()], &GridParams::default()).unwrap()
    }

    #[test]
    fn rejects_empty_and_duplicate_centers() {
        assert!(build_multicenter_grid(&[], &GridParams::default()).is_err());
        let c = Vector3::new(1.0, 0.0, 0.0);
        assert!(build_multicenter_grid(&[c, c], &GridParams::default()).is_err());
    }

    #[test]
    fn gaussian_volume_integral() {
        let grid = single_center_grid();
        let v = grid.integrate(|x| (-x.norm_squared()).exp()).unwrap();
        let exact = std::f64::consts::PI.powf(1.5);
        assert!((v - exact).abs() < 1e-10, "got {v}, want {exact}");
    }

    #[test]
    fn coulomb_singular_integral_single_center() {
        let grid = single_center_grid();
        // int e^{-|x|}/|x| dx = 4 pi
        let v = grid.integrate(|x| (-x.norm()).exp() / x.norm()).unwrap();
        let exact = 4.0 * std::f64::consts::PI;
        assert!((v - exact).abs() < 1e-8 * exact, "got {v}, want {exact}");
    }

    #[test]
    fn two_center_translation_invariance() {
        let r = Vector3::new(1.0, 0.0, 0.0);
        let grid = build_multicenter_grid(&[Vector3::zeros(), r], &GridParams::default()).unwrap();
        let v = grid
            .integrate(|x| (-x.norm_squared()).exp() + (-(x - r).norm_squared()).exp())
            .unwrap();
        let exact = 2.0 * std::f64::consts::PI.powf(1.5);
        assert!((v - exact).abs() < 1e-8, "got {v}, want {exact}");
    }

    #[test]
    fn partition_of_unity_sums_to_one() {
        let centers = [
            Vector3::zeros(),
            Vector3::new(1.3, 0.0, 0.0),
            Vector3::new(-0.4, 0.9, 0.2),
        ];
        let grid = build_multicenter_grid(&centers, &GridParams::level(1).unwrap()).unwrap();
        for p in grid.points().iter().step_by(97) {
            let total: f64 = grid.partition_factors(&p.position).iter().sum();
            assert!(
                (total - 1.0).abs() < 1e-13,
                "sum {total} at {:?}",
                p.position
            );
        }
    }

    #[test]
    fn coulomb_singularities_at_both_atoms() {
        // int e^{-|x - R_j|^2} / |x - R_j| dx = 2 pi for unit Gaussians.
        let a = Vector3::zeros();
        let b = Vector3::new(1.0, 0.0, 0.0);
        let grid = build_multicenter_grid(&[a, b], &GridParams::default()).unwrap();
        let exact = 2.0 * std::f64::consts::PI;
        for center in [a, b] {
            let v = grid
                .integrate(|x| {
                    let d = (x - center).norm();
                    (-(x - center).norm_squared()).exp() / d
                })
                .unwrap();
            assert!(
                (v - exact).abs() < 1e-7 * exact,
                "center {center:?}: {v} vs {exact}"
            );
        }
    }

    #[test]
    fn zero_function_integrates_to_zero() {
        let grid = single_center_grid();
        assert_eq!(grid.integrate(|_| 0.0).unwrap(), 0.0);
    }

    #[test]
    fn nan_is_reported_with_position() {
        let grid = single_center_grid();
        let err = grid
            .integrate(|x| if x.norm() > 1.0 { f64::NAN } else { 0.0 })
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteIntegrand { .. }));
    }

    #[test]
    fn refinement_deltas_shrink() {
        // Successive refinements of a positive integrand change the result
        // by a decreasing amount.
        let centers = [Vector3::zeros(), Vector3::new(0.8, 0.0, 0.0)];
        let f = |x: &Vector3<f64>| {
            let v = 0.45 / (x.norm() + 1e-300) + 0.45 / ((x - centers[1]).norm() + 1e-300);
            v * (-x.norm_squared()).exp()
        };
        let mut values = Vec::new();
        for level in 1..=3 {
            let grid =
                build_multicenter_grid(&centers, &GridParams::level(level).unwrap()).unwrap();
            values.push(grid.integrate(f).unwrap());
        }
        let d1 = (values[1] - values[0]).abs();
        let d2 = (values[2] - values[1]).abs();
        assert!(
            d2 < d1,
            "refinement deltas {d1:.3e} -> {d2:.3e} must shrink"
        );
    }
}
