//! Gaussian 2-spinor trial functions for the three-dimensional solver.
//!
//! A basis function is a real s- or p-type Gaussian profile attached to a
//! center, carried by one of the two spin components. Even-tempered
//! exponent ladders are generated per measure center. Overlaps have closed
//! forms; everything else is integrated on the multicenter grid.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::ChargeDistribution;

/// Values of sqrt(a) * |x - center| beyond this are treated as zero
/// (the Gaussian is below 1e-62 there, under any quadrature noise floor).
pub const GAUSSIAN_TAIL_CUTOFF: f64 = 12.0;

/// Angular part of a spatial orbital.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngularKind {
    S,
    Px,
    Py,
    Pz,
}

/// A real Gaussian profile: (polynomial) * exp(-a |x - center|^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialOrbital {
    pub center: Vector3<f64>,
    pub exponent: f64,
    pub angular: AngularKind,
}

impl SpatialOrbital {
    /// Profile value at `x`.
    pub fn value(&self, x: &Vector3<f64>) -> f64 {
        let u = x - self.center;
        let au2 = self.exponent * u.norm_squared();
        if au2 > GAUSSIAN_TAIL_CUTOFF * GAUSSIAN_TAIL_CUTOFF {
            return 0.0;
        }
        let g = (-au2).exp();
        match self.angular {
            AngularKind::S => g,
            AngularKind::Px => u.x * g,
            AngularKind::Py => u.y * g,
            AngularKind::Pz => u.z * g,
        }
    }

    /// Gradient of the profile at `x` (closed form).
    pub fn gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let u = x - self.center;
        let au2 = self.exponent * u.norm_squared();
        if au2 > GAUSSIAN_TAIL_CUTOFF * GAUSSIAN_TAIL_CUTOFF {
            return Vector3::zeros();
        }
        let g = (-au2).exp();
        let two_a = 2.0 * self.exponent;
        match self.angular {
            AngularKind::S => -two_a * g * u,
            AngularKind::Px => Vector3::new(
                g - two_a * u.x * u.x * g,
                -two_a * u.x * u.y * g,
                -two_a * u.x * u.z * g,
            ),
            AngularKind::Py => Vector3::new(
                -two_a * u.y * u.x * g,
                g - two_a * u.y * u.y * g,
                -two_a * u.y * u.z * g,
            ),
            AngularKind::Pz => Vector3::new(
                -two_a * u.z * u.x * g,
                -two_a * u.z * u.y * g,
                g - two_a * u.z * u.z * g,
            ),
        }
    }
}

/// A 2-spinor basis function: spatial profile times a spin unit vector.
/// `spin` is the component index, 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisFunction {
    pub spatial: SpatialOrbital,
    pub spin: usize,
}

/// Even-tempered ladder parameters a_k = a0 * beta^k, k = 0..count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvenTemperedParams {
    pub a0: f64,
    pub beta: f64,
    pub count: usize,
    pub include_p: bool,
}

impl Default for EvenTemperedParams {
    fn default() -> Self {
        Self {
            a0: 0.02,
            beta: 2.8,
            count: 14,
            include_p: false,
        }
    }
}

/// An ordered basis set. Functions are laid out spin-major: all spatial
/// orbitals with spin 0 first, then the same orbitals with spin 1.
#[derive(Debug, Clone)]
pub struct BasisSet {
    spatial: Vec<SpatialOrbital>,
    provenance: Vec<(Vector3<f64>, EvenTemperedParams)>,
}

impl BasisSet {
    pub fn from_orbitals(spatial: Vec<SpatialOrbital>) -> Result<Self> {
        if spatial.is_empty() {
            return Err(Error::InvalidParameter(
                "basis set must not be empty".into(),
            ));
        }
        let mut dedup: Vec<SpatialOrbital> = Vec::with_capacity(spatial.len());
        for orb in spatial {
            if !(orb.exponent > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "basis exponent {} must be positive",
                    orb.exponent
                )));
            }
            if !dedup.contains(&orb) {
                dedup.push(orb);
            }
        }
        Ok(Self {
            spatial: dedup,
            provenance: Vec::new(),
        })
    }

    pub fn spatial(&self) -> &[SpatialOrbital] {
        &self.spatial
    }

    pub fn provenance(&self) -> &[(Vector3<f64>, EvenTemperedParams)] {
        &self.provenance
    }

    /// Number of spin-orbital functions (twice the spatial count).
    pub fn len(&self) -> usize {
        2 * self.spatial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spatial.is_empty()
    }

    /// The `i`-th basis function in spin-major order.
    pub fn function(&self, i: usize) -> BasisFunction {
        let n = self.spatial.len();
        BasisFunction {
            spatial: self.spatial[i % n],
            spin: i / n,
        }
    }

    /// Translates every center by `a` (for gauge/translation checks).
    pub fn translate(&self, a: &Vector3<f64>) -> Self {
        Self {
            spatial: self
                .spatial
                .iter()
                .map(|o| SpatialOrbital {
                    center: o.center + a,
                    ..*o
                })
                .collect(),
            provenance: self.provenance.iter().map(|(c, p)| (c + a, *p)).collect(),
        }
    }
}

/// Builds the even-tempered basis over all component centers of `mu`.
pub fn build_basis(mu: &ChargeDistribution, params: &EvenTemperedParams) -> Result<BasisSet> {
    if mu.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot build a basis for the empty measure; supply at least one component".into(),
        ));
    }
    build_basis_at(&mu.centers(), params)
}

/// Same ladder attached to explicit centers.
pub fn build_basis_at(centers: &[Vector3<f64>], params: &EvenTemperedParams) -> Result<BasisSet> {
    if centers.is_empty() {
        return Err(Error::InvalidParameter(
            "basis needs at least one center".into(),
        ));
    }
    if params.count == 0 {
        return Err(Error::InvalidParameter(
            "even-tempered count must be at least 1".into(),
        ));
    }
    if !(params.a0 > 0.0) || !(params.beta > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "even-tempered parameters need a0 > 0 and beta > 1, got a0 = {}, beta = {}",
            params.a0, params.beta
        )));
    }
    let mut spatial = Vec::new();
    for center in centers {
        let mut a = params.a0;
        for _ in 0..params.count {
            spatial.push(SpatialOrbital {
                center: *center,
                exponent: a,
                angular: AngularKind::S,
            });
            if params.include_p {
                for ang in [AngularKind::Px, AngularKind::Py, AngularKind::Pz] {
                    spatial.push(SpatialOrbital {
                        center: *center,
                        exponent: a,
                        angular: ang,
                    });
                }
            }
            a *= params.beta;
        }
    }
    let mut set = BasisSet::from_orbitals(spatial)?;
    set.provenance = centers.iter().map(|c| (*c, *params)).collect();
    Ok(set)
}

/// Closed-form overlap of two spatial orbitals.
pub fn overlap(a: &SpatialOrbital, b: &SpatialOrbital) -> f64 {
    let p = a.exponent + b.exponent;
    let q = a.exponent * b.exponent / p;
    let ab = a.center - b.center;
    let pref = (-q * ab.norm_squared()).exp();
    if pref == 0.0 {
        return 0.0;
    }
    let pc = (a.exponent * a.center + b.exponent * b.center) / p;
    let mut out = pref;
    for d in 0..3 {
        let pa = pc[d] - a.center[d];
        let pb = pc[d] - b.center[d];
        let root = (std::f64::consts::PI / p).sqrt();
        let (la, lb) = (poly_order(a.angular, d), poly_order(b.angular, d));
        out *= root
            * match (la, lb) {
                (0, 0) => 1.0,
                (1, 0) => pa,
                (0, 1) => pb,
                (1, 1) => pa * pb + 0.5 / p,
                _ => unreachable!("only s and p orbitals are supported"),
            };
    }
    out
}

fn poly_order(angular: AngularKind, dim: usize) -> usize {
    match (angular, dim) {
        (AngularKind::Px, 0) | (AngularKind::Py, 1) | (AngularKind::Pz, 2) => 1,
        _ => 0,
    }
}
