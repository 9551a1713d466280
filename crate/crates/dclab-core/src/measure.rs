//! Finite charge distributions and their Coulomb potentials.
//!
//! A [`ChargeDistribution`] is a non-negative measure made of point charges,
//! isotropic Gaussian clouds and uniform balls. All operations are pure and
//! values are immutable after construction, so they can be shared freely
//! across threads. Natural units (m = c = hbar = 1) are used throughout.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point charge (an atom of the measure). Weights must stay strictly
/// below 1 or the operator loses its distinguished extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCharge {
    pub position: Vector3<f64>,
    pub weight: f64,
}

/// An isotropic Gaussian charge cloud of standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCloud {
    pub position: Vector3<f64>,
    pub weight: f64,
    pub sigma: f64,
}

/// A uniformly charged ball. Atomless, so it never contributes to
/// `nu_max`; its potential has the classical interior/exterior form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformBall {
    pub position: Vector3<f64>,
    pub weight: f64,
    pub radius: f64,
}

/// A finite non-negative charge distribution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChargeDistribution {
    atoms: Vec<PointCharge>,
    clouds: Vec<GaussianCloud>,
    balls: Vec<UniformBall>,
}

impl ChargeDistribution {
    /// Empty measure (mass zero).
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a measure from its components. Atoms at identical positions
    /// are merged (weights added); the merged weight must stay below 1.
    pub fn new(
        atoms: Vec<PointCharge>,
        clouds: Vec<GaussianCloud>,
        balls: Vec<UniformBall>,
    ) -> Result<Self> {
        let mut merged: Vec<PointCharge> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            if !atom.weight.is_finite() || atom.weight <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "atom weight {} must be positive and finite",
                    atom.weight
                )));
            }
            match merged.iter_mut().find(|a| a.position == atom.position) {
                Some(existing) => existing.weight += atom.weight,
                None => merged.push(atom),
            }
        }
        for atom in &merged {
            if atom.weight >= 1.0 {
                return Err(Error::AtomWeightOutOfRange(atom.weight));
            }
        }
        for cloud in &clouds {
            if !(cloud.weight > 0.0) || !(cloud.sigma > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "cloud weight {} and sigma {} must be positive",
                    cloud.weight, cloud.sigma
                )));
            }
        }
        for ball in &balls {
            if !(ball.weight > 0.0) || !(ball.radius > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "ball weight {} and radius {} must be positive",
                    ball.weight, ball.radius
                )));
            }
        }
        Ok(Self {
            atoms: merged,
            clouds,
            balls,
        })
    }

    /// A single point charge of weight `w` at `position`.
    pub fn point(position: Vector3<f64>, w: f64) -> Result<Self> {
        Self::new(
            vec![PointCharge {
                position,
                weight: w,
            }],
            Vec::new(),
            Vec::new(),
        )
    }

    /// A point charge of weight `w` at the origin.
    pub fn point_at_origin(w: f64) -> Result<Self> {
        Self::point(Vector3::zeros(), w)
    }

    /// A Gaussian cloud of weight `w` and width `sigma` at the origin.
    pub fn cloud_at_origin(w: f64, sigma: f64) -> Result<Self> {
        Self::new(
            Vec::new(),
            vec![GaussianCloud {
                position: Vector3::zeros(),
                weight: w,
                sigma,
            }],
            Vec::new(),
        )
    }

    /// A uniform ball of mass `w` and radius `radius` centered at the origin.
    pub fn ball_at_origin(w: f64, radius: f64) -> Result<Self> {
        Self::new(
            Vec::new(),
            Vec::new(),
            vec![UniformBall {
                position: Vector3::zeros(),
                weight: w,
                radius,
            }],
        )
    }

    pub fn atoms(&self) -> &[PointCharge] {
        &self.atoms
    }

    pub fn clouds(&self) -> &[GaussianCloud] {
        &self.clouds
    }

    pub fn balls(&self) -> &[UniformBall] {
        &self.balls
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.clouds.is_empty() && self.balls.is_empty()
    }

    /// Total mass mu(R^3): the exact sum of all component weights.
    pub fn total_mass(&self) -> f64 {
        let mut mass = 0.0;
        for a in &self.atoms {
            mass += a.weight;
        }
        for c in &self.clouds {
            mass += c.weight;
        }
        for b in &self.balls {
            mass += b.weight;
        }
        mass
    }

    /// Weight of the largest atom; 0 for an atomless measure.
    pub fn nu_max(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).fold(0.0, f64::max)
    }

    /// All distinct component centers, atoms first. Used to anchor basis
    /// sets and integration grids.
    pub fn centers(&self) -> Vec<Vector3<f64>> {
        let mut centers: Vec<Vector3<f64>> = Vec::new();
        let mut push = |p: Vector3<f64>| {
            if !centers.contains(&p) {
                centers.push(p);
            }
        };
        for a in &self.atoms {
            push(a.position);
        }
        for c in &self.clouds {
            push(c.position);
        }
        for b in &self.balls {
            push(b.position);
        }
        centers
    }

    /// Radius of a ball around the origin that carries essentially all of
    /// the measure (clouds truncated at 12 sigma).
    pub fn support_radius(&self) -> f64 {
        let mut r: f64 = 0.0;
        for a in &self.atoms {
            r = r.max(a.position.norm());
        }
        for c in &self.clouds {
            r = r.max(c.position.norm() + 12.0 * c.sigma);
        }
        for b in &self.balls {
            r = r.max(b.position.norm() + b.radius);
        }
        r
    }

    /// The same measure translated so its single common center sits at the
    /// origin, when all components share one center. The eigenvalue is
    /// translation invariant, so this is exact.
    pub fn centered_at_origin(&self) -> Option<ChargeDistribution> {
        let centers = self.centers();
        match centers.as_slice() {
            [c] => Some(self.translate(&-c)),
            _ => None,
        }
    }

    /// True when every component sits exactly at the origin, so the
    /// potential is a function of |x| alone.
    pub fn is_radial(&self) -> bool {
        let origin = Vector3::zeros();
        self.atoms.iter().all(|a| a.position == origin)
            && self.clouds.iter().all(|c| c.position == origin)
            && self.balls.iter().all(|b| b.position == origin)
    }

    /// Coulomb potential of the measure at `x`.
    ///
    /// Errors when `x` coincides with an atom position; Gaussian clouds and
    /// balls are continued by their finite limits at their own centers.
    pub fn potential(&self, x: &Vector3<f64>) -> Result<f64> {
        let mut v = 0.0;
        for a in &self.atoms {
            let d = (x - a.position).norm();
            if d == 0.0 {
                return Err(Error::SingularPoint(a.position));
            }
            v += a.weight / d;
        }
        for c in &self.clouds {
            v += cloud_potential(c.weight, c.sigma, (x - c.position).norm());
        }
        for b in &self.balls {
            v += ball_potential(b.weight, b.radius, (x - b.position).norm());
        }
        Ok(v)
    }

    /// Radial potential V(r) for a measure centered at the origin.
    ///
    /// For a uniform ball this is nu/r outside the support and
    /// nu (3R^2 - r^2) / (2R^3) inside; point charges give nu/r. Accepts
    /// r = 0 only when the measure carries no atom there.
    pub fn radial_potential(&self, r: f64) -> Result<f64> {
        if !self.is_radial() {
            return Err(Error::NotRadial(
                "radial_potential requires all components centered at the origin".into(),
            ));
        }
        if r < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "radius {r} must be non-negative"
            )));
        }
        if r == 0.0 && !self.atoms.is_empty() {
            return Err(Error::SingularPoint(Vector3::zeros()));
        }
        let mut v = 0.0;
        for a in &self.atoms {
            v += a.weight / r;
        }
        for c in &self.clouds {
            v += cloud_potential(c.weight, c.sigma, r);
        }
        for b in &self.balls {
            v += ball_potential(b.weight, b.radius, r);
        }
        Ok(v)
    }

    /// The translated measure x -> x + a.
    pub fn translate(&self, a: &Vector3<f64>) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|p| PointCharge {
                    position: p.position + a,
                    weight: p.weight,
                })
                .collect(),
            clouds: self
                .clouds
                .iter()
                .map(|c| GaussianCloud {
                    position: c.position + a,
                    ..*c
                })
                .collect(),
            balls: self
                .balls
                .iter()
                .map(|b| UniformBall {
                    position: b.position + a,
                    ..*b
                })
                .collect(),
        }
    }

    /// The mass-scaled measure t*mu. Fails when any atom weight would
    /// reach 1.
    pub fn scale_mass(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale factor {t} must be positive"
            )));
        }
        let scaled_max = t * self.nu_max();
        if scaled_max >= 1.0 {
            return Err(Error::ScaleExceedsCap {
                factor: t,
                scaled_weight: scaled_max,
            });
        }
        Ok(Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| PointCharge {
                    position: a.position,
                    weight: t * a.weight,
                })
                .collect(),
            clouds: self
                .clouds
                .iter()
                .map(|c| GaussianCloud {
                    weight: t * c.weight,
                    ..*c
                })
                .collect(),
            balls: self
                .balls
                .iter()
                .map(|b| UniformBall {
                    weight: t * b.weight,
                    ..*b
                })
                .collect(),
        })
    }
}

/// Potential of a unit-free Gaussian cloud at distance `d` from its center.
/// erf(d / (sigma sqrt 2)) / d, continued by w sqrt(2/pi)/sigma at d = 0.
fn cloud_potential(w: f64, sigma: f64, d: f64) -> f64 {
    if d == 0.0 {
        return w * (2.0 / std::f64::consts::PI).sqrt() / sigma;
    }
    w * libm::erf(d / (sigma * std::f64::consts::SQRT_2)) / d
}

fn ball_potential(w: f64, radius: f64, d: f64) -> f64 {
    if d >= radius {
        w / d
    } else {
        w * (3.0 * radius * radius - d * d) / (2.0 * radius * radius * radius)
    }
}

/// A signed measure mu = mu_+ - mu_-.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedChargeDistribution {
    pub positive_part: ChargeDistribution,
    pub negative_part: ChargeDistribution,
}

impl SignedChargeDistribution {
    pub fn new(positive_part: ChargeDistribution, negative_part: ChargeDistribution) -> Self {
        Self {
            positive_part,
            negative_part,
        }
    }

    pub fn nu_plus(&self) -> f64 {
        self.positive_part.total_mass()
    }

    pub fn nu_minus(&self) -> f64 {
        self.negative_part.total_mass()
    }
}

// ---------------------------------------------------------------------------
// JSON wire format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct AtomSpec {
    pos: [f64; 3],
    weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CloudSpec {
    pos: [f64; 3],
    weight: f64,
    sigma: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BallSpec {
    pos: [f64; 3],
    weight: f64,
    radius: f64,
}

/// On-disk measure description:
/// `{"atoms":[{"pos":[x,y,z],"weight":w},...],"clouds":[{"pos":[...],"weight":w,"sigma":s},...]}`.
/// A `balls` array with `radius` entries is accepted as an extension.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(default)]
    atoms: Vec<AtomSpec>,
    #[serde(default)]
    clouds: Vec<CloudSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    balls: Vec<BallSpec>,
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("malformed measure JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measure spec serializes")
    }

    pub fn build(&self) -> Result<ChargeDistribution> {
        ChargeDistribution::new(
            self.atoms
                .iter()
                .map(|a| PointCharge {
                    position: Vector3::from(a.pos),
                    weight: a.weight,
                })
                .collect(),
            self.clouds
                .iter()
                .map(|c| GaussianCloud {
                    position: Vector3::from(c.pos),
                    weight: c.weight,
                    sigma: c.sigma,
                })
                .collect(),
            self.balls
                .iter()
                .map(|b| UniformBall {
                    position: Vector3::from(b.pos),
                    weight: b.weight,
                    radius: b.radius,
                })
                .collect(),
        )
    }
}

impl From<&ChargeDistribution> for MeasureSpec {
    fn from(mu: &ChargeDistribution) -> Self {
        Self {
            atoms: mu
                .atoms()
                .iter()
                .map(|a| AtomSpec {
                    pos: a.position.into(),
                    weight: a.weight,
                })
                .collect(),
            clouds: mu
                .clouds()
                .iter()
                .map(|c| CloudSpec {
                    pos: c.position.into(),
                    weight: c.weight,
                    sigma: c.sigma,
                })
                .collect(),
            balls: mu
                .balls()
                .iter()
                .map(|b| BallSpec {
                    pos: b.position.into(),
                    weight: b.weight,
                    radius: b.radius,
                })
                .collect(),
        }
    }
}
