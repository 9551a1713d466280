//! Critical coupling constants: per-measure nu_0 and nu_1 estimates, the
//! analytic bounds relating them, and the gap interval for signed measures.
//!
//! nu_0(mu) is found by following the mass ray t -> lambda_1(t mu) to its
//! zero crossing. nu_1(mu) is estimated through the Hardy quotient
//!
//!   nu_1^2 <= mass^2 * inf_phi [ int |sigma.grad phi|^2 / V_mu ]
//!                              / [ int V_mu |phi|^2 ],
//!
//! a single well-conditioned generalized eigenproblem, instead of driving
//! lambda_1 to -1, which is numerically singular. The Galerkin restriction
//! biases the quotient upward, so the estimate converges to the true value
//! from above on the pure Coulomb reference.

use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::forms::{embed_spin, gradient_moments, value_moments};
use crate::linalg::{canonical_basis, hermitize, scale_symmetric, smallest_eigenpair};
use crate::measure::{ChargeDistribution, SignedChargeDistribution};
use crate::quad::MulticenterGrid;
use crate::radial_solver::{solve_radial, RadialProblem, RadialSolverConfig};
use crate::solver3d::{solve_lambda1, SolverConfig};

/// 2 / (pi/2 + 2/pi): the lower bound on nu_0 from the projector norm
/// inequality, about 0.9060.
pub fn tix_constant() -> f64 {
    let pi = std::f64::consts::PI;
    2.0 / (pi / 2.0 + 2.0 / pi)
}

/// The resolvent-based lower bound on the first eigenvalue,
/// lambda_1 >= (nu_0 - nu) / ((pi/2) nu_0 nu + nu_0 - nu), evaluated with
/// nu_0 replaced by any valid lower bound (the bound increases in nu_0).
pub fn lower_bound_lambda(nu: f64, nu0_lower: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&nu0_lower) || !(nu0_lower > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "nu_0 lower bound {nu0_lower} must lie in (0, 1]"
        )));
    }
    if !(0.0 <= nu && nu < nu0_lower) {
        return Err(Error::InvalidParameter(format!(
            "coupling {nu} must satisfy 0 <= nu < {nu0_lower}"
        )));
    }
    let gap = nu0_lower - nu;
    Ok(gap / (std::f64::consts::FRAC_PI_2 * nu0_lower * nu + gap))
}

/// Which eigenvalue backend evaluates lambda_1(t mu).
#[derive(Debug, Clone)]
pub enum SolverBackend {
    Radial(RadialSolverConfig),
    ThreeD(SolverConfig),
}

impl SolverBackend {
    pub fn radial() -> Self {
        Self::Radial(RadialSolverConfig::default())
    }

    pub fn three_d() -> Self {
        Self::ThreeD(SolverConfig::default())
    }

    /// lambda_1 of the measure; 1.0 when no eigenvalue has emerged.
    /// The radial backend accepts any translate of a radial measure
    /// (the eigenvalue is translation invariant).
    pub fn lambda1(&self, mu: &ChargeDistribution) -> Result<f64> {
        match self {
            Self::Radial(cfg) => {
                let measure = if mu.is_radial() {
                    mu.clone()
                } else {
                    mu.centered_at_origin()
                        .filter(|m| m.is_radial())
                        .ok_or_else(|| {
                            Error::NotRadial(
                                "the radial backend needs a radially symmetric measure".into(),
                            )
                        })?
                };
                let res = solve_radial(&RadialProblem {
                    measure,
                    config: *cfg,
                })?;
                Ok(res.lambda1)
            }
            Self::ThreeD(cfg) => Ok(solve_lambda1(mu, cfg)?.lambda1),
        }
    }

    fn nu_max_cap(&self) -> f64 {
        match self {
            Self::Radial(cfg) => cfg.nu_max_cap,
            Self::ThreeD(cfg) => cfg.nu_max_cap,
        }
    }
}

/// How a reported critical value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Solved,
    AnalyticBound,
    CapRule,
}

#[derive(Debug, Clone, Serialize)]
pub struct Nu0Outcome {
    pub value: f64,
    pub provenance: Provenance,
    pub solver_calls: usize,
}

/// nu_0(mu): total mass at which lambda_1 along the ray t mu crosses zero.
///
/// When the crossing does not occur before the atom-weight cap, the
/// boundary value mass / nu_max is reported under the cap rule. Tolerance
/// on the reported coupling: 1e-6.
pub fn nu0_of(mu: &ChargeDistribution, backend: &SolverBackend) -> Result<Nu0Outcome> {
    let mass = mu.total_mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter(
            "nu_0 needs a measure of positive mass".into(),
        ));
    }
    let nu_max = mu.nu_max();
    let cap = backend.nu_max_cap();
    let t_cap = if nu_max > 0.0 {
        cap / nu_max * (1.0 - 1e-12)
    } else {
        64.0 / mass
    };
    let mut calls = 0;
    // An eigenvalue at or below the gap bottom is far past the zero
    // crossing; fold it into a negative sign for the bisection.
    let mut eval = |t: f64| -> Result<f64> {
        calls += 1;
        match backend.lambda1(&mu.scale_mass(t)?) {
            Ok(l) => Ok(l),
            Err(Error::BelowGapBottom { .. }) => Ok(-2.0),
            Err(e) => Err(e),
        }
    };

    // Doubling phase from a safely subcritical coupling.
    let mut t_lo = (0.5 / mass).min(0.5 * t_cap);
    let mut lam = eval(t_lo)?;
    if lam <= 0.0 {
        // Already crossed: shrink downward to find a positive start.
        let mut t = t_lo;
        loop {
            t *= 0.5;
            let l = eval(t)?;
            if l > 0.0 {
                t_lo = t;
                break;
            }
            if t * mass < 1e-9 {
                return Err(Error::BracketFailure(
                    "lambda_1 <= 0 persists at vanishing coupling".into(),
                ));
            }
        }
        lam = 1.0;
    }
    let mut t_hi = t_lo;
    while lam > 0.0 {
        if t_hi >= t_cap {
            if nu_max > 0.0 {
                return Ok(Nu0Outcome {
                    value: mass / nu_max,
                    provenance: Provenance::CapRule,
                    solver_calls: calls,
                });
            }
            return Err(Error::NonConvergence(format!(
                "no zero crossing of lambda_1 up to scaled mass {:.3}",
                t_cap * mass
            )));
        }
        t_lo = t_hi;
        t_hi = (2.0 * t_hi).min(t_cap);
        lam = eval(t_hi)?;
    }

    // Bisection on the crossing.
    while (t_hi - t_lo) * mass > 1e-6 {
        let mid = 0.5 * (t_lo + t_hi);
        if eval(mid)? > 0.0 {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    Ok(Nu0Outcome {
        value: 0.5 * (t_lo + t_hi) * mass,
        provenance: Provenance::Solved,
        solver_calls: calls,
    })
}

/// The direct route to nu_1(mu): total mass at which lambda_1 along the
/// ray t mu reaches the bottom of the gap, detected as the onset of
/// below-gap failures. Numerically delicate near the limit, so this is
/// exposed as a cross-check against the Hardy-quotient route (the two
/// agree on the pure Coulomb case, where the cap rule gives exactly 1);
/// [`nu1_of`] is the production estimator.
pub fn nu1_of_crossing(mu: &ChargeDistribution, backend: &SolverBackend) -> Result<Nu0Outcome> {
    let mass = mu.total_mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter("nu_1 needs a measure of positive mass".into()));
    }
    let nu_max = mu.nu_max();
    let cap = backend.nu_max_cap();
    let t_cap = if nu_max > 0.0 { cap / nu_max * (1.0 - 1e-12) } else { 64.0 / mass };
    let mut calls = 0;
    // true = the eigenvalue still sits above the gap bottom at this mass.
    let above = |t: f64, calls: &mut usize| -> Result<bool> {
        *calls += 1;
        match backend.lambda1(&mu.scale_mass(t)?) {
            Ok(_) => Ok(true),
            Err(Error::BelowGapBottom { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };

    let mut t_lo = (0.5 / mass).min(0.5 * t_cap);
    if !above(t_lo, &mut calls)? {
        return Err(Error::BracketFailure(
            "eigenvalue already below the gap bottom at half unit mass".into(),
        ));
    }
    let mut t_hi = t_lo;
    loop {
        if t_hi >= t_cap {
            if nu_max > 0.0 {
                return Ok(Nu0Outcome {
                    value: mass / nu_max,
                    provenance: Provenance::CapRule,
                    solver_calls: calls,
                });
            }
            return Err(Error::NonConvergence(format!(
                "lambda_1 never reached the gap bottom up to scaled mass {:.3}",
                t_cap * mass
            )));
        }
        t_lo = t_hi;
        t_hi = (2.0 * t_hi).min(t_cap);
        if !above(t_hi, &mut calls)? {
            break;
        }
    }
    while (t_hi - t_lo) * mass > 1e-5 {
        let mid = 0.5 * (t_lo + t_hi);
        if above(mid, &mut calls)? {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    Ok(Nu0Outcome {
        value: 0.5 * (t_lo + t_hi) * mass,
        provenance: Provenance::Solved,
        solver_calls: calls,
    })
}

/// Hardy-quotient estimate of nu_1(mu): the smallest generalized
/// eigenvalue theta of H w = theta U w with
/// H_ij = int (sigma.grad phi_i)^dagger (sigma.grad phi_j) / V_mu and
/// U_ij = int V_mu phi_i^dagger phi_j, reported as mass * sqrt(theta).
/// Normalized so the point charge gives 1.
pub fn nu1_of(mu: &ChargeDistribution, basis: &BasisSet, grid: &MulticenterGrid) -> Result<f64> {
    let mass = mu.total_mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter(
            "nu_1 needs a measure of positive mass".into(),
        ));
    }
    let (a, b) = gradient_moments(mu, basis, grid, |v, w| w / v)?;
    let u = value_moments(mu, basis, grid, |v, w| w * v)?;
    let n = basis.spatial().len();

    let mut scale = Vec::with_capacity(2 * n);
    for block in 0..2 {
        let _ = block;
        for i in 0..n {
            let d = u[(i, i)];
            if !(d > 0.0) {
                return Err(Error::SingularRightForm(format!(
                    "potential form vanishes on basis function {i}"
                )));
            }
            scale.push(1.0 / d.sqrt());
        }
    }

    let mut h = embed_spin(&a, &b);
    scale_symmetric(&mut h, &scale);
    let mut u2 = nalgebra::DMatrix::<num_complex::Complex64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let v = num_complex::Complex64::new(u[(i, j)], 0.0);
            u2[(i, j)] = v;
            u2[(n + i, n + j)] = v;
        }
    }
    scale_symmetric(&mut u2, &scale);

    let ortho = canonical_basis(&hermitize(u2), 1e-10)?;
    let (theta, _) = smallest_eigenpair(&hermitize(h), &ortho)?;
    if theta < -1e-9 {
        return Err(Error::Eigensolver(format!(
            "Hardy quotient produced a negative smallest eigenvalue {theta}"
        )));
    }
    Ok(mass * theta.max(0.0).sqrt())
}

/// Which critical coupling a global search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    Nu0,
    Nu1,
}

/// Settings for the global search over K-atom configurations.
#[derive(Debug, Clone)]
pub struct GlobalSearchSettings {
    pub k: usize,
    pub restarts: usize,
    pub evals_per_restart: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    /// Slack for the bracket check on the returned value.
    pub tol: f64,
}

impl Default for GlobalSearchSettings {
    fn default() -> Self {
        Self {
            k: 2,
            restarts: 4,
            evals_per_restart: 40,
            seed: 1,
            solver: SolverConfig::default(),
            tol: 0.1,
        }
    }
}

/// Searches K-atom configurations for the smallest per-measure critical
/// coupling. Both couplings are mass-scale invariant, so configurations
/// are evaluated at a fixed subcritical total mass. The single-atom
/// incumbent is always seeded; with a zero budget it is returned as is.
/// The result is checked against the analytic bracket
/// [tix - tol, 1 + tol]; landing outside it is reported as a failure.
pub fn global_estimate(
    kind: CriticalKind,
    settings: &GlobalSearchSettings,
) -> Result<(f64, crate::optim::Configuration)> {
    use crate::optim::nelder_mead::nelder_mead;
    use crate::optim::Configuration;
    use rand::{Rng, SeedableRng};

    if settings.k == 0 {
        return Err(Error::InvalidParameter(
            "global search needs K >= 1 atoms".into(),
        ));
    }
    let mass = 0.5;
    let evaluate = |config: &Configuration| -> f64 {
        let value = config
            .to_measure(1e-3, settings.solver.nu_max_cap)
            .and_then(|mu| {
                let backend = if mu.centers().len() == 1 {
                    SolverBackend::radial()
                } else {
                    SolverBackend::ThreeD(settings.solver)
                };
                match kind {
                    CriticalKind::Nu0 => nu0_of(&mu, &backend).map(|o| o.value),
                    CriticalKind::Nu1 => {
                        let basis = crate::basis::build_basis(&mu, &settings.solver.basis)?;
                        let grid = crate::quad::build_multicenter_grid(
                            &mu.centers(),
                            &settings.solver.grid,
                        )?;
                        nu1_of(&mu, &basis, &grid)
                    }
                }
            });
        value.unwrap_or(5.0)
    };

    let incumbent_config = Configuration {
        positions: vec![[0.0; 3]],
        weights: vec![mass],
    };
    let mut best = (evaluate(&incumbent_config), incumbent_config);

    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(settings.seed);
    for _ in 0..settings.restarts {
        if settings.evals_per_restart == 0 {
            break;
        }
        let k = settings.k;
        let mut x0 = Vec::with_capacity(4 * k);
        for _ in 0..3 * k {
            x0.push(rng.gen::<f64>() - 0.5);
        }
        for _ in 0..k {
            x0.push(0.5 + rng.gen::<f64>());
        }
        let steps: Vec<f64> = (0..4 * k)
            .map(|i| if i < 3 * k { 0.4 } else { 0.3 })
            .collect();
        let out = nelder_mead(
            |params| match Configuration::from_free_parameters(params, mass, k) {
                Ok(c) => evaluate(&c),
                Err(_) => 5.0,
            },
            &x0,
            &steps,
            settings.evals_per_restart,
            1e-8,
        );
        if out.best_f < best.0 {
            if let Ok(c) = Configuration::from_free_parameters(&out.best_x, mass, k) {
                best = (out.best_f, c);
            }
        }
    }

    let floor = tix_constant() - settings.tol;
    let ceiling = 1.0 + settings.tol;
    // nu_1 estimates carry the Galerkin upward bias of the quotient, and
    // per-measure values legitimately exceed 1; only values sinking below
    // the analytic floor indicate a numerical failure.
    if best.0 < floor {
        return Err(Error::NonConvergence(format!(
            "global {kind:?} estimate {:.6} fell below the analytic floor {floor:.6}",
            best.0
        )));
    }
    if best.0 > ceiling && settings.evals_per_restart > 0 {
        return Err(Error::NonConvergence(format!(
            "global {kind:?} estimate {:.6} never reached the bracket [{:.4}, {:.4}]",
            best.0, floor, ceiling
        )));
    }
    Ok(best)
}

/// The certified and analytic spectral-gap intervals for a signed measure.
#[derive(Debug, Clone, Serialize)]
pub struct SignedGapReport {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Interval from the solved eigenvalues of the parts.
    pub certified: (f64, f64),
    /// Weaker interval from the resolvent bound with the Tix floor.
    pub analytic: (f64, f64),
}

/// Gap interval (-lambda_1(mu_-), lambda_1(mu_+)) for mu = mu_+ - mu_-.
/// Both part masses must stay below the configured nu_0 lower bound.
pub fn signed_gap(
    mu: &SignedChargeDistribution,
    backend: &SolverBackend,
    nu0_lower: f64,
) -> Result<SignedGapReport> {
    let (nu_p, nu_m) = (mu.nu_plus(), mu.nu_minus());
    for (label, nu) in [("positive", nu_p), ("negative", nu_m)] {
        if nu >= nu0_lower {
            return Err(Error::InvalidParameter(format!(
                "{label} part mass {nu} must stay below the nu_0 lower bound {nu0_lower}"
            )));
        }
    }
    let lambda_of = |part: &ChargeDistribution| -> Result<f64> {
        if part.total_mass() <= 0.0 {
            Ok(1.0)
        } else {
            backend.lambda1(part)
        }
    };
    let lambda_plus = lambda_of(&mu.positive_part)?;
    let lambda_minus = lambda_of(&mu.negative_part)?;
    let analytic = (
        -lower_bound_lambda(nu_m, nu0_lower)?,
        lower_bound_lambda(nu_p, nu0_lower)?,
    );
    Ok(SignedGapReport {
        lambda_plus,
        lambda_minus,
        certified: (-lambda_minus, lambda_plus),
        analytic,
    })
}

/// Per-measure report with provenance of each number.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalReport {
    pub mass: f64,
    pub nu0: Option<f64>,
    pub nu0_provenance: Option<Provenance>,
    pub nu1_estimate: f64,
    pub nu1_method: &'static str,
    /// Analytic bracket for the global constants.
    pub bracket: (f64, f64),
    pub ordered: bool,
}

impl CriticalReport {
    pub fn new(mass: f64, nu0: Option<Nu0Outcome>, nu1_estimate: f64) -> Self {
        let (nu0_value, nu0_provenance) = match nu0 {
            Some(o) => (Some(o.value), Some(o.provenance)),
            None => (None, None),
        };
        let ordered = nu0_value
            .map(|n0| n0 <= nu1_estimate + 1e-3)
            .unwrap_or(true);
        Self {
            mass,
            nu0: nu0_value,
            nu0_provenance,
            nu1_estimate,
            nu1_method: "hardy-quotient",
            bracket: (tix_constant(), 1.0),
            ordered,
        }
    }
}
