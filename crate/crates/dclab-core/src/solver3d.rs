//! Three-dimensional solver: locates the first gap eigenvalue as the root
//! of the smallest form eigenvalue and reconstructs the 4-spinor.

use nalgebra::{DVector, Vector2, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{build_basis, BasisSet, EvenTemperedParams};
use crate::error::{Error, Result};
use crate::forms::{assemble, AssembledForms};
use crate::measure::ChargeDistribution;
use crate::quad::{build_multicenter_grid, GridParams, MulticenterGrid};
use crate::rootfind::{find_gap_root, RootOutcome};
use crate::spinor::sigma_dot_apply;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub basis: EvenTemperedParams,
    pub grid: GridParams,
    pub lambda_tol: f64,
    pub bracket_margin: f64,
    pub nu_max_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            basis: EvenTemperedParams::default(),
            grid: GridParams::default(),
            lambda_tol: 1e-9,
            bracket_margin: 1e-6,
            nu_max_cap: 0.999,
        }
    }
}

/// Per-solve diagnostics record (serialized to JSON by the CLI).
#[derive(Debug, Clone, Serialize)]
pub struct SolveDiagnostics {
    pub basis_size: usize,
    pub kept_directions: usize,
    pub overlap_condition: f64,
    pub grid_points: usize,
    pub bracket_iterations: usize,
    pub residual: f64,
}

/// Outcome of a 3D gap-eigenvalue solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub lambda1: f64,
    /// Spin-major coefficients over the basis (empty when no bound state).
    pub coefficients: DVector<C>,
    pub residual: f64,
    pub bound_state_found: bool,
    pub bracket_history: Vec<(f64, f64)>,
    pub diagnostics: SolveDiagnostics,
}

/// Builds basis and grid from the measure and solves for lambda_1.
pub fn solve_lambda1(mu: &ChargeDistribution, config: &SolverConfig) -> Result<SolveResult> {
    if mu.total_mass() <= 0.0 {
        return Err(Error::InvalidParameter(
            "solve needs a measure of positive mass".into(),
        ));
    }
    if mu.nu_max() >= config.nu_max_cap {
        return Err(Error::InvalidParameter(format!(
            "largest atom weight {} reaches the solver cap {}",
            mu.nu_max(),
            config.nu_max_cap
        )));
    }
    let centers = mu.centers();
    let basis = build_basis(mu, &config.basis)?;
    let grid = build_multicenter_grid(&centers, &config.grid)?;
    let forms = assemble(mu, &basis, &grid)?;
    solve_assembled(&forms, config)
}

/// Root-finds lambda_1 on preassembled forms.
pub fn solve_assembled(forms: &AssembledForms, config: &SolverConfig) -> Result<SolveResult> {
    let lo = -1.0 + config.bracket_margin;
    let hi = 1.0 - config.bracket_margin;
    let outcome = find_gap_root(
        |lambda| forms.smallest_form_eigenvalue(lambda).map(|(e, _)| e),
        lo,
        hi,
        config.lambda_tol,
    )?;
    let asm = forms.diagnostics();
    match outcome {
        RootOutcome::NoCrossing => Ok(SolveResult {
            lambda1: 1.0,
            coefficients: DVector::zeros(0),
            residual: f64::NAN,
            bound_state_found: false,
            bracket_history: Vec::new(),
            diagnostics: SolveDiagnostics {
                basis_size: asm.basis_size,
                kept_directions: asm.kept_directions,
                overlap_condition: asm.overlap_condition,
                grid_points: asm.grid_points,
                bracket_iterations: 0,
                residual: f64::NAN,
            },
        }),
        RootOutcome::Root {
            lambda,
            residual,
            history,
            evaluations,
        } => {
            let (_, coefficients) = forms.smallest_form_eigenvalue(lambda)?;
            Ok(SolveResult {
                lambda1: lambda,
                coefficients,
                residual,
                bound_state_found: true,
                bracket_history: history,
                diagnostics: SolveDiagnostics {
                    basis_size: asm.basis_size,
                    kept_directions: asm.kept_directions,
                    overlap_condition: asm.overlap_condition,
                    grid_points: asm.grid_points,
                    bracket_iterations: evaluations,
                    residual,
                },
            })
        }
    }
}

/// Upper spinor phi(x) of the solved state (zero when no bound state).
pub fn upper_spinor(result: &SolveResult, basis: &BasisSet, x: &Vector3<f64>) -> Vector2<C> {
    let n = basis.spatial().len();
    let mut out = Vector2::new(C::new(0.0, 0.0), C::new(0.0, 0.0));
    if result.coefficients.len() != 2 * n {
        return out;
    }
    for (i, orb) in basis.spatial().iter().enumerate() {
        let v = orb.value(x);
        if v != 0.0 {
            out[0] += result.coefficients[i] * C::new(v, 0.0);
            out[1] += result.coefficients[n + i] * C::new(v, 0.0);
        }
    }
    out
}

/// Lower spinor chi(x) = -i (sigma.grad phi)(x) / (1 + lambda + V(x)),
/// reconstructed from the analytic basis gradients.
pub fn reconstruct_lower_spinor(
    result: &SolveResult,
    mu: &ChargeDistribution,
    basis: &BasisSet,
    x: &Vector3<f64>,
) -> Result<Vector2<C>> {
    if !result.bound_state_found {
        return Err(Error::InvalidParameter(
            "no bound state was found; there is no spinor to reconstruct".into(),
        ));
    }
    let v = mu.potential(x)?;
    let denom = 1.0 + result.lambda1 + v;
    let n = basis.spatial().len();
    let mut sg = Vector2::new(C::new(0.0, 0.0), C::new(0.0, 0.0));
    for (i, orb) in basis.spatial().iter().enumerate() {
        let g = orb.gradient(x);
        if g.x != 0.0 || g.y != 0.0 || g.z != 0.0 {
            let up = sigma_dot_apply(&g, 0);
            let dn = sigma_dot_apply(&g, 1);
            sg[0] += result.coefficients[i] * up[0] + result.coefficients[n + i] * dn[0];
            sg[1] += result.coefficients[i] * up[1] + result.coefficients[n + i] * dn[1];
        }
    }
    let phase = C::new(0.0, -1.0) / C::new(denom, 0.0);
    Ok(Vector2::new(sg[0] * phase, sg[1] * phase))
}

/// The self-interaction potential Phi = |Psi|^2 * 1/|x| of the solved
/// state, evaluated by quadrature over a fixed grid. The density is
/// normalized on the grid; the original norm is kept for diagnostics.
///
/// The Coulomb kernel is mollified at each node's own quadrature spacing
/// (erf-smoothed). Without this, evaluating Phi at points close to grid
/// nodes picks up the self-interaction of the nearest node and the
/// discrete maximum lands on quadrature noise instead of the potential.
pub struct ElPotential {
    points: Vec<(Vector3<f64>, f64, f64)>,
    pub raw_norm: f64,
}

impl ElPotential {
    pub fn new(
        result: &SolveResult,
        mu: &ChargeDistribution,
        basis: &BasisSet,
        grid: &MulticenterGrid,
    ) -> Result<Self> {
        if !result.bound_state_found {
            return Err(Error::InvalidParameter(
                "no bound state was found; the density is undefined".into(),
            ));
        }
        let mut points = Vec::with_capacity(grid.len());
        let mut norm = 0.0;
        for p in grid.points() {
            let phi = upper_spinor(result, basis, &p.position);
            let chi = reconstruct_lower_spinor(result, mu, basis, &p.position)?;
            let density =
                phi[0].norm_sqr() + phi[1].norm_sqr() + chi[0].norm_sqr() + chi[1].norm_sqr();
            let w = p.weight * density;
            norm += w;
            let owner = grid.centers()[p.owner];
            let spacing = 0.6 * grid.resolution() * (p.position - owner).norm();
            points.push((p.position, w, spacing.max(1e-12)));
        }
        if !(norm > 0.0) {
            return Err(Error::Eigensolver(
                "state density integrates to zero on the grid".into(),
            ));
        }
        for (_, w, _) in &mut points {
            *w /= norm;
        }
        Ok(Self {
            points,
            raw_norm: norm,
        })
    }

    /// Phi(x): quadrature sum of density against the mollified kernel.
    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        let mut sum = 0.0;
        for (y, w, s) in &self.points {
            let d = (x - y).norm();
            if d > 8.0 * s {
                sum += w / d;
            } else if d > 0.0 {
                sum += w * libm::erf(d / (s * std::f64::consts::SQRT_2)) / d;
            } else {
                sum += w * (2.0 / std::f64::consts::PI).sqrt() / s;
            }
        }
        sum
    }
}

/// One-shot evaluation matching the operation signature; prefer keeping an
/// [`ElPotential`] around when evaluating many points.
pub fn el_potential(
    result: &SolveResult,
    mu: &ChargeDistribution,
    basis: &BasisSet,
    grid: &MulticenterGrid,
    x: &Vector3<f64>,
) -> Result<f64> {
    Ok(ElPotential::new(result, mu, basis, grid)?.eval(x))
}
