//! Search over K-atom configurations at fixed total mass for the
//! eigenvalue minimizer, plus the concentration diagnostic of the
//! optimality condition and two-delta scan tables.

pub mod nelder_mead;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::build_basis;
use crate::error::{Error, Result};
use crate::measure::{ChargeDistribution, PointCharge};
use crate::quad::MulticenterGrid;
use crate::solver3d::{solve_lambda1, ElPotential, SolveResult, SolverConfig};
use nelder_mead::nelder_mead;

/// A candidate: K atom positions with simplex-constrained weights summing
/// to the total mass, weighted centroid pinned at the origin.
#[derive(Debug, Clone, Serialize)]
pub struct Configuration {
    pub positions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl Configuration {
    /// Builds a configuration from free parameters: 3K position components
    /// followed by K simplex parameters (weights = nu * theta_i^2 / sum).
    /// The weighted centroid is subtracted.
    pub fn from_free_parameters(params: &[f64], nu: f64, k: usize) -> Result<Self> {
        if params.len() != 4 * k {
            return Err(Error::InvalidParameter(format!(
                "expected {} parameters for K = {k}, got {}",
                4 * k,
                params.len()
            )));
        }
        let thetas = &params[3 * k..];
        let norm: f64 = thetas.iter().map(|t| t * t).sum();
        if !(norm > 1e-12) {
            return Err(Error::InvalidParameter(
                "all simplex parameters vanish".into(),
            ));
        }
        let weights: Vec<f64> = thetas.iter().map(|t| nu * t * t / norm).collect();
        let mut positions: Vec<Vector3<f64>> = (0..k)
            .map(|i| Vector3::new(params[3 * i], params[3 * i + 1], params[3 * i + 2]))
            .collect();
        let centroid: Vector3<f64> = positions
            .iter()
            .zip(&weights)
            .map(|(p, w)| p * (*w / nu))
            .sum();
        for p in &mut positions {
            *p -= centroid;
        }
        Ok(Self {
            positions: positions.iter().map(|p| [p.x, p.y, p.z]).collect(),
            weights,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The measure of this configuration. Atoms closer than `merge_tol`
    /// are merged (weighted-average position); fails when a merged weight
    /// reaches `weight_cap`.
    pub fn to_measure(&self, merge_tol: f64, weight_cap: f64) -> Result<ChargeDistribution> {
        let mut merged: Vec<(Vector3<f64>, f64)> = Vec::with_capacity(self.positions.len());
        for (pos, &w) in self.positions.iter().zip(&self.weights) {
            if w <= 0.0 {
                continue;
            }
            let p = Vector3::from(*pos);
            match merged.iter_mut().find(|(q, _)| (*q - p).norm() < merge_tol) {
                Some((q, wq)) => {
                    *q = (*q * *wq + p * w) / (*wq + w);
                    *wq += w;
                }
                None => merged.push((p, w)),
            }
        }
        for (_, w) in &merged {
            if *w >= weight_cap {
                return Err(Error::InvalidParameter(format!(
                    "merged atom weight {w} reaches the cap {weight_cap}"
                )));
            }
        }
        ChargeDistribution::new(
            merged
                .into_iter()
                .map(|(p, w)| PointCharge {
                    position: p,
                    weight: w,
                })
                .collect(),
            Vec::new(),
            Vec::new(),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub configuration: Configuration,
    pub lambda1: f64,
    pub residual: f64,
    /// Best value seen so far along the trace (non-increasing).
    pub incumbent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationTrace {
    pub entries: Vec<TraceEntry>,
    pub termination: String,
    pub seed: u64,
    pub total_evaluations: usize,
}

/// Largest total mass the search accepts without explicit override: the
/// analytic floor on nu_0 minus the battery tolerance.
pub const MASS_SAFETY_FLOOR: f64 = 0.9051;

#[derive(Debug, Clone)]
pub struct OptimizerSettings {
    pub restarts: usize,
    pub evals_per_restart: usize,
    pub seed: u64,
    pub merge_tol: f64,
    pub position_scale: f64,
    pub solver: SolverConfig,
    /// Objective value assigned to infeasible or failed candidates.
    pub penalty: f64,
    /// Upper limit on the searched total mass; defaults to 0.9 and cannot
    /// exceed [`MASS_SAFETY_FLOOR`], below which every eigenvalue stays
    /// safely inside the gap.
    pub max_mass: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            restarts: 8,
            evals_per_restart: 200,
            seed: 1,
            merge_tol: 1e-3,
            position_scale: 1.0,
            solver: SolverConfig::default(),
            penalty: 2.0,
            max_mass: 0.9,
        }
    }
}

/// Result of [`minimize_lambda1`].
#[derive(Debug)]
pub struct MinimizeOutcome {
    pub best: Configuration,
    pub lambda1: f64,
    pub trace: OptimizationTrace,
}

fn evaluate_candidate(config: &Configuration, settings: &OptimizerSettings) -> (f64, f64) {
    match config
        .to_measure(settings.merge_tol, settings.solver.nu_max_cap)
        .and_then(|mu| solve_lambda1(&mu, &settings.solver))
    {
        Ok(res) if res.bound_state_found => (res.lambda1, res.residual),
        Ok(_) => (1.0, 0.0),
        Err(_) => (settings.penalty, f64::NAN),
    }
}

/// Minimizes lambda_1 over K-atom configurations of total mass `nu`.
///
/// The single merged atom is always evaluated first and stands as the
/// incumbent; restarts explore around random K-atom seeds and never abort
/// on solver failures (failed candidates are penalized).
pub fn minimize_lambda1(
    nu: f64,
    k: usize,
    settings: &OptimizerSettings,
) -> Result<MinimizeOutcome> {
    if nu == 0.0 {
        // Degenerate: the free operator, lambda_1 = 1, empty configuration.
        return Ok(MinimizeOutcome {
            best: Configuration {
                positions: Vec::new(),
                weights: Vec::new(),
            },
            lambda1: 1.0,
            trace: OptimizationTrace {
                entries: Vec::new(),
                termination: "zero mass".into(),
                seed: settings.seed,
                total_evaluations: 0,
            },
        });
    }
    let mass_limit = settings.max_mass.min(MASS_SAFETY_FLOOR);
    if !(nu > 0.0) || nu > mass_limit {
        return Err(Error::InvalidParameter(format!(
            "total mass {nu} must lie in (0, {mass_limit}]"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one atom".into()));
    }

    // K = 1 incumbent: the merged configuration.
    let merged = Configuration {
        positions: vec![[0.0; 3]],
        weights: vec![nu],
    };
    let (merged_lambda, merged_residual) = evaluate_candidate(&merged, settings);

    struct RestartOutput {
        entries: Vec<TraceEntry>,
        evaluations: usize,
    }

    let restarts: Vec<RestartOutput> = (0..settings.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha20Rng::seed_from_u64(settings.seed.wrapping_add(restart as u64));
            let mut x0 = Vec::with_capacity(4 * k);
            for _ in 0..3 * k {
                x0.push(settings.position_scale * (rng.gen::<f64>() - 0.5));
            }
            for _ in 0..k {
                x0.push(0.5 + rng.gen::<f64>());
            }
            let steps: Vec<f64> = (0..4 * k)
                .map(|i| {
                    if i < 3 * k {
                        0.4 * settings.position_scale
                    } else {
                        0.3
                    }
                })
                .collect();

            let mut entries: Vec<TraceEntry> = Vec::new();
            let mut best: (f64, Configuration) = (f64::INFINITY, merged.clone());
            let objective = |params: &[f64],
                             entries: &mut Vec<TraceEntry>,
                             best: &mut (f64, Configuration)|
             -> f64 {
                match Configuration::from_free_parameters(params, nu, k) {
                    Ok(config) => {
                        let (lambda, residual) = evaluate_candidate(&config, settings);
                        if lambda < best.0 {
                            *best = (lambda, config.clone());
                        }
                        entries.push(TraceEntry {
                            configuration: config,
                            lambda1: lambda,
                            residual,
                            incumbent: best.0,
                        });
                        lambda
                    }
                    Err(_) => settings.penalty,
                }
            };

            let mut evaluations = 0;
            let budget = settings.evals_per_restart;
            // Oriented restarts within the budget: re-center on the best
            // point with shrunken random steps.
            let mut x_start = x0;
            let mut step_scale = 1.0;
            while evaluations < budget {
                let remaining = budget - evaluations;
                let scaled: Vec<f64> = steps.iter().map(|s| s * step_scale).collect();
                let out = nelder_mead(
                    |p| objective(p, &mut entries, &mut best),
                    &x_start,
                    &scaled,
                    remaining,
                    1e-10,
                );
                evaluations += out.evaluations;
                if out.converged && out.best_f <= best.0 + 1e-12 {
                    // Perturb around the optimum and try again.
                    x_start = out.best_x;
                    for x in &mut x_start {
                        *x += 0.05 * step_scale * (rng.gen::<f64>() - 0.5);
                    }
                    step_scale *= 0.5;
                    if step_scale < 1e-4 {
                        break;
                    }
                } else {
                    break;
                }
            }
            let _ = best;
            RestartOutput {
                entries,
                evaluations,
            }
        })
        .collect();

    // Deterministic combination in restart order.
    let mut entries = vec![TraceEntry {
        configuration: merged.clone(),
        lambda1: merged_lambda,
        residual: merged_residual,
        incumbent: merged_lambda,
    }];
    let mut best = (merged_lambda, merged);
    let mut total_evaluations = 1;
    for r in restarts {
        total_evaluations += r.evaluations;
        for mut e in r.entries {
            if e.lambda1 < best.0 {
                best = (e.lambda1, e.configuration.clone());
            }
            e.incumbent = best.0;
            entries.push(e);
        }
    }
    Ok(MinimizeOutcome {
        best: best.1,
        lambda1: best.0,
        trace: OptimizationTrace {
            entries,
            termination: "budget exhausted".into(),
            seed: settings.seed,
            total_evaluations,
        },
    })
}

/// Result of the concentration diagnostic: an optimal configuration must
/// put its atoms where the state's self-interaction potential is maximal.
#[derive(Debug, Clone, Serialize)]
pub struct ElDiagnosticReport {
    pub max_over_grid: f64,
    pub phi_at_atoms: Vec<f64>,
    pub margin: f64,
    pub relative_margin: f64,
    pub pass: bool,
    pub density_norm: f64,
}

/// Evaluates Phi = |Psi|^2 * 1/|x| over the solver grid plus a uniform box
/// (bounding box of the atoms inflated threefold, 21^3 points) and
/// compares its maximum against the values at the atoms.
pub fn el_diagnostic(
    config: &Configuration,
    result: &SolveResult,
    mu: &ChargeDistribution,
    grid: &MulticenterGrid,
    solver: &SolverConfig,
    relative_tol: f64,
) -> Result<ElDiagnosticReport> {
    if !result.bound_state_found {
        return Err(Error::InvalidParameter(
            "no bound state: the concentration diagnostic is undefined".into(),
        ));
    }
    let basis = build_basis(mu, &solver.basis)?;
    let phi = ElPotential::new(result, mu, &basis, grid)?;

    let mut max_phi = f64::NEG_INFINITY;
    for p in grid.points() {
        let v = phi.eval(&p.position);
        if v > max_phi {
            max_phi = v;
        }
    }
    // Uniform box sweep beyond the atom neighborhoods.
    let mut extent = 1.0_f64;
    for pos in &config.positions {
        extent = extent.max(Vector3::from(*pos).norm());
    }
    let half = 1.5 * extent;
    let n_side = 21;
    for ix in 0..n_side {
        for iy in 0..n_side {
            for iz in 0..n_side {
                let frac = |i: usize| -half + 2.0 * half * i as f64 / (n_side - 1) as f64;
                let x = Vector3::new(frac(ix), frac(iy), frac(iz));
                let v = phi.eval(&x);
                if v > max_phi {
                    max_phi = v;
                }
            }
        }
    }

    let phi_at_atoms: Vec<f64> = mu.atoms().iter().map(|a| phi.eval(&a.position)).collect();
    let min_at_atoms = phi_at_atoms.iter().cloned().fold(f64::INFINITY, f64::min);
    let margin = max_phi - min_at_atoms;
    let relative_margin = margin / max_phi.abs().max(1e-300);
    Ok(ElDiagnosticReport {
        max_over_grid: max_phi,
        phi_at_atoms,
        margin,
        relative_margin,
        pass: relative_margin <= relative_tol,
        density_norm: phi.raw_norm,
    })
}

/// One row of a two-delta scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub d: f64,
    pub lambda1: f64,
    pub residual: f64,
    pub status: String,
}

/// Scan table with its two reference values.
#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub nu: f64,
    pub split: f64,
    pub rows: Vec<ScanRow>,
    /// d -> 0 limit: the merged point charge, sqrt(1 - nu^2).
    pub merged_reference: f64,
    /// d -> infinity limit: the heavier fragment's eigenvalue.
    pub separated_reference: f64,
    /// Separations where lambda_1 decreased relative to the previous row.
    /// Monotonicity in d is reported, never asserted.
    pub monotonicity_violations: Vec<f64>,
}

/// lambda_1(d) for two atoms of weights s nu and (1-s) nu at separation d.
/// Solver failures are recorded per row; the scan continues.
pub fn scan_two_delta(
    nu: f64,
    split: f64,
    distances: &[f64],
    solver: &SolverConfig,
) -> Result<ScanTable> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "total mass {nu} must be positive"
        )));
    }
    let w_big = nu * split.max(1.0 - split);
    if !(0.0 < split && split < 1.0) || w_big >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "split {split} must lie in (0,1) with nu max(s, 1-s) < 1"
        )));
    }
    let rows: Vec<ScanRow> = distances
        .iter()
        .map(|&d| {
            let mu = ChargeDistribution::new(
                vec![
                    PointCharge {
                        position: Vector3::new(-(1.0 - split) * d, 0.0, 0.0),
                        weight: split * nu,
                    },
                    PointCharge {
                        position: Vector3::new(split * d, 0.0, 0.0),
                        weight: (1.0 - split) * nu,
                    },
                ],
                Vec::new(),
                Vec::new(),
            );
            match mu.and_then(|mu| solve_lambda1(&mu, solver)) {
                Ok(res) => ScanRow {
                    d,
                    lambda1: res.lambda1,
                    residual: res.residual,
                    status: "ok".into(),
                },
                Err(e) => ScanRow {
                    d,
                    lambda1: f64::NAN,
                    residual: f64::NAN,
                    status: e.to_string(),
                },
            }
        })
        .collect();
    let mut monotonicity_violations = Vec::new();
    for pair in rows.windows(2) {
        if pair[0].status == "ok" && pair[1].status == "ok" && pair[1].lambda1 < pair[0].lambda1 {
            monotonicity_violations.push(pair[1].d);
        }
    }
    Ok(ScanTable {
        nu,
        split,
        rows,
        merged_reference: (1.0 - nu * nu).sqrt(),
        separated_reference: (1.0 - w_big * w_big).sqrt(),
        monotonicity_violations,
    })
}
