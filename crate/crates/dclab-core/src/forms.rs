//! Galerkin assembly of the reduced quadratic form in the Gaussian
//! 2-spinor basis.
//!
//! The form splits into a lambda-independent part (overlap S by closed
//! formulas, potential term U by quadrature) and the weighted kinetic term
//!
//!   T_ij(lambda) = int (sigma.grad phi_i)^dagger (sigma.grad phi_j)
//!                      / (1 + lambda + V) dx,
//!
//! which is reassembled per lambda from cached potential values. With real
//! profiles, (sigma.grad phi_i)^dagger (sigma.grad phi_j) splits into
//! grad_i . grad_j (spin diagonal) plus i sigma . (grad_i x grad_j), so the
//! assembly runs over real spatial matrices; the complex spin-coupled
//! matrix is formed only at pencil-build time. Grid sums run over fixed
//! chunks combined in order, so results do not depend on the thread count.
//!
//! The kinetic denominator is evaluated pointwise; V > 0 and lambda > -1
//! keep it positive, and grid nodes never coincide with atom positions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::linalg::{
    canonical_basis, hermitize, scale_symmetric, smallest_eigenpair, CanonicalBasis,
};
use crate::measure::ChargeDistribution;
use crate::quad::molecular::REDUCTION_CHUNK;
use crate::quad::MulticenterGrid;

type C = Complex64;

/// Snapshot of conditioning and size facts for the diagnostics record.
#[derive(Debug, Clone, Serialize)]
pub struct AssemblyDiagnostics {
    pub basis_size: usize,
    pub spatial_size: usize,
    pub kept_directions: usize,
    pub overlap_condition: f64,
    pub grid_points: usize,
}

struct CachedPoint {
    position: nalgebra::Vector3<f64>,
    weight: f64,
    potential: f64,
}

/// Assembled forms for one measure/basis/grid triple.
pub struct AssembledForms {
    basis: BasisSet,
    overlap: DMatrix<f64>,
    potential: DMatrix<f64>,
    points: Vec<CachedPoint>,
    scale: Vec<f64>,
    ortho: CanonicalBasis<C>,
    diagnostics: AssemblyDiagnostics,
}

impl AssembledForms {
    pub fn diagnostics(&self) -> &AssemblyDiagnostics {
        &self.diagnostics
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    /// Spatial overlap matrix (closed-form Gaussian integrals).
    pub fn overlap(&self) -> &DMatrix<f64> {
        &self.overlap
    }

    /// Spatial potential-form matrix U_ij = int V phi_i phi_j.
    pub fn potential_form(&self) -> &DMatrix<f64> {
        &self.potential
    }

    /// Smallest eigenvalue e_1(lambda) of the pencil
    /// [T(lambda) + (1 - lambda) S - U] w = e S w over the spin-doubled
    /// basis, with its eigenvector in physical coefficients (spin-major).
    pub fn smallest_form_eigenvalue(&self, lambda: f64) -> Result<(f64, DVector<C>)> {
        if !(-1.0 < lambda && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda {lambda} outside (-1, 1)"
            )));
        }
        let n = self.basis.spatial().len();
        let (a, b) = self.kinetic_parts(lambda)?;

        // Real spin-diagonal part of the pencil.
        let mut r = a;
        for j in 0..n {
            for i in 0..n {
                r[(i, j)] += (1.0 - lambda) * self.overlap[(i, j)] - self.potential[(i, j)];
            }
        }

        let mut h = embed_spin(&r, &b);
        let mut d2 = Vec::with_capacity(2 * n);
        d2.extend_from_slice(&self.scale);
        d2.extend_from_slice(&self.scale);
        scale_symmetric(&mut h, &d2);
        let (e, v_norm) = smallest_eigenpair(&hermitize(h), &self.ortho)?;
        let mut coeffs = DVector::zeros(2 * n);
        for i in 0..2 * n {
            coeffs[i] = v_norm[i] * C::new(d2[i], 0.0);
        }
        Ok((e, coeffs))
    }

    /// Accumulates the dot and cross gradient moments against the current
    /// kinetic weight, in deterministic chunk order.
    fn kinetic_parts(&self, lambda: f64) -> Result<(DMatrix<f64>, [DMatrix<f64>; 3])> {
        let n = self.basis.spatial().len();
        let orbitals = self.basis.spatial();
        let partials: Vec<Result<(DMatrix<f64>, [DMatrix<f64>; 3])>> = self
            .points
            .par_chunks(REDUCTION_CHUNK)
            .map(|chunk| {
                let mut a = DMatrix::<f64>::zeros(n, n);
                let mut b = [
                    DMatrix::<f64>::zeros(n, n),
                    DMatrix::<f64>::zeros(n, n),
                    DMatrix::<f64>::zeros(n, n),
                ];
                let mut grads = vec![[0.0_f64; 3]; n];
                let mut active: Vec<usize> = Vec::with_capacity(n);
                for p in chunk {
                    let denom = 1.0 + lambda + p.potential;
                    if denom <= 0.0 {
                        return Err(Error::Eigensolver(format!(
                            "kinetic denominator {denom} not positive at a grid point"
                        )));
                    }
                    let c = p.weight / denom;
                    active.clear();
                    for (i, orb) in orbitals.iter().enumerate() {
                        let g = orb.gradient(&p.position);
                        if g.x != 0.0 || g.y != 0.0 || g.z != 0.0 {
                            grads[i] = [g.x, g.y, g.z];
                            active.push(i);
                        }
                    }
                    for (ai, &i) in active.iter().enumerate() {
                        let gi = grads[i];
                        for &j in &active[ai..] {
                            let gj = grads[j];
                            let dot = gi[0] * gj[0] + gi[1] * gj[1] + gi[2] * gj[2];
                            a[(i, j)] += c * dot;
                            b[0][(i, j)] += c * (gi[1] * gj[2] - gi[2] * gj[1]);
                            b[1][(i, j)] += c * (gi[2] * gj[0] - gi[0] * gj[2]);
                            b[2][(i, j)] += c * (gi[0] * gj[1] - gi[1] * gj[0]);
                        }
                    }
                }
                Ok((a, b))
            })
            .collect();

        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = [
            DMatrix::<f64>::zeros(n, n),
            DMatrix::<f64>::zeros(n, n),
            DMatrix::<f64>::zeros(n, n),
        ];
        for partial in partials {
            let (pa, pb) = partial?;
            a += pa;
            for k in 0..3 {
                b[k] += &pb[k];
            }
        }
        // Upper triangles were accumulated; mirror with the right symmetry.
        for i in 0..n {
            for j in i + 1..n {
                a[(j, i)] = a[(i, j)];
                for bk in &mut b {
                    bk[(j, i)] = -bk[(i, j)];
                }
            }
        }
        for bk in &mut b {
            for i in 0..n {
                bk[(i, i)] = 0.0;
            }
        }
        Ok((a, b))
    }
}

/// Spin-doubled complex Hermitian matrix from the dot part `r` (symmetric)
/// and the cross parts `b` (antisymmetric):
/// [[ R + i B3, i B1 + B2 ], [ i B1 - B2, R - i B3 ]].
pub fn embed_spin(r: &DMatrix<f64>, b: &[DMatrix<f64>; 3]) -> DMatrix<C> {
    let n = r.nrows();
    let mut h = DMatrix::<C>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let rij = r[(i, j)];
            let b1 = b[0][(i, j)];
            let b2 = b[1][(i, j)];
            let b3 = b[2][(i, j)];
            h[(i, j)] = C::new(rij, b3);
            h[(n + i, n + j)] = C::new(rij, -b3);
            h[(i, n + j)] = C::new(b2, b1);
            h[(n + i, j)] = C::new(-b2, b1);
        }
    }
    h
}

/// Gradient pair moments over a grid with an arbitrary pointwise weight
/// c(V, w): A_ij = sum c grad_i . grad_j and the three cross moments.
/// Runs over fixed chunks in deterministic order.
pub fn gradient_moments<W>(
    mu: &ChargeDistribution,
    basis: &BasisSet,
    grid: &MulticenterGrid,
    weight: W,
) -> Result<(DMatrix<f64>, [DMatrix<f64>; 3])>
where
    W: Fn(f64, f64) -> f64 + Sync,
{
    let n = basis.spatial().len();
    let orbitals = basis.spatial();
    let partials: Vec<Result<(DMatrix<f64>, [DMatrix<f64>; 3])>> = grid
        .points()
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut a = DMatrix::<f64>::zeros(n, n);
            let mut b = [
                DMatrix::<f64>::zeros(n, n),
                DMatrix::<f64>::zeros(n, n),
                DMatrix::<f64>::zeros(n, n),
            ];
            let mut grads = vec![[0.0_f64; 3]; n];
            let mut active: Vec<usize> = Vec::with_capacity(n);
            for p in chunk {
                let v = mu.potential(&p.position)?;
                let c = weight(v, p.weight);
                if !c.is_finite() {
                    return Err(Error::NonFiniteIntegrand {
                        point: p.position,
                        value: c,
                    });
                }
                if c == 0.0 {
                    continue;
                }
                active.clear();
                for (i, orb) in orbitals.iter().enumerate() {
                    let g = orb.gradient(&p.position);
                    if g.x != 0.0 || g.y != 0.0 || g.z != 0.0 {
                        grads[i] = [g.x, g.y, g.z];
                        active.push(i);
                    }
                }
                for (ai, &i) in active.iter().enumerate() {
                    let gi = grads[i];
                    for &j in &active[ai..] {
                        let gj = grads[j];
                        a[(i, j)] += c * (gi[0] * gj[0] + gi[1] * gj[1] + gi[2] * gj[2]);
                        b[0][(i, j)] += c * (gi[1] * gj[2] - gi[2] * gj[1]);
                        b[1][(i, j)] += c * (gi[2] * gj[0] - gi[0] * gj[2]);
                        b[2][(i, j)] += c * (gi[0] * gj[1] - gi[1] * gj[0]);
                    }
                }
            }
            Ok((a, b))
        })
        .collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = [
        DMatrix::<f64>::zeros(n, n),
        DMatrix::<f64>::zeros(n, n),
        DMatrix::<f64>::zeros(n, n),
    ];
    for partial in partials {
        let (pa, pb) = partial?;
        a += pa;
        for k in 0..3 {
            b[k] += &pb[k];
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            a[(j, i)] = a[(i, j)];
            for bk in &mut b {
                bk[(j, i)] = -bk[(i, j)];
            }
        }
    }
    for bk in &mut b {
        for i in 0..n {
            bk[(i, i)] = 0.0;
        }
    }
    Ok((a, b))
}

/// Value pair moments sum c(V, w) phi_i phi_j with deterministic reduction.
pub fn value_moments<W>(
    mu: &ChargeDistribution,
    basis: &BasisSet,
    grid: &MulticenterGrid,
    weight: W,
) -> Result<DMatrix<f64>>
where
    W: Fn(f64, f64) -> f64 + Sync,
{
    let n = basis.spatial().len();
    let orbitals = basis.spatial();
    let partials: Vec<Result<DMatrix<f64>>> = grid
        .points()
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut u = DMatrix::<f64>::zeros(n, n);
            let mut vals = vec![0.0_f64; n];
            let mut active: Vec<usize> = Vec::with_capacity(n);
            for p in chunk {
                let v = mu.potential(&p.position)?;
                let c = weight(v, p.weight);
                if !c.is_finite() {
                    return Err(Error::NonFiniteIntegrand {
                        point: p.position,
                        value: c,
                    });
                }
                if c == 0.0 {
                    continue;
                }
                active.clear();
                for (i, orb) in orbitals.iter().enumerate() {
                    let val = orb.value(&p.position);
                    if val != 0.0 {
                        vals[i] = val;
                        active.push(i);
                    }
                }
                for (ai, &i) in active.iter().enumerate() {
                    let vi = vals[i];
                    for &j in &active[ai..] {
                        u[(i, j)] += c * vi * vals[j];
                    }
                }
            }
            Ok(u)
        })
        .collect();
    let mut u = DMatrix::<f64>::zeros(n, n);
    for p in partials {
        u += p?;
    }
    for i in 0..n {
        for j in i + 1..n {
            u[(j, i)] = u[(i, j)];
        }
    }
    Ok(u)
}

/// Assembles overlap, potential form, and the kinetic-form cache for the
/// given measure over the grid.
pub fn assemble(
    mu: &ChargeDistribution,
    basis: &BasisSet,
    grid: &MulticenterGrid,
) -> Result<AssembledForms> {
    for atom in mu.atoms() {
        if !grid.centers().iter().any(|c| c == &atom.position) {
            return Err(Error::InvalidParameter(format!(
                "grid centers must include every atom position; missing ({}, {}, {})",
                atom.position.x, atom.position.y, atom.position.z
            )));
        }
    }
    let n = basis.spatial().len();

    let mut overlap = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s = crate::basis::overlap(&basis.spatial()[i], &basis.spatial()[j]);
            overlap[(i, j)] = s;
            overlap[(j, i)] = s;
        }
    }

    // Cache w and V per point; the potential errors only if a grid node
    // sits exactly on an atom, which the radial maps never produce.
    let points: Vec<CachedPoint> = grid
        .points()
        .iter()
        .map(|p| {
            mu.potential(&p.position).map(|v| CachedPoint {
                position: p.position,
                weight: p.weight,
                potential: v,
            })
        })
        .collect::<Result<_>>()?;

    let orbitals = basis.spatial();
    let potential_partials: Vec<DMatrix<f64>> = points
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut u = DMatrix::<f64>::zeros(n, n);
            let mut vals = vec![0.0_f64; n];
            let mut active: Vec<usize> = Vec::with_capacity(n);
            for p in chunk {
                let c = p.weight * p.potential;
                if c == 0.0 {
                    continue;
                }
                active.clear();
                for (i, orb) in orbitals.iter().enumerate() {
                    let v = orb.value(&p.position);
                    if v != 0.0 {
                        vals[i] = v;
                        active.push(i);
                    }
                }
                for (ai, &i) in active.iter().enumerate() {
                    let vi = vals[i];
                    for &j in &active[ai..] {
                        u[(i, j)] += c * vi * vals[j];
                    }
                }
            }
            u
        })
        .collect();
    let mut potential = DMatrix::<f64>::zeros(n, n);
    for p in potential_partials {
        potential += p;
    }
    for i in 0..n {
        for j in i + 1..n {
            potential[(j, i)] = potential[(i, j)];
        }
    }

    let mut scale = vec![0.0; n];
    for i in 0..n {
        let d = overlap[(i, i)];
        if !(d > 0.0) {
            return Err(Error::OverlapNotPositive {
                smallest: d,
                condition: f64::INFINITY,
            });
        }
        scale[i] = 1.0 / d.sqrt();
    }
    let mut s_norm = overlap.clone();
    scale_symmetric(&mut s_norm, &scale);
    let ortho_spatial = canonical_basis(&hermitize(s_norm), 1e-10)?;
    let overlap_condition = ortho_spatial.condition();
    let kept = ortho_spatial.kept();

    // Spin doubling: the complex pencil uses diag(S, S), so the canonical
    // basis is the spatial one on each spin block.
    let mut s2 = DMatrix::<C>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let v = C::new(overlap[(i, j)] * scale[i] * scale[j], 0.0);
            s2[(i, j)] = v;
            s2[(n + i, n + j)] = v;
        }
    }
    let ortho = canonical_basis(&hermitize(s2), 1e-10)?;

    let diagnostics = AssemblyDiagnostics {
        basis_size: 2 * n,
        spatial_size: n,
        kept_directions: 2 * kept,
        overlap_condition,
        grid_points: points.len(),
    };
    Ok(AssembledForms {
        basis: basis.clone(),
        overlap,
        potential,
        points,
        scale,
        ortho,
        diagnostics,
    })
}
