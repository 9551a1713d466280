//! Symmetric-definite generalized eigenproblems via canonical
//! orthogonalization.
//!
//! The right-hand matrix is diagonalized once; directions whose eigenvalues
//! fall below a relative threshold are dropped (even-tempered and tightly
//! knotted bases are ill-conditioned by construction), and the transformed
//! problem is solved with a dense Hermitian eigensolver.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};

/// The orthogonalizing transform of a positive (semi)definite matrix.
#[derive(Debug, Clone)]
pub struct CanonicalBasis<T: ComplexField<RealField = f64>> {
    transform: DMatrix<T>,
    kept: usize,
    dropped: usize,
    smallest_kept: f64,
    largest: f64,
}

impl<T: ComplexField<RealField = f64>> CanonicalBasis<T> {
    pub fn kept(&self) -> usize {
        self.kept
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Ratio of the largest right-form eigenvalue to the smallest kept one.
    pub fn condition(&self) -> f64 {
        self.largest / self.smallest_kept
    }
}

/// Diagonalizes `s` and builds X = V diag(1/sqrt(lambda)) over the
/// eigenvalues above `threshold * lambda_max`.
pub fn canonical_basis<T: ComplexField<RealField = f64>>(
    s: &DMatrix<T>,
    threshold: f64,
) -> Result<CanonicalBasis<T>> {
    let n = s.nrows();
    let eig = s.clone().symmetric_eigen();
    let largest = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(largest > 0.0) {
        return Err(Error::OverlapNotPositive {
            smallest: largest,
            condition: f64::INFINITY,
        });
    }
    let cut = threshold * largest;
    let kept_idx: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > cut).collect();
    if kept_idx.is_empty() {
        let smallest = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        return Err(Error::OverlapNotPositive {
            smallest,
            condition: f64::INFINITY,
        });
    }
    let mut transform = DMatrix::<T>::zeros(n, kept_idx.len());
    let mut smallest_kept = f64::INFINITY;
    for (col, &i) in kept_idx.iter().enumerate() {
        let lam = eig.eigenvalues[i];
        smallest_kept = smallest_kept.min(lam);
        let scale = T::from_real(1.0 / lam.sqrt());
        for r in 0..n {
            transform[(r, col)] = eig.eigenvectors[(r, i)].clone() * scale.clone();
        }
    }
    Ok(CanonicalBasis {
        transform,
        kept: kept_idx.len(),
        dropped: n - kept_idx.len(),
        smallest_kept,
        largest,
    })
}

/// Smallest eigenvalue of the pencil (h, s) and its eigenvector expressed
/// in the original (non-orthogonal) basis.
pub fn smallest_eigenpair<T: ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    basis: &CanonicalBasis<T>,
) -> Result<(f64, DVector<T>)> {
    let x = &basis.transform;
    let reduced = x.adjoint() * h * x;
    let reduced = hermitize(reduced);
    let eig = reduced.symmetric_eigen();
    let mut min_val = f64::INFINITY;
    let mut min_idx = 0;
    for (i, v) in eig.eigenvalues.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Eigensolver(format!(
                "non-finite eigenvalue in reduced problem (dim {})",
                basis.kept
            )));
        }
        if *v < min_val {
            min_val = *v;
            min_idx = i;
        }
    }
    let vec = x * eig.eigenvectors.column(min_idx);
    Ok((min_val, vec))
}

/// (m + m^H) / 2, forcing exact Hermitian symmetry after assembly noise.
pub fn hermitize<T: ComplexField<RealField = f64>>(m: DMatrix<T>) -> DMatrix<T> {
    let half = T::from_real(0.5);
    let adj = m.adjoint();
    (m + adj) * half
}

/// Scales `m` in place by d_i d_j (two-sided diagonal scaling).
pub fn scale_symmetric<T: ComplexField<RealField = f64>>(m: &mut DMatrix<T>, d: &[f64]) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let s = T::from_real(d[i] * d[j]);
            m[(i, j)] = m[(i, j)].clone() * s;
        }
    }
}
