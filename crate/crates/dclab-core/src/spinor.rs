//! Pauli and Dirac matrices in the standard representation, and the action
//! of sigma . grad on the Gaussian basis functions.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector3};
use num_complex::Complex64;

use crate::basis::BasisFunction;
use crate::error::{Error, Result};

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Pauli matrix sigma_k, k in 1..=3.
pub fn pauli(k: usize) -> Result<Matrix2<C>> {
    match k {
        1 => Ok(Matrix2::new(
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
        )),
        2 => Ok(Matrix2::new(
            c(0.0, 0.0),
            c(0.0, -1.0),
            c(0.0, 1.0),
            c(0.0, 0.0),
        )),
        3 => Ok(Matrix2::new(
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(-1.0, 0.0),
        )),
        _ => Err(Error::InvalidParameter(format!(
            "Pauli index {k} not in 1..=3"
        ))),
    }
}

/// Dirac matrix alpha_k = [[0, sigma_k], [sigma_k, 0]], k in 1..=3.
pub fn alpha(k: usize) -> Result<Matrix4<C>> {
    let s = pauli(k)?;
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j + 2)] = s[(i, j)];
            m[(i + 2, j)] = s[(i, j)];
        }
    }
    Ok(m)
}

/// Dirac matrix beta = diag(I2, -I2).
pub fn beta() -> Matrix4<C> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(
        c(1.0, 0.0),
        c(1.0, 0.0),
        c(-1.0, 0.0),
        c(-1.0, 0.0),
    ))
}

/// (sigma . grad phi_b)(x) for a basis function phi_b = g(x) e_spin:
/// the real profile gradient contracted with the Pauli matrices, applied
/// to the spin unit vector.
pub fn sigma_grad_basis(b: &BasisFunction, x: &Vector3<f64>) -> Vector2<C> {
    let g = b.spatial.gradient(x);
    sigma_dot_apply(&g, b.spin)
}

/// (sigma . v) e_spin for a real vector v, written out explicitly:
/// spin 0 -> (v_z, v_x + i v_y), spin 1 -> (v_x - i v_y, -v_z).
pub fn sigma_dot_apply(v: &Vector3<f64>, spin: usize) -> Vector2<C> {
    debug_assert!(spin < 2);
    if spin == 0 {
        Vector2::new(c(v.z, 0.0), c(v.x, v.y))
    } else {
        Vector2::new(c(v.x, -v.y), c(-v.z, 0.0))
    }
}
