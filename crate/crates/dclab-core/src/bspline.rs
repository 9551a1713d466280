//! Clamped B-spline bases on graded radial meshes.

use crate::error::{Error, Result};

/// A clamped B-spline basis of the given order (degree + 1) over a strictly
/// increasing breakpoint sequence.
#[derive(Debug, Clone)]
pub struct BSplineBasis {
    order: usize,
    knots: Vec<f64>,
    breakpoints: Vec<f64>,
}

impl BSplineBasis {
    pub fn new(order: usize, breakpoints: Vec<f64>) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(format!(
                "B-spline order {order} must be >= 2"
            )));
        }
        if breakpoints.len() < 2 {
            return Err(Error::InvalidParameter(
                "need at least one knot interval".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!(
                    "breakpoints must increase strictly ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        let mut knots = Vec::with_capacity(breakpoints.len() + 2 * (order - 1));
        for _ in 0..order - 1 {
            knots.push(breakpoints[0]);
        }
        knots.extend_from_slice(&breakpoints);
        for _ in 0..order - 1 {
            knots.push(*breakpoints.last().expect("non-empty breakpoints"));
        }
        Ok(Self {
            order,
            knots,
            breakpoints,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn num_intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Number of basis functions: intervals + order - 1.
    pub fn len(&self) -> usize {
        self.num_intervals() + self.order - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values and first derivatives of the `order` splines that are nonzero
    /// at `x`. Returns (index of the first nonzero function, values, derivs).
    pub fn eval(&self, x: f64) -> (usize, Vec<f64>, Vec<f64>) {
        let p = self.order - 1;
        let span = self.find_span(x);
        // Triangular table ndu[j][r] = N_{span-j+r, j}(x).
        let mut ndu = vec![vec![0.0; self.order]; self.order];
        ndu[0][0] = 1.0;
        let mut left = vec![0.0; self.order];
        let mut right = vec![0.0; self.order];
        for j in 1..=p {
            left[j] = x - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let den = right[r + 1] + left[j - r];
                let temp = if den != 0.0 { ndu[j - 1][r] / den } else { 0.0 };
                ndu[j][r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let values = ndu[p].clone();
        // First derivative from the degree p-1 row:
        // N'_{f,p} = p [ N_{f,p-1}/(t_{f+p}-t_f) - N_{f+1,p-1}/(t_{f+p+1}-t_{f+1}) ].
        let mut derivs = vec![0.0; self.order];
        if p >= 1 {
            for r in 0..=p {
                let f = span - p + r;
                let mut d = 0.0;
                if r >= 1 {
                    let den = self.knots[f + p] - self.knots[f];
                    if den != 0.0 {
                        d += ndu[p - 1][r - 1] / den;
                    }
                }
                if r < p {
                    let den = self.knots[f + p + 1] - self.knots[f + 1];
                    if den != 0.0 {
                        d -= ndu[p - 1][r] / den;
                    }
                }
                derivs[r] = p as f64 * d;
            }
        }
        (span - p, values, derivs)
    }

    /// Knot span index i with t_i <= x < t_{i+1} (clamped at the ends).
    fn find_span(&self, x: f64) -> usize {
        let p = self.order - 1;
        let n = self.len();
        if x >= self.knots[n] {
            return n - 1;
        }
        if x <= self.knots[p] {
            return p;
        }
        let mut lo = p;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }
}

/// Breakpoints {0} followed by a geometric sequence from `r_min` to `r_max`.
pub fn geometric_breakpoints_from_zero(
    r_min: f64,
    r_max: f64,
    intervals: usize,
) -> Result<Vec<f64>> {
    if !(r_min > 0.0) || !(r_max > r_min) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r_min < r_max, got r_min = {r_min}, r_max = {r_max}"
        )));
    }
    if intervals < 8 {
        return Err(Error::InvalidParameter(format!(
            "need at least 8 knot intervals, got {intervals}"
        )));
    }
    let mut pts = Vec::with_capacity(intervals + 2);
    pts.push(0.0);
    let ratio = (r_max / r_min).powf(1.0 / intervals as f64);
    let mut r = r_min;
    for _ in 0..=intervals {
        pts.push(r);
        r *= ratio;
    }
    *pts.last_mut().expect("non-empty") = r_max;
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_basis(order: usize, n_int: usize) -> BSplineBasis {
        let pts: Vec<f64> = (0..=n_int).map(|i| i as f64 / n_int as f64).collect();
        BSplineBasis::new(order, pts).unwrap()
    }

    #[test]
    fn partition_of_unity_and_zero_derivative_sum() {
        let basis = uniform_basis(6, 17);
        for i in 0..200 {
            let x = 0.005 + 0.99 * i as f64 / 199.0;
            let (_, vals, ders) = basis.eval(x);
            let s: f64 = vals.iter().sum();
            let ds: f64 = ders.iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "sum {s} at {x}");
            assert!(ds.abs() < 1e-10, "deriv sum {ds} at {x}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let basis = uniform_basis(6, 11);
        let h = 1e-7;
        for &x in &[0.11, 0.37, 0.52, 0.93] {
            let (i0, _, ders) = basis.eval(x);
            let (ip, vp, _) = basis.eval(x + h);
            let (im, vm, _) = basis.eval(x - h);
            assert_eq!(i0, ip);
            assert_eq!(i0, im);
            for r in 0..ders.len() {
                let fd = (vp[r] - vm[r]) / (2.0 * h);
                assert!(
                    (ders[r] - fd).abs() < 1e-5,
                    "x={x} r={r}: {} vs {fd}",
                    ders[r]
                );
            }
        }
    }

    #[test]
    fn counts_and_end_conditions() {
        let basis = uniform_basis(6, 20);
        assert_eq!(basis.len(), 25);
        // Clamped: only the first function is nonzero at the left end,
        // only the last at the right end.
        let (i0, vals, _) = basis.eval(0.0);
        assert_eq!(i0, 0);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!(vals[1..].iter().all(|v| v.abs() < 1e-14));
        let (i1, vals, _) = basis.eval(1.0);
        assert_eq!(i1 + basis.order() - 1, basis.len() - 1);
        assert!((vals.last().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn geometric_mesh_from_zero() {
        let pts = geometric_breakpoints_from_zero(1e-8, 80.0, 200).unwrap();
        assert_eq!(pts.len(), 202);
        assert_eq!(pts[0], 0.0);
        assert!((pts[1] - 1e-8).abs() < 1e-20);
        assert_eq!(*pts.last().unwrap(), 80.0);
        for w in pts.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(geometric_breakpoints_from_zero(0.0, 80.0, 100).is_err());
    }
}
