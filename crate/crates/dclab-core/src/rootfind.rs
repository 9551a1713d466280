//! Root finding for the spectral-gap parameter: the smallest form
//! eigenvalue e1(lambda) is strictly decreasing, so its zero is bracketed
//! by bisection and polished by a safeguarded secant iteration.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum RootOutcome {
    /// e1 stays positive on the whole bracket: no eigenvalue has emerged
    /// from the upper continuum.
    NoCrossing,
    /// A root of e1 inside the bracket.
    Root {
        lambda: f64,
        residual: f64,
        history: Vec<(f64, f64)>,
        evaluations: usize,
    },
}

/// Locates the unique zero of the decreasing function `e1` on (lo, hi).
///
/// Errors with `BelowGapBottom` when e1(lo) < 0 (the eigenvalue sits at or
/// below the bottom of the gap, outside the solver's validity).
pub fn find_gap_root<F>(mut e1: F, lo: f64, hi: f64, tol: f64) -> Result<RootOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut evals = 0;
    let mut eval = |x: f64, evals: &mut usize| -> Result<f64> {
        *evals += 1;
        let v = e1(x)?;
        if !v.is_finite() {
            return Err(Error::Eigensolver(format!("e1({x}) is not finite")));
        }
        Ok(v)
    };

    let e_hi = eval(hi, &mut evals)?;
    if e_hi > 0.0 {
        return Ok(RootOutcome::NoCrossing);
    }
    let e_lo = eval(lo, &mut evals)?;
    if e_lo < 0.0 {
        return Err(Error::BelowGapBottom { lambda: lo });
    }
    if e_lo == 0.0 {
        return Ok(RootOutcome::Root {
            lambda: lo,
            residual: 0.0,
            history: vec![(lo, hi)],
            evaluations: evals,
        });
    }

    let mut a = lo;
    let mut ea = e_lo;
    let mut b = hi;
    let mut eb = e_hi;
    let mut history = vec![(a, b)];

    // Bisection down to a coarse bracket.
    while b - a > 1e-4 {
        let mid = 0.5 * (a + b);
        let em = eval(mid, &mut evals)?;
        if em == 0.0 {
            return Ok(RootOutcome::Root {
                lambda: mid,
                residual: 0.0,
                history,
                evaluations: evals,
            });
        }
        if em > 0.0 {
            a = mid;
            ea = em;
        } else {
            b = mid;
            eb = em;
        }
        history.push((a, b));
    }

    // Secant polish, falling back to bisection when a step leaves the bracket.
    let mut x = b;
    let mut ex = eb;
    let mut x_prev = a;
    let mut ex_prev = ea;
    for _ in 0..120 {
        if b - a <= tol {
            break;
        }
        let denom = ex - ex_prev;
        let mut next = if denom != 0.0 {
            x - ex * (x - x_prev) / denom
        } else {
            0.5 * (a + b)
        };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        let en = eval(next, &mut evals)?;
        x_prev = x;
        ex_prev = ex;
        x = next;
        ex = en;
        if en == 0.0 {
            break;
        }
        if en > 0.0 {
            a = next;
            ea = en;
        } else {
            b = next;
            eb = en;
        }
        history.push((a, b));
        if (x - x_prev).abs() <= tol {
            break;
        }
    }
    let _ = (ea, eb);
    // Report the endpoint with the smaller residual.
    let (lambda, residual) = if ex.abs() <= ex_prev.abs() {
        (x, ex.abs())
    } else {
        (x_prev, ex_prev.abs())
    };
    Ok(RootOutcome::Root {
        lambda,
        residual,
        history,
        evaluations: evals,
    })
}
