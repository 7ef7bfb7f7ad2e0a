//! Scalar root finding on bracketing intervals.

use roots::{find_root_brent, Convergency};

use crate::error::{Error, Result};

/// Stop when the bracket is below `x_tol` (absolute plus relative) or when
/// `|f| <= f_tol`.
struct Tolerance {
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
}

impl Convergency<f64> for Tolerance {
    fn is_root_found(&mut self, y: f64) -> bool {
        y.abs() <= self.f_tol
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= self.x_tol * (1.0 + x1.abs().max(x2.abs()))
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= self.max_iter
    }
}

/// Brent's method on `[a, b]`; the endpoint values must differ in sign.
pub fn brent(a: f64, b: f64, f: impl FnMut(f64) -> f64, x_tol: f64, f_tol: f64) -> Result<f64> {
    let mut conv = Tolerance {
        x_tol,
        f_tol,
        max_iter: 200,
    };
    find_root_brent(a, b, f, &mut conv).map_err(|e| Error::InvalidArgument(format!("root search on [{a}, {b}]: {e}")))
}

/// Plain bisection on a predicate that is `false` at `a` and `true` at `b`.
/// Returns the transition point to within `x_tol`.
pub fn bisect_predicate(mut a: f64, mut b: f64, pred: impl Fn(f64) -> bool, x_tol: f64) -> f64 {
    while (b - a).abs() > x_tol * (1.0 + a.abs().max(b.abs())) {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if pred(m) {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}
