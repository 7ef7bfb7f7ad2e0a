//! Dominant real eigenpair of a dense non-symmetric matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    PowerIteration,
    Dense,
}

#[derive(Clone, Debug)]
pub struct EigenEstimate {
    pub value: f64,
    /// Unit-norm eigenvector with positive component sum (or positive first
    /// nonzero entry when the sum vanishes).
    pub vector: DVector<f64>,
    pub iterations: usize,
    /// `||K v - value v||` for the returned unit vector.
    pub residual: f64,
    pub method: EigenMethod,
}

fn orient(mut v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v /= n;
    }
    let s: f64 = v.iter().sum();
    let flip = if s.abs() > 1e-12 {
        s < 0.0
    } else {
        v.iter().find(|x| x.abs() > 1e-12).is_some_and(|&x| x < 0.0)
    };
    if flip {
        v = -v;
    }
    v
}

/// Power iteration from the all-ones vector; stops when the eigen-residual
/// drops below `tol * |value|`.
pub fn power_iteration(k: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<EigenEstimate> {
    let n = k.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut value = 0.0;
    for it in 1..=max_iter {
        let w = k * &v;
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(EigenEstimate {
                value: 0.0,
                vector: orient(v),
                iterations: it,
                residual: 0.0,
                method: EigenMethod::PowerIteration,
            });
        }
        value = v.dot(&w);
        let residual = (&w - value * &v).norm();
        if residual <= tol * value.abs() {
            let vector = orient(v);
            let residual = (k * &vector - value * &vector).norm();
            return Ok(EigenEstimate {
                value,
                vector,
                iterations: it,
                residual,
                method: EigenMethod::PowerIteration,
            });
        }
        v = w / wn;
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        last: value,
    })
}

/// Largest-magnitude real eigenvalue from the full spectrum, with its
/// eigenvector from the null space of `K - value I`.
pub fn dense_dominant_real(k: &DMatrix<f64>) -> Result<EigenEstimate> {
    let n = k.nrows();
    let spectrum = k.clone().complex_eigenvalues();
    let value = spectrum
        .iter()
        .filter(|z| z.im.abs() <= 1e-10 * z.re.abs().max(1e-300))
        .map(|z| z.re)
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or(Error::NotConverged {
            iterations: 0,
            last: f64::NAN,
        })?;
    let shifted = k - DMatrix::identity(n, n) * value;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let vector = orient(v_t.row(imin).transpose());
    let residual = (k * &vector - value * &vector).norm();
    Ok(EigenEstimate {
        value,
        vector,
        iterations: 0,
        residual,
        method: EigenMethod::Dense,
    })
}

/// Power iteration with dense fallback on non-convergence.
pub fn dominant_eigenpair(k: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<EigenEstimate> {
    match power_iteration(k, tol, max_iter) {
        Ok(e) => Ok(e),
        Err(Error::NotConverged { last, iterations }) => {
            dense_dominant_real(k).map_err(|_| Error::NotConverged { iterations, last })
        }
        Err(e) => Err(e),
    }
}
