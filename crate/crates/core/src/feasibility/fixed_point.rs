use crate::error::{Error, Result};
use crate::numerics::distance;

/// Outcome of a fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub iterate: Vec<f64>,
    /// Number of operator applications performed.
    pub iterations: usize,
    /// `‖u^{k+1} − u^k‖` of the last application.
    pub final_residual: f64,
    /// False when `max_iter` was reached before the tolerance.
    pub converged: bool,
    /// Residual of every application, in order.
    pub residuals: Vec<f64>,
}

/// Iterates `u^{k+1} = T(u^k, k)` (with `k` starting at 1) until
/// `‖u^{k+1} − u^k‖ < delta` or `max_iter` applications.
pub fn fixed_point_iterate<F>(
    mut op: F,
    u1: Vec<f64>,
    delta: f64,
    max_iter: usize,
) -> Result<FixedPointReport>
where
    F: FnMut(&[f64], usize) -> Result<Vec<f64>>,
{
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("tolerance {delta} must be positive")));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    let mut u = u1;
    let mut residuals = Vec::new();
    for k in 1..=max_iter {
        let next = op(&u, k)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration: k });
        }
        let res = distance(&next, &u);
        residuals.push(res);
        u = next;
        if res < delta {
            return Ok(FixedPointReport {
                iterate: u,
                iterations: k,
                final_residual: res,
                converged: true,
                residuals,
            });
        }
    }
    Ok(FixedPointReport {
        iterate: u,
        iterations: max_iter,
        final_residual: *residuals.last().unwrap(),
        converged: false,
        residuals,
    })
}
