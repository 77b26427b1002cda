use super::diff::shrink;
use super::DiffOperator;
use crate::error::{check_len, Error, Result, TraceRow};
use crate::feasibility::project_ball_in_place;
use crate::numerics::{distance, SparseMatrix};

/// Step sizes and data-ball radius of the linearized ADMM solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmParams {
    /// Dual step α.
    pub alpha: f64,
    /// Primal step β.
    pub beta: f64,
    /// Proximal step λ.
    pub lambda: f64,
    /// Radius ε of the data ball `‖Au − d‖ ≤ ε`.
    pub eps: f64,
    pub iterations: usize,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            alpha: 0.1,
            beta: 0.1,
            lambda: 0.1,
            eps: 10.0,
            iterations: 250,
        }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("eps", self.eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("ADMM {name} = {v} must be positive")));
            }
        }
        if self.iterations == 0 {
            return Err(Error::invalid("ADMM needs at least one iteration"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvmReport {
    /// Final primal iterate; every entry lies in `[0, 1]`.
    pub image: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

/// Anisotropic TV minimization over `[0, 1]^n` subject to `‖Au − d‖ ≤ ε`,
/// solved with linearized ADMM on the split `p = D₊u`, `w = Au`:
///
/// ```text
/// r      = D₊ᵀ(ν₁ + α(D₊u − p)) + Aᵀ(ν₂ + α(Au − w))
/// u'     = P_[0,1](u − βr)
/// p'     = η_λ(p + λ(ν₁ + α(D₊u' − p)))
/// w'     = P_B(d,ε)(w + λ(ν₂ + α(Au' − w)))
/// ν₁'    = ν₁ + α(D₊u' − p')
/// ν₂'    = ν₂ + α(Au' − w')
/// ```
///
/// starting from `u = 0`, `ν = 0`, `p = D₊u`, `w = Au`.
pub fn tvm_reconstruct(
    a: &SparseMatrix,
    data: &[f64],
    shape: (usize, usize),
    params: &AdmmParams,
) -> Result<TvmReport> {
    params.validate()?;
    let diff = DiffOperator::new(shape.0, shape.1);
    check_len("TVM image shape", a.cols(), diff.n_pixels())?;
    check_len("TVM data", a.rows(), data.len())?;
    let AdmmParams {
        alpha,
        beta,
        lambda,
        eps,
        ..
    } = *params;

    let n = diff.n_pixels();
    let m = a.rows();
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; 2 * n];
    let mut au = vec![0.0; m];
    diff.forward_into(&u, &mut du);
    a.spmv_into(&u, &mut au);
    let mut p = du.clone();
    let mut w = au.clone();
    let mut nu1 = vec![0.0; 2 * n];
    let mut nu2 = vec![0.0; m];

    let mut tmp_p = vec![0.0; 2 * n];
    let mut tmp_w = vec![0.0; m];
    let mut r1 = vec![0.0; n];
    let mut r2 = vec![0.0; n];
    let mut trace = Vec::with_capacity(params.iterations);

    for k in 1..=params.iterations {
        for ((t, &v), (&g, &q)) in tmp_p.iter_mut().zip(&nu1).zip(du.iter().zip(&p)) {
            *t = v + alpha * (g - q);
        }
        for ((t, &v), (&g, &q)) in tmp_w.iter_mut().zip(&nu2).zip(au.iter().zip(&w)) {
            *t = v + alpha * (g - q);
        }
        diff.transpose_into(&tmp_p, &mut r1);
        a.spmv_transpose_into(&tmp_w, &mut r2);
        for ((x, a1), a2) in u.iter_mut().zip(&r1).zip(&r2) {
            *x = (*x - beta * (a1 + a2)).clamp(0.0, 1.0);
        }

        diff.forward_into(&u, &mut du);
        a.spmv_into(&u, &mut au);

        for ((q, &v), &g) in p.iter_mut().zip(&nu1).zip(&du) {
            *q = shrink(*q + lambda * (v + alpha * (g - *q)), lambda);
        }
        for ((x, &v), &g) in w.iter_mut().zip(&nu2).zip(&au) {
            *x += lambda * (v + alpha * (g - *x));
        }
        project_ball_in_place(data, eps, &mut w);

        for ((v, &g), &q) in nu1.iter_mut().zip(&du).zip(&p) {
            *v += alpha * (g - q);
        }
        for ((v, &g), &x) in nu2.iter_mut().zip(&au).zip(&w) {
            *v += alpha * (g - x);
        }

        let objective: f64 = du.iter().map(|v| v.abs()).sum();
        let gap = distance(&au, data) - eps;
        trace.push(TraceRow {
            iteration: k,
            objective,
            feasibility_gap: gap,
        });
        if !objective.is_finite() || !gap.is_finite() || nu1.iter().chain(&nu2).any(|v| !v.is_finite())
        {
            return Err(Error::AdmmDiverged {
                iteration: k,
                trace,
            });
        }
    }
    Ok(TvmReport { image: u, trace })
}

/// CSV text of a solver trace: `iteration,objective,feasibility_gap`.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,objective,feasibility_gap\n");
    for row in trace {
        out.push_str(&format!(
            "{},{:?},{:?}\n",
            row.iteration, row.objective, row.feasibility_gap
        ));
    }
    out
}
