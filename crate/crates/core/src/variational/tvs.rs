use super::DiffOperator;
use crate::error::{check_len, Error, Result};
use crate::feasibility::{clamp_unit, DropOperator, DropWorkspace};
use crate::numerics::norm;

/// Parameters of TV superiorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvsParams {
    /// Perturbation scale α ≥ 0.
    pub alpha: f64,
    /// Geometric decay β ∈ (0, 1).
    pub beta: f64,
    /// Added to the gradient norm before normalizing.
    pub eps_stab: f64,
    pub iterations: usize,
}

impl Default for TvsParams {
    fn default() -> Self {
        TvsParams {
            alpha: 0.0023,
            beta: 0.968,
            eps_stab: 1e-7,
            iterations: 20,
        }
    }
}

impl TvsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("TVS alpha {} must be >= 0", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid(format!("TVS beta {} outside (0, 1)", self.beta)));
        }
        if !(self.eps_stab > 0.0) {
            return Err(Error::invalid("TVS stabilizer must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("TVS needs at least one iteration"));
        }
        Ok(())
    }

    /// `α/(1 − β)`, the bound on the summed perturbation steps.
    pub fn perturbation_bound(&self) -> f64 {
        self.alpha / (1.0 - self.beta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvsReport {
    /// Final iterate clipped to `[0, 1]`.
    pub image: Vec<f64>,
    /// `Σ_k αβ^k ‖D₊u^k‖/(‖D₊u^k‖ + ε)`: summed norms of the scaled
    /// normalized gradient fields. Never exceeds `α/(1 − β)`.
    pub cumulative_perturbation: f64,
    /// Summed norms of the image-space perturbations
    /// `αβ^k D₊ᵀ(D₊u^k/(‖D₊u^k‖ + ε))`; bounded by `‖D₊‖·α/(1 − β)`.
    pub cumulative_image_perturbation: f64,
}

/// TV superiorization: `u^{k+1} = DROP(u^k − αβ^k D₊ᵀ(D₊u^k/(‖D₊u^k‖₂ + ε)))`
/// for `k = 1..=K` from `u¹ = 0`.
///
/// The gradient field is normalized by the single global norm `‖D₊u^k‖₂`.
/// With `α = 0` no perturbation is computed and the result equals `K` plain
/// DROP steps bit for bit.
pub fn tvs_reconstruct(
    op: &DropOperator,
    data: &[f64],
    shape: (usize, usize),
    params: &TvsParams,
) -> Result<TvsReport> {
    params.validate()?;
    let diff = DiffOperator::new(shape.0, shape.1);
    check_len("TVS image shape", op.n_unknowns(), diff.n_pixels())?;
    check_len("TVS data", op.n_equations(), data.len())?;

    let n = diff.n_pixels();
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut grad = vec![0.0; diff.output_len()];
    let mut back = vec![0.0; n];
    let mut ws = DropWorkspace::new(op);
    let mut cumulative = 0.0;
    let mut cumulative_image = 0.0;
    let mut step = params.alpha;

    for k in 1..=params.iterations {
        step *= params.beta;
        if params.alpha > 0.0 {
            diff.forward_into(&u, &mut grad);
            let scale = 1.0 / (norm(&grad) + params.eps_stab);
            grad.iter_mut().for_each(|g| *g *= scale);
            cumulative += step * norm(&grad);
            diff.transpose_into(&grad, &mut back);
            cumulative_image += step * norm(&back);
            for (x, b) in u.iter_mut().zip(&back) {
                *x -= step * b;
            }
        }
        op.apply_into(data, &u, &mut next, &mut ws);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration: k });
        }
        std::mem::swap(&mut u, &mut next);
    }
    clamp_unit(&mut u);
    Ok(TvsReport {
        image: u,
        cumulative_perturbation: cumulative,
        cumulative_image_perturbation: cumulative_image,
    })
}

/// Grid search of `(α, β)` minimizing mean squared error over training pairs
/// `(data, truth)`. Returns the best parameters and their MSE.
pub fn tune_tvs(
    op: &DropOperator,
    samples: &[(&[f64], &[f64])],
    shape: (usize, usize),
    alphas: &[f64],
    betas: &[f64],
    base: &TvsParams,
) -> Result<(TvsParams, f64)> {
    if samples.is_empty() || alphas.is_empty() || betas.is_empty() {
        return Err(Error::invalid("TVS tuning needs samples and a nonempty grid"));
    }
    let mut best: Option<(TvsParams, f64)> = None;
    for &alpha in alphas {
        for &beta in betas {
            let params = TvsParams {
                alpha,
                beta,
                ..*base
            };
            let mut total = 0.0;
            for (data, truth) in samples {
                let rec = tvs_reconstruct(op, data, shape, &params)?;
                total += crate::ffpn::mse_loss(&rec.image, truth)?;
            }
            let mse = total / samples.len() as f64;
            if best.as_ref().is_none_or(|(_, m)| mse < *m) {
                best = Some((params, mse));
            }
        }
    }
    Ok(best.expect("nonempty grid"))
}

/// Default tuning grid: α ∈ {10⁻⁴, …, 10⁻¹} (half-decade steps) and
/// β ∈ {0.9, 0.95, 0.97, 0.99}.
pub fn default_tvs_grid() -> (Vec<f64>, Vec<f64>) {
    (
        vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
        vec![0.9, 0.95, 0.97, 0.99],
    )
}
