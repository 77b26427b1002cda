use crate::error::{check_len, Result};
use crate::feasibility::{fixed_point_iterate, DropOperator, DropWorkspace, FixedPointReport};
use crate::regularizer::{NetworkWeights, WeightGradient};

/// `(1/n)‖u − u*‖²`.
pub fn mse_loss(u: &[f64], target: &[f64]) -> Result<f64> {
    check_len("loss input", target.len(), u.len())?;
    if u.is_empty() {
        return Ok(0.0);
    }
    Ok(u.iter()
        .zip(target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / u.len() as f64)
}

/// `(2/n)(u − u*)`.
pub fn mse_loss_grad(u: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check_len("loss input", target.len(), u.len())?;
    let scale = 2.0 / u.len().max(1) as f64;
    Ok(u.iter().zip(target).map(|(a, b)| scale * (a - b)).collect())
}

/// One application of `T_Θ = DROP ∘ R_Θ`.
pub fn ffpn_apply(
    weights: &NetworkWeights,
    op: &DropOperator,
    data: &[f64],
    shape: (usize, usize),
    u: &[f64],
) -> Result<Vec<f64>> {
    check_len("sinogram", op.n_equations(), data.len())?;
    check_len("image", op.n_unknowns(), u.len())?;
    let r = weights.forward(u, shape.0, shape.1)?;
    op.apply(data, &r)
}

/// Fixed-point iteration `u^{k+1} = DROP(R_Θ(u^k))` from `u¹ = 0`.
pub fn ffpn_forward(
    weights: &NetworkWeights,
    op: &DropOperator,
    data: &[f64],
    shape: (usize, usize),
    delta: f64,
    max_iter: usize,
) -> Result<FixedPointReport> {
    check_len("sinogram", op.n_equations(), data.len())?;
    check_len("image shape", op.n_unknowns(), shape.0 * shape.1)?;
    let mut ws = DropWorkspace::new(op);
    fixed_point_iterate(
        |u, _| {
            let r = weights.forward(u, shape.0, shape.1)?;
            let mut out = vec![0.0; r.len()];
            op.apply_into(data, &r, &mut out, &mut ws);
            Ok(out)
        },
        vec![0.0; op.n_unknowns()],
        delta,
        max_iter,
    )
}

/// JFB gradient together with the loss `mse(T_Θ(u_fixed), u*)` it descends.
pub fn jfb_loss_and_gradient(
    weights: &NetworkWeights,
    op: &DropOperator,
    data: &[f64],
    shape: (usize, usize),
    u_fixed: &[f64],
    target: &[f64],
) -> Result<(f64, WeightGradient)> {
    check_len("sinogram", op.n_equations(), data.len())?;
    check_len("fixed point", op.n_unknowns(), u_fixed.len())?;
    check_len("target", op.n_unknowns(), target.len())?;
    let (h, w) = shape;
    let (r, cache) = weights.forward_cached(u_fixed, h, w)?;
    let out = op.apply(data, &r)?;
    let loss = mse_loss(&out, target)?;
    let g_out = mse_loss_grad(&out, target)?;
    let g_r = op.linear_transpose(&g_out)?;
    let grad = weights.vjp_weights_cached(&cache, &g_r, h, w)?;
    Ok((loss, grad))
}

/// Jacobian-free gradient: backpropagates the loss at `T_Θ(u_fixed)` through
/// a single application of `T_Θ`, treating `u_fixed` as a constant.
pub fn jfb_gradient(
    weights: &NetworkWeights,
    op: &DropOperator,
    data: &[f64],
    shape: (usize, usize),
    u_fixed: &[f64],
    target: &[f64],
) -> Result<WeightGradient> {
    Ok(jfb_loss_and_gradient(weights, op, data, shape, u_fixed, target)?.1)
}
