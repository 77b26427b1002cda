use super::network::NetworkWeights;
use crate::error::{check_len, Error, Result};
use crate::feasibility::DropOperator;
use crate::numerics::{distance, norm, Prng};

/// Absolute slack on `C₁ ≤ γC₂` that absorbs rounding in the differences.
pub const ROUNDING_SLACK: f64 = 1e-11;

/// Settings of the empirical Lipschitz check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafeguardConfig {
    /// Target constant γ ∈ (0, 1].
    pub gamma: f64,
    /// Perturbation std per entry as a fraction of `‖ũ‖/√n`.
    pub noise_scale: f64,
    /// Lower bound on the perturbation std, so zero images still get probed.
    pub noise_floor: f64,
}

impl Default for SafeguardConfig {
    fn default() -> Self {
        SafeguardConfig {
            gamma: 1.0,
            noise_scale: 0.1,
            noise_floor: 1e-6,
        }
    }
}

impl SafeguardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if !(self.noise_scale > 0.0 && self.noise_floor >= 0.0) {
            return Err(Error::invalid("safeguard noise scale must be positive"));
        }
        Ok(())
    }
}

/// Batch means `C₁ = mean ‖T(ũ) − T(ũ + ζ)‖` and `C₂ = mean ‖ζ‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzCheck {
    pub c1: f64,
    pub c2: f64,
}

impl LipschitzCheck {
    pub fn holds(&self, gamma: f64, slack: f64) -> bool {
        self.c1 <= gamma * self.c2 + slack
    }
}

#[derive(Debug, Clone)]
pub struct SafeguardOutcome {
    pub weights: NetworkWeights,
    pub before: LipschitzCheck,
    pub after: LipschitzCheck,
    /// The bound was violated on entry.
    pub triggered: bool,
    /// Overall factor applied to the residual branch (1 when untouched).
    pub branch_scale: f64,
    /// False only when no branch scale in `[0, 1]` satisfies the bound.
    pub enforced: bool,
    pub perturbations: Vec<Vec<f64>>,
}

/// Gaussian perturbations `ζ_i`, one per point, with per-entry std
/// `max(noise_scale·‖ũ_i‖/√n, noise_floor)`.
pub fn sample_perturbations(points: &[Vec<f64>], cfg: &SafeguardConfig, rng: &mut Prng) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            let rms = norm(p) / (p.len().max(1) as f64).sqrt();
            rng.gaussian_vec(p.len(), (cfg.noise_scale * rms).max(cfg.noise_floor))
        })
        .collect()
}

/// Evaluates `C₁` and `C₂` for `T = 𝒜 ∘ R_Θ`, where `𝒜` is the DROP step of
/// `feasibility` (identity when `None`). Only the linear part of the affine
/// DROP step enters the differences, so no data vector is needed.
pub fn lipschitz_check(
    weights: &NetworkWeights,
    shape: (usize, usize),
    points: &[Vec<f64>],
    perturbations: &[Vec<f64>],
    feasibility: Option<&DropOperator>,
) -> Result<LipschitzCheck> {
    if points.is_empty() {
        return Err(Error::invalid("Lipschitz check needs a nonempty batch"));
    }
    check_len("perturbation count", points.len(), perturbations.len())?;
    let (h, w) = shape;
    let (mut c1, mut c2) = (0.0, 0.0);
    for (u, z) in points.iter().zip(perturbations) {
        check_len("perturbation length", u.len(), z.len())?;
        let shifted: Vec<f64> = u.iter().zip(z).map(|(a, b)| a + b).collect();
        let ra = weights.forward(u, h, w)?;
        let rb = weights.forward(&shifted, h, w)?;
        c1 += match feasibility {
            Some(op) => {
                let diff: Vec<f64> = ra.iter().zip(&rb).map(|(a, b)| a - b).collect();
                norm(&op.linear_apply(&diff)?)
            }
            None => distance(&ra, &rb),
        };
        c2 += norm(z);
    }
    let n = points.len() as f64;
    Ok(LipschitzCheck { c1: c1 / n, c2: c2 / n })
}

/// The rescale factor `c = γC₂/C₁` for the branch.
pub fn rescale_factor(check: &LipschitzCheck, gamma: f64) -> f64 {
    gamma * check.c2 / check.c1
}

/// Draws fresh perturbations and runs [`enforce_lipschitz`].
pub fn lipschitz_safeguard(
    weights: &NetworkWeights,
    shape: (usize, usize),
    points: &[Vec<f64>],
    feasibility: Option<&DropOperator>,
    cfg: &SafeguardConfig,
    rng: &mut Prng,
) -> Result<SafeguardOutcome> {
    cfg.validate()?;
    let perturbations = sample_perturbations(points, cfg, rng);
    enforce_lipschitz(weights, shape, points, perturbations, feasibility, cfg.gamma)
}

/// If `C₁ > γC₂`, scales every kernel and bias by `c^{1/ℓ}` with
/// `c = γC₂/C₁`. Because the identity term of `R_Θ` is not scaled, this can
/// fall short; the branch scale is then bisected on `[0, c]` down to the
/// largest value that satisfies `C₁ ≤ γC₂` up to [`ROUNDING_SLACK`].
pub fn enforce_lipschitz(
    weights: &NetworkWeights,
    shape: (usize, usize),
    points: &[Vec<f64>],
    perturbations: Vec<Vec<f64>>,
    feasibility: Option<&DropOperator>,
    gamma: f64,
) -> Result<SafeguardOutcome> {
    let eval = |net: &NetworkWeights| lipschitz_check(net, shape, points, &perturbations, feasibility);
    let before = eval(weights)?;
    if before.holds(gamma, ROUNDING_SLACK) {
        return Ok(SafeguardOutcome {
            weights: weights.clone(),
            before,
            after: before,
            triggered: false,
            branch_scale: 1.0,
            enforced: true,
            perturbations,
        });
    }

    let c = rescale_factor(&before, gamma);
    let first = weights.scale_branch(c);
    let after = eval(&first)?;
    if after.holds(gamma, ROUNDING_SLACK) {
        return Ok(SafeguardOutcome {
            weights: first,
            before,
            after,
            triggered: true,
            branch_scale: c,
            enforced: true,
            perturbations,
        });
    }

    let floor = weights.scale_branch(0.0);
    let floor_check = eval(&floor)?;
    if !floor_check.holds(gamma, ROUNDING_SLACK) {
        return Ok(SafeguardOutcome {
            weights: first,
            before,
            after,
            triggered: true,
            branch_scale: c,
            enforced: false,
            perturbations,
        });
    }
    let (mut lo, mut hi) = (0.0, c);
    let (mut best, mut best_check) = (floor, floor_check);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let candidate = weights.scale_branch(mid);
        let check = eval(&candidate)?;
        if check.holds(gamma, ROUNDING_SLACK) {
            lo = mid;
            best = candidate;
            best_check = check;
        } else {
            hi = mid;
        }
    }
    Ok(SafeguardOutcome {
        weights: best,
        before,
        after: best_check,
        triggered: true,
        branch_scale: lo,
        enforced: true,
        perturbations,
    })
}
