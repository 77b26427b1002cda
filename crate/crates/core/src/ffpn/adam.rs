use crate::error::{Error, Result};
use crate::regularizer::{NetworkWeights, WeightGradient};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate {} must be >= 0",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::invalid(format!("Adam {name} = {b} outside (0, 1)")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("Adam eps must be positive"));
        }
        Ok(())
    }
}

/// Weights plus Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub weights: NetworkWeights,
    pub first_moment: WeightGradient,
    pub second_moment: WeightGradient,
    pub step: u64,
}

impl TrainState {
    pub fn new(weights: NetworkWeights) -> Self {
        let zero = weights.zero_gradient();
        TrainState {
            weights,
            first_moment: zero.clone(),
            second_moment: zero,
            step: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(state: &TrainState, grad: &WeightGradient, cfg: &AdamConfig) -> Result<TrainState> {
    cfg.validate()?;
    if !grad.matches(&state.weights) {
        return Err(Error::invalid("gradient shape does not match the weights"));
    }
    let mut next = state.clone();
    next.step += 1;
    let t = next.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let slots = next
        .weights
        .param_slices_mut()
        .zip(next.first_moment.slices_mut())
        .zip(next.second_moment.slices_mut())
        .zip(grad.slices());
    for (((theta, m), v), g) in slots {
        for k in 0..theta.len() {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            theta[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Prng;

    fn state() -> TrainState {
        TrainState::new(NetworkWeights::init(2, 2, 3, 0.01, &mut Prng::new(3)).unwrap())
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let mut s = state();
        s.second_moment.slices_mut().for_each(|v| v.fill(0.5));
        let g = s.weights.zero_gradient();
        let next = adam_step(&s, &g, &AdamConfig::default()).unwrap();
        assert_eq!(next.weights, s.weights);
        assert_eq!(next.step, 1);
        assert!(next.first_moment.flatten().iter().all(|&m| m == 0.0));
        assert!(next.second_moment.flatten().iter().all(|&v| (v - 0.4995).abs() < 1e-15));
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let s = state();
        let mut g = s.weights.zero_gradient();
        g.slices_mut()
            .enumerate()
            .for_each(|(k, sl)| sl.fill(if k % 2 == 0 { 0.3 } else { -2.0 }));
        let cfg = AdamConfig::default();
        let next = adam_step(&s, &g, &cfg).unwrap();
        for ((a, b), gv) in s
            .weights
            .param_slices()
            .flat_map(|x| x.iter())
            .zip(next.weights.param_slices().flat_map(|x| x.iter()))
            .zip(g.flatten())
        {
            let moved = a - b;
            assert!((moved - cfg.learning_rate * gv.signum()).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_and_shape_checked() {
        let s = state();
        let g = s.weights.zero_gradient();
        let cfg = AdamConfig::default();
        assert_eq!(adam_step(&s, &g, &cfg).unwrap(), adam_step(&s, &g, &cfg).unwrap());
        let other = NetworkWeights::zeros(3, 2, 3, 0.01).unwrap().zero_gradient();
        assert!(adam_step(&s, &other, &cfg).is_err());
        let bad = AdamConfig { beta1: 1.0, ..cfg };
        assert!(adam_step(&s, &g, &bad).is_err());
    }
}
