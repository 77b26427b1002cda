//! Feasibility-based fixed-point network: forward solve of
//! `u = DROP(R_Θ(u))`, Jacobian-free gradients, Adam and the training loop.

mod adam;
mod forward;
mod train;

pub use adam::{adam_step, AdamConfig, TrainState};
pub use forward::{
    ffpn_apply, ffpn_forward, jfb_gradient, jfb_loss_and_gradient, mse_loss, mse_loss_grad,
};
pub use train::{
    split_indices, train, EpochRecord, TrainConfig, TrainOutcome, TrainSample, EVAL_DELTA,
    EVAL_MAX_ITER, LOG_HEADER, TRAIN_DELTA, TRAIN_MAX_ITER,
};
