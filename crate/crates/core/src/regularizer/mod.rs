//! The learned residual regularizer `R_Θ(u) = u + branch(u)`, its exact
//! vector-Jacobian products, weight files and the Lipschitz safeguard.

mod conv;
pub mod io;
mod network;
mod safeguard;

pub use conv::{conv2d, leaky_relu, ConvLayer};
pub use io::{read_weights, write_weights};
pub use network::{
    architecture_parameter_count, channel_chain, regularizer_parameter_count, ActivationPlacement,
    ForwardCache, NetworkWeights, WeightGradient, DESK_SLOPE, DESK_WIDTH, INIT_SCALE,
};
pub use safeguard::{
    enforce_lipschitz, lipschitz_check, lipschitz_safeguard, rescale_factor, sample_perturbations,
    LipschitzCheck, SafeguardConfig, SafeguardOutcome, ROUNDING_SLACK,
};
