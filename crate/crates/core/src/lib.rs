//! Sparse-view tomographic reconstruction with feasibility-based fixed-point
//! networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: sparse matrices, seeded randomness, images and FIMG files.
//! * [`geometry`]: parallel-beam system matrices, ellipse phantoms and noisy
//!   measurements.
//! * [`feasibility`]: projections, Kaczmarz and DROP steps, fixed-point driver.
//! * [`variational`]: total-variation superiorization and minimization.
//! * [`regularizer`]: the residual convolutional regularizer and its VJPs.
//! * [`ffpn`]: the fixed-point network, JFB gradients and training.
//! * [`metrics`]: PSNR and SSIM.
//! * [`cli`]: the `ffpn` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
mod error;
pub mod feasibility;
pub mod ffpn;
pub mod geometry;
pub mod metrics;
pub mod numerics;
pub mod regularizer;
pub mod variational;

pub use error::{Error, Result, TraceRow};
