//! Total-variation baselines: superiorized DROP and linearized ADMM.

mod diff;
mod tvm;
mod tvs;

pub use diff::{soft_threshold, tv_value, DiffOperator};
pub use tvm::{trace_to_csv, tvm_reconstruct, AdmmParams, TvmReport};
pub use tvs::{default_tvs_grid, tune_tvs, tvs_reconstruct, TvsParams, TvsReport};
