//! Dense row-major `f64` matrices and the handful of kernels the model needs.
//!
//! Every kernel accumulates in a fixed order so that identical inputs give
//! bitwise-identical outputs.

mod adam;
mod gradcheck;
mod matrix;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_grad, max_relative_error, DEFAULT_STEP};
pub use matrix::{dot, matmul, matmul_nt, matmul_tn, relu, relu_backward, segment_sum, Matrix};
