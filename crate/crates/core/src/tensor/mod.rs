//! Minimal deterministic numeric kernel.

mod conv;
mod matrix;
mod resize;
mod spectral;

pub use conv::{conv2d_forward, KernelBank, Padding};
pub use matrix::{apply_sparsity, dense_forward, gaussian_matrix, tanh, tanh_in_place, Matrix2D, Tensor3D};
pub(crate) use matrix::{dot, gemm, GemmOperand};
pub use resize::bilinear_resize;
pub use spectral::{scale_to_radius, spectral_radius, DEFAULT_MAX_ITERS, DEFAULT_TOL, SCALE_TOL};
