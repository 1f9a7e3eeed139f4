use serde::{Deserialize, Serialize};

use super::matrix::{gemm, GemmOperand, Matrix2D, Tensor3D};
use crate::error::{Error, Result};

/// Spatial padding for [`conv2d_forward`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// No padding: `out = floor((in - k) / stride) + 1`.
    Valid,
    /// Zero padding so that `out = ceil(in / stride)`. The total padding
    /// `max((out - 1) * stride + k - in, 0)` is split with the smaller half
    /// on the top/left.
    Same,
}

impl Padding {
    /// Output length and leading pad along one axis.
    pub fn output_len(self, input: usize, kernel: usize, stride: usize) -> Result<(usize, usize)> {
        if stride == 0 {
            return Err(Error::param("stride must be >= 1"));
        }
        if input == 0 || kernel == 0 {
            return Err(Error::dim("empty input or kernel"));
        }
        match self {
            Padding::Valid => {
                if kernel > input {
                    return Err(Error::dim(format!(
                        "kernel {kernel} larger than unpadded input {input}"
                    )));
                }
                Ok(((input - kernel) / stride + 1, 0))
            }
            Padding::Same => {
                let out = input.div_ceil(stride);
                let total = ((out - 1) * stride + kernel).saturating_sub(input);
                Ok((out, total / 2))
            }
        }
    }
}

/// Bank of `out_channels` kernels of shape `size x size x in_channels`.
///
/// Weights are stored as an `out_channels x (size * size * in_channels)`
/// matrix; within a row the layout is `(ky, kx, c)` with `c` fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBank {
    pub size: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Matrix2D,
}

impl KernelBank {
    pub fn new(size: usize, in_channels: usize, weights: Matrix2D) -> Result<Self> {
        if weights.cols() != size * size * in_channels {
            return Err(Error::dim(format!(
                "kernel matrix has {} columns, expected {}x{}x{}",
                weights.cols(),
                size,
                size,
                in_channels
            )));
        }
        Ok(Self {
            size,
            in_channels,
            out_channels: weights.rows(),
            weights,
        })
    }

    #[inline]
    pub fn weight(&self, out_c: usize, ky: usize, kx: usize, in_c: usize) -> f64 {
        self.weights
            .get(out_c, (ky * self.size + kx) * self.in_channels + in_c)
    }
}

/// Cross-correlation without bias.
pub fn conv2d_forward(
    input: &Tensor3D,
    kernels: &KernelBank,
    stride: usize,
    padding: Padding,
) -> Result<Tensor3D> {
    let (h, w, c) = input.shape();
    if c != kernels.in_channels {
        return Err(Error::dim(format!(
            "input has {c} channels, kernels expect {}",
            kernels.in_channels
        )));
    }
    let k = kernels.size;
    let (out_h, pad_top) = padding.output_len(h, k, stride)?;
    let (out_w, pad_left) = padding.output_len(w, k, stride)?;

    let patch_len = k * k * c;
    let mut patches = vec![0.0; out_h * out_w * patch_len];
    let src = input.as_slice();
    for oy in 0..out_h {
        for ox in 0..out_w {
            let base = (oy * out_w + ox) * patch_len;
            let y0 = (oy * stride) as isize - pad_top as isize;
            let x0 = (ox * stride) as isize - pad_left as isize;
            for ky in 0..k {
                let y = y0 + ky as isize;
                if y < 0 || y >= h as isize {
                    continue;
                }
                // Contiguous run of valid x positions for this kernel row.
                let kx_lo = (-x0).max(0) as usize;
                let kx_hi = ((w as isize - x0).min(k as isize)).max(0) as usize;
                if kx_lo >= kx_hi {
                    continue;
                }
                let src_start = (y as usize * w + (x0 + kx_lo as isize) as usize) * c;
                let len = (kx_hi - kx_lo) * c;
                let dst_start = base + (ky * k + kx_lo) * c;
                patches[dst_start..dst_start + len].copy_from_slice(&src[src_start..src_start + len]);
            }
        }
    }

    let out_c = kernels.out_channels;
    let mut out = vec![0.0; out_h * out_w * out_c];
    gemm(
        out_h * out_w,
        patch_len,
        out_c,
        GemmOperand::row_major(&patches, patch_len),
        GemmOperand::transposed(kernels.weights.as_slice(), patch_len),
        &mut out,
    );
    Tensor3D::from_vec(out_h, out_w, out_c, out)
}
