use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix2D {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix2D {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn count_zeros(&self) -> usize {
        self.data.iter().filter(|v| **v == 0.0).count()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix2D) -> Result<Matrix2D> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix2D::zeros(self.rows, other.cols);
        gemm(
            self.rows,
            self.cols,
            other.cols,
            GemmOperand::row_major(&self.data, self.cols),
            GemmOperand::row_major(&other.data, other.cols),
            &mut out.data,
        );
        Ok(out)
    }
}

/// A borrowed operand for [`gemm`]: data plus row and column strides.
#[derive(Clone, Copy)]
pub(crate) struct GemmOperand<'a> {
    pub data: &'a [f64],
    pub row_stride: isize,
    pub col_stride: isize,
}

impl<'a> GemmOperand<'a> {
    pub fn row_major(data: &'a [f64], cols: usize) -> Self {
        Self {
            data,
            row_stride: cols as isize,
            col_stride: 1,
        }
    }

    /// View a row-major `rows x cols` buffer as its `cols x rows` transpose.
    pub fn transposed(data: &'a [f64], cols: usize) -> Self {
        Self {
            data,
            row_stride: 1,
            col_stride: cols as isize,
        }
    }
}

/// `c = a * b` where `a` is `m x k`, `b` is `k x n` and `c` is row-major `m x n`.
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: GemmOperand, b: GemmOperand, c: &mut [f64]) {
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let span = |op: &GemmOperand, r: usize, cc: usize| {
        if r == 0 || cc == 0 {
            0
        } else {
            ((r - 1) as isize * op.row_stride + (cc - 1) as isize * op.col_stride) as usize + 1
        }
    };
    assert!(a.data.len() >= span(&a, m, k));
    assert!(b.data.len() >= span(&b, k, n));
    // SAFETY: the bounds of every operand were checked above against the
    // strides handed to matrixmultiply, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.row_stride,
            a.col_stride,
            b.data.as_ptr(),
            b.row_stride,
            b.col_stride,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Height x width x channels image or activation map, stored HWC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor3D {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor3D {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::dim(format!(
                "{} values for a {height}x{width}x{channels} tensor",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        let i = self.index(y, x, c);
        self.data[i] = v;
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Matrix with i.i.d. `Normal(mean, stddev^2)` entries, filled row by row.
pub fn gaussian_matrix(
    rows: usize,
    cols: usize,
    mean: f64,
    stddev: f64,
    rng: &mut SeededRng,
) -> Result<Matrix2D> {
    if rows == 0 || cols == 0 {
        return Err(Error::dim(format!("gaussian matrix of shape {rows}x{cols}")));
    }
    if !(stddev >= 0.0) || !stddev.is_finite() || !mean.is_finite() {
        return Err(Error::param(format!(
            "gaussian matrix needs finite mean and stddev >= 0 (got {mean}, {stddev})"
        )));
    }
    let data = (0..rows * cols).map(|_| rng.normal(mean, stddev)).collect();
    Ok(Matrix2D { rows, cols, data })
}

/// Zero exactly `round(sparsity * rows * cols)` entries chosen uniformly
/// without replacement (partial Fisher-Yates over flat indices).
pub fn apply_sparsity(w: &Matrix2D, sparsity: f64, rng: &mut SeededRng) -> Result<Matrix2D> {
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::param(format!("sparsity {sparsity} outside [0, 1]")));
    }
    let n = w.data.len();
    let k = (sparsity * n as f64).round() as usize;
    let mut out = w.clone();
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below((n - i) as u64) as usize;
        idx.swap(i, j);
        out.data[idx[i]] = 0.0;
    }
    Ok(out)
}

/// `weights * input` with no bias. Plain row-by-row dot products.
pub fn dense_forward(input: &[f64], weights: &Matrix2D) -> Result<Vec<f64>> {
    if input.len() != weights.cols {
        return Err(Error::dim(format!(
            "dense layer expects {} inputs, got {}",
            weights.cols,
            input.len()
        )));
    }
    Ok((0..weights.rows)
        .map(|r| dot(weights.row(r), input))
        .collect())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators; the summation order is fixed so results
    // are reproducible run to run.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        s += a[j] * b[j];
    }
    s
}

/// Platform-independent `tanh` (pure-Rust libm port).
#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

pub fn tanh_in_place(values: &mut [f64]) {
    for v in values {
        *v = tanh(*v);
    }
}
