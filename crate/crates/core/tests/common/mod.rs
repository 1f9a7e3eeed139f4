//! Reference implementations used as oracles. Each one is written the slow,
//! obvious way and shares no code with the library beyond plain data types.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use rcrc::rng::SeededRng;
use rcrc::tensor::{KernelBank, Matrix2D, Tensor3D};

/// Six nested loops with explicit "same" zero padding.
pub fn naive_conv_same(input: &Tensor3D, bank: &KernelBank, stride: usize) -> Tensor3D {
    let (h, w, c) = input.shape();
    let k = bank.size;
    let out_h = (h + stride - 1) / stride;
    let out_w = (w + stride - 1) / stride;
    let pad_h = ((out_h - 1) * stride + k).saturating_sub(h);
    let pad_w = ((out_w - 1) * stride + k).saturating_sub(w);
    let (top, left) = ((pad_h / 2) as isize, (pad_w / 2) as isize);
    let mut out = Tensor3D::zeros(out_h, out_w, bank.out_channels);
    for oc in 0..bank.out_channels {
        for oy in 0..out_h {
            for ox in 0..out_w {
                let mut acc = 0.0;
                for ky in 0..k {
                    for kx in 0..k {
                        for ic in 0..c {
                            let y = (oy * stride) as isize + ky as isize - top;
                            let x = (ox * stride) as isize + kx as isize - left;
                            if y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w {
                                acc += input.get(y as usize, x as usize, ic) * bank.weight(oc, ky, kx, ic);
                            }
                        }
                    }
                }
                out.set(oy, ox, oc, acc);
            }
        }
    }
    out
}

pub fn naive_matvec(m: &Matrix2D, x: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m.get(i, j) * x[j]).sum())
        .collect()
}

/// One leaky ESN step, written out directly.
pub fn naive_esn_step(w_in: &Matrix2D, w: &Matrix2D, alpha: f64, state: &[f64], x: &[f64]) -> Vec<f64> {
    let a = naive_matvec(w_in, x);
    let b = naive_matvec(w, state);
    (0..state.len())
        .map(|i| (1.0 - alpha) * state[i] + alpha * (a[i] + b[i]).tanh())
        .collect()
}

/// Largest eigenvalue modulus from a full Schur decomposition.
pub fn schur_radius(m: &Matrix2D) -> f64 {
    let n = m.rows();
    let d = DMatrix::from_row_slice(n, n, m.as_slice());
    d.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn random_tensor(h: usize, w: usize, c: usize, seed: u64) -> Tensor3D {
    let mut rng = SeededRng::new(seed);
    let v = (0..h * w * c).map(|_| rng.uniform()).collect();
    Tensor3D::from_vec(h, w, c, v).unwrap()
}

pub fn random_vec(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed);
    (0..n).map(|_| rng.uniform_range(lo, hi)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Full MNIST directory: `$MNIST_DIR` or `<workspace>/data/mnist`, if the
/// four files are there.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data/mnist"));
    let files = [
        rcrc::mnist::TRAIN_IMAGES,
        rcrc::mnist::TRAIN_LABELS,
        rcrc::mnist::TEST_IMAGES,
        rcrc::mnist::TEST_LABELS,
    ];
    files.iter().all(|f| dir.join(f).is_file()).then_some(dir)
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}
