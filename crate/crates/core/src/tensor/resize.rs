use super::matrix::Tensor3D;
use crate::error::{Error, Result};

/// Corner-aligned bilinear resize: output pixel `i` samples source coordinate
/// `i * (in - 1) / (out - 1)` (or `0` when `out == 1`), per channel.
pub fn bilinear_resize(input: &Tensor3D, out_h: usize, out_w: usize) -> Result<Tensor3D> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::param(format!("resize target {out_h}x{out_w}")));
    }
    let (h, w, c) = input.shape();
    if h == 0 || w == 0 || c == 0 {
        return Err(Error::dim("resize of an empty tensor"));
    }
    if (h, w) == (out_h, out_w) {
        return Ok(input.clone());
    }

    let ys: Vec<(usize, usize, f64)> = (0..out_h).map(|i| sample_axis(i, h, out_h)).collect();
    let xs: Vec<(usize, usize, f64)> = (0..out_w).map(|j| sample_axis(j, w, out_w)).collect();

    let src = input.as_slice();
    let mut out = Tensor3D::zeros(out_h, out_w, c);
    let dst = out.as_mut_slice();
    for (i, &(y0, y1, fy)) in ys.iter().enumerate() {
        for (j, &(x0, x1, fx)) in xs.iter().enumerate() {
            for ch in 0..c {
                let p00 = src[(y0 * w + x0) * c + ch];
                let p01 = src[(y0 * w + x1) * c + ch];
                let p10 = src[(y1 * w + x0) * c + ch];
                let p11 = src[(y1 * w + x1) * c + ch];
                let top = p00 + (p01 - p00) * fx;
                let bottom = p10 + (p11 - p10) * fx;
                let mut v = top + (bottom - top) * fy;
                // Keep the result inside the convex hull of its four taps.
                let lo = p00.min(p01).min(p10).min(p11);
                let hi = p00.max(p01).max(p10).max(p11);
                v = v.clamp(lo, hi);
                dst[(i * out_w + j) * c + ch] = v;
            }
        }
    }
    Ok(out)
}

fn sample_axis(i: usize, input: usize, output: usize) -> (usize, usize, f64) {
    if output == 1 || input == 1 {
        return (0, 0, 0.0);
    }
    let pos = i as f64 * (input - 1) as f64 / (output - 1) as f64;
    let lo = (pos.floor() as usize).min(input - 1);
    let hi = (lo + 1).min(input - 1);
    (lo, hi, pos - lo as f64)
}
