mod common;

use common::*;
use proptest::prelude::*;
use rcrc::extractor::{Extractor, ExtractorConfig, ExtractorVariant};
use rcrc::rng::SeededRng;
use rcrc::tensor::*;

#[test]
fn conv_matches_six_loop_reference_on_reference_stack() {
    let ex = Extractor::new(ExtractorConfig::reference(ExtractorVariant::Cnn, 11)).unwrap();
    let mut x = random_tensor(64, 64, 3, 5);
    let mut dims = Vec::new();
    for (bank, &stride) in ex.conv_layers().iter().zip(&ex.config().strides) {
        let fast = conv2d_forward(&x, bank, stride, Padding::Same).unwrap();
        let slow = naive_conv_same(&x, bank, stride);
        assert_eq!(fast.shape(), slow.shape());
        assert!(max_abs_diff(fast.as_slice(), slow.as_slice()) < 1e-5);
        dims.push(fast.height());
        x = fast;
        tanh_in_place(x.as_mut_slice());
    }
    assert_eq!(dims, vec![32, 16, 8]);
}

#[test]
fn conv_matches_reference_on_odd_shapes() {
    let mut rng = SeededRng::new(3);
    for (h, w, c, k, s, oc) in [(7, 9, 2, 3, 1, 4), (10, 5, 1, 4, 3, 2), (1, 1, 3, 5, 2, 1)] {
        let x = random_tensor(h, w, c, (h * w) as u64);
        let wts = gaussian_matrix(oc, k * k * c, 0.0, 1.0, &mut rng).unwrap();
        let bank = KernelBank::new(k, c, wts).unwrap();
        let fast = conv2d_forward(&x, &bank, s, Padding::Same).unwrap();
        let slow = naive_conv_same(&x, &bank, s);
        assert!(max_abs_diff(fast.as_slice(), slow.as_slice()) < 1e-12);
    }
}

#[test]
fn dense_forward_matches_naive() {
    let mut rng = SeededRng::new(8);
    let m = gaussian_matrix(37, 53, 0.0, 0.5, &mut rng).unwrap();
    let x = random_vec(53, -1.0, 1.0, 2);
    let y = dense_forward(&x, &m).unwrap();
    assert!(max_abs_diff(&y, &naive_matvec(&m, &x)) < 1e-12);
    assert!(dense_forward(&x[..52], &m).is_err());
}

#[test]
fn spectral_radius_agrees_with_schur() {
    let mut rng = SeededRng::new(21);
    for (n, sparsity) in [(10, 0.0), (40, 0.8), (64, 0.8), (97, 0.5)] {
        let raw = gaussian_matrix(n, n, 0.0, 1.0, &mut rng).unwrap();
        let m = apply_sparsity(&raw, sparsity, &mut rng).unwrap();
        let fast = spectral_radius(&m, 1e-12, DEFAULT_MAX_ITERS).unwrap();
        let exact = schur_radius(&m);
        assert!((fast - exact).abs() / exact < 1e-7, "n={n}: {fast} vs {exact}");
    }
}

#[test]
fn scaled_matrix_hits_target() {
    let mut rng = SeededRng::new(4);
    let raw = gaussian_matrix(128, 128, 0.0, 1.0, &mut rng).unwrap();
    let m = apply_sparsity(&raw, 0.8, &mut rng).unwrap();
    let s = scale_to_radius(&m, 0.95).unwrap();
    assert!((schur_radius(&s) - 0.95).abs() / 0.95 < 1e-6);
}

/// Kolmogorov-Smirnov distance between samples and N(mean, sd^2).
fn ks_statistic(mut xs: Vec<f64>, mean: f64, sd: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let cdf = |x: f64| 0.5 * (1.0 + libm::erf((x - mean) / (sd * std::f64::consts::SQRT_2)));
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_weights_pass_ks() {
    let mut rng = SeededRng::new(99);
    let m = gaussian_matrix(100, 100, 0.0, 0.06, &mut rng).unwrap();
    let d = ks_statistic(m.as_slice().to_vec(), 0.0, 0.06);
    // 1% critical value for n = 10000 is 1.63 / sqrt(n).
    assert!(d < 1.63 / 100.0, "KS distance {d}");
}

#[test]
fn sparsity_zeroes_exact_count() {
    let mut rng = SeededRng::new(1);
    for n in [7, 64, 512] {
        let raw = gaussian_matrix(n, n, 0.0, 1.0, &mut rng).unwrap();
        let m = apply_sparsity(&raw, 0.8, &mut rng).unwrap();
        assert_eq!(m.count_zeros(), (0.8 * (n * n) as f64).round() as usize);
    }
}

#[test]
fn bilinear_matches_formula() {
    let x = random_tensor(9, 13, 2, 7);
    let y = bilinear_resize(&x, 4, 6).unwrap();
    for oy in 0..4 {
        for ox in 0..6 {
            let sy = oy as f64 * 8.0 / 3.0;
            let sx = ox as f64 * 12.0 / 5.0;
            let (y0, x0) = (sy.floor() as usize, sx.floor() as usize);
            let (y1, x1) = ((y0 + 1).min(8), (x0 + 1).min(12));
            let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
            for c in 0..2 {
                let top = x.get(y0, x0, c) * (1.0 - fx) + x.get(y0, x1, c) * fx;
                let bot = x.get(y1, x0, c) * (1.0 - fx) + x.get(y1, x1, c) * fx;
                let want = top * (1.0 - fy) + bot * fy;
                assert!((y.get(oy, ox, c) - want).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #[test]
    fn resize_keeps_corners_and_range(h in 2usize..20, w in 2usize..20, oh in 2usize..20, ow in 2usize..20, seed in 0u64..1000) {
        let x = random_tensor(h, w, 3, seed);
        let y = bilinear_resize(&x, oh, ow).unwrap();
        let (lo, hi) = x.min_max();
        let (ylo, yhi) = y.min_max();
        prop_assert!(ylo >= lo - 1e-12 && yhi <= hi + 1e-12);
        for c in 0..3 {
            prop_assert!((y.get(0, 0, c) - x.get(0, 0, c)).abs() < 1e-12);
            prop_assert!((y.get(oh - 1, ow - 1, c) - x.get(h - 1, w - 1, c)).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_is_linear(seed in 0u64..500, a in -2.0f64..2.0) {
        let mut rng = SeededRng::new(seed);
        let bank = KernelBank::new(3, 2, gaussian_matrix(3, 18, 0.0, 1.0, &mut rng).unwrap()).unwrap();
        let x = random_tensor(6, 5, 2, seed);
        let z = random_tensor(6, 5, 2, seed + 1);
        let combo = Tensor3D::from_vec(6, 5, 2, x.as_slice().iter().zip(z.as_slice()).map(|(p, q)| a * p + q).collect()).unwrap();
        let fx = conv2d_forward(&x, &bank, 2, Padding::Same).unwrap();
        let fz = conv2d_forward(&z, &bank, 2, Padding::Same).unwrap();
        let fc = conv2d_forward(&combo, &bank, 2, Padding::Same).unwrap();
        let expect: Vec<f64> = fx.as_slice().iter().zip(fz.as_slice()).map(|(p, q)| a * p + q).collect();
        prop_assert!(max_abs_diff(fc.as_slice(), &expect) < 1e-10);
    }

    #[test]
    fn tanh_stays_in_unit_interval(x in -1e6f64..1e6) {
        prop_assert!(tanh(x).abs() <= 1.0);
    }
}
