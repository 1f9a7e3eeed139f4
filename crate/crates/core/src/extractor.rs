//! Fixed random-weight visual feature extraction.
//!
//! Two variants share one interface:
//!
//! * [`ExtractorVariant::Cnn`]: a stack of strided convolutions (tanh after
//!   each) followed by a dense layer and tanh.
//! * [`ExtractorVariant::Dense`]: the flattened frame goes straight through a
//!   single dense layer and tanh.
//!
//! Weights are drawn once from `Normal(0, weight_stddev^2)` and never change.
//! No layer has a bias. Sampling order from the config seed: the kernel bank
//! of each conv layer in order, then the dense matrix, each filled row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::{
    conv2d_forward, dense_forward, gaussian_matrix, gemm, tanh_in_place, GemmOperand, KernelBank,
    Matrix2D, Padding, Tensor3D,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorVariant {
    Cnn,
    Dense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    pub variant: ExtractorVariant,
    pub input_h: usize,
    pub input_w: usize,
    pub input_channels: usize,
    /// Output channels of each conv layer.
    pub conv_channels: Vec<usize>,
    pub filter_sizes: Vec<usize>,
    pub strides: Vec<usize>,
    pub padding: Padding,
    pub d_conv: usize,
    pub weight_stddev: f64,
    pub seed: u64,
}

impl ExtractorConfig {
    /// 64x64x3 input, filters 31/14/6 with stride 2, 16/32/32 channels,
    /// 512 features, weights `N(0, 0.06^2)`.
    pub fn reference(variant: ExtractorVariant, seed: u64) -> Self {
        Self {
            variant,
            input_h: 64,
            input_w: 64,
            input_channels: 3,
            conv_channels: vec![16, 32, 32],
            filter_sizes: vec![31, 14, 6],
            strides: vec![2, 2, 2],
            padding: Padding::Same,
            d_conv: 512,
            weight_stddev: 0.06,
            seed,
        }
    }

    /// Scaled-down stack for single-core experiments: 32x32x3 input, filters
    /// 15/7/3 with stride 2, 8/16/16 channels, 128 features.
    pub fn desk(variant: ExtractorVariant, seed: u64) -> Self {
        Self {
            variant,
            input_h: 32,
            input_w: 32,
            input_channels: 3,
            conv_channels: vec![8, 16, 16],
            filter_sizes: vec![15, 7, 3],
            strides: vec![2, 2, 2],
            padding: Padding::Same,
            d_conv: 128,
            weight_stddev: 0.06,
            seed,
        }
    }

    /// Single dense layer over flattened 28x28 grayscale images.
    pub fn mnist(units: usize, weight_stddev: f64, seed: u64) -> Self {
        Self {
            variant: ExtractorVariant::Dense,
            input_h: 28,
            input_w: 28,
            input_channels: 1,
            conv_channels: vec![],
            filter_sizes: vec![],
            strides: vec![],
            padding: Padding::Same,
            d_conv: units,
            weight_stddev,
            seed,
        }
    }

    /// Shapes `(h, w, c)` after each conv layer, validating the stack.
    pub fn conv_shapes(&self) -> Result<Vec<(usize, usize, usize)>> {
        let layers = self.conv_channels.len();
        if self.filter_sizes.len() != layers || self.strides.len() != layers {
            return Err(Error::config(format!(
                "{} conv channel counts, {} filter sizes, {} strides",
                layers,
                self.filter_sizes.len(),
                self.strides.len()
            )));
        }
        let (mut h, mut w) = (self.input_h, self.input_w);
        let mut shapes = Vec::with_capacity(layers);
        for i in 0..layers {
            let (k, s) = (self.filter_sizes[i], self.strides[i]);
            let (oh, _) = self
                .padding
                .output_len(h, k, s)
                .map_err(|e| Error::config(format!("conv layer {i}: {e}")))?;
            let (ow, _) = self
                .padding
                .output_len(w, k, s)
                .map_err(|e| Error::config(format!("conv layer {i}: {e}")))?;
            if self.conv_channels[i] == 0 {
                return Err(Error::config(format!("conv layer {i} has zero channels")));
            }
            h = oh;
            w = ow;
            shapes.push((h, w, self.conv_channels[i]));
        }
        Ok(shapes)
    }

    /// Length of the vector entering the dense layer.
    pub fn dense_input_len(&self) -> Result<usize> {
        match self.variant {
            ExtractorVariant::Dense => Ok(self.input_h * self.input_w * self.input_channels),
            ExtractorVariant::Cnn => {
                let shapes = self.conv_shapes()?;
                let (h, w, c) = shapes
                    .last()
                    .copied()
                    .ok_or_else(|| Error::config("cnn variant needs at least one conv layer"))?;
                Ok(h * w * c)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_conv == 0 {
            return Err(Error::config("d_conv must be >= 1"));
        }
        if self.input_h == 0 || self.input_w == 0 || self.input_channels == 0 {
            return Err(Error::config("input dimensions must be >= 1"));
        }
        if !(self.weight_stddev >= 0.0) || !self.weight_stddev.is_finite() {
            return Err(Error::config(format!(
                "weight stddev {} must be finite and >= 0",
                self.weight_stddev
            )));
        }
        self.dense_input_len().map(|_| ())
    }
}

/// Visual features `X_conv(t)`; every entry lies in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extractor {
    config: ExtractorConfig,
    conv: Vec<KernelBank>,
    dense: Matrix2D,
}

impl Extractor {
    pub fn new(config: ExtractorConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::new(config.seed);
        let mut conv = Vec::new();
        if config.variant == ExtractorVariant::Cnn {
            let mut in_c = config.input_channels;
            for (&out_c, &k) in config.conv_channels.iter().zip(&config.filter_sizes) {
                let w = gaussian_matrix(out_c, k * k * in_c, 0.0, config.weight_stddev, &mut rng)?;
                conv.push(KernelBank::new(k, in_c, w)?);
                in_c = out_c;
            }
        }
        let dense = gaussian_matrix(
            config.d_conv,
            config.dense_input_len()?,
            0.0,
            config.weight_stddev,
            &mut rng,
        )?;
        Ok(Self {
            config,
            conv,
            dense,
        })
    }

    /// Reassemble an extractor from stored weights (checkpoint loading).
    pub fn from_parts(config: ExtractorConfig, conv: Vec<KernelBank>, dense: Matrix2D) -> Result<Self> {
        config.validate()?;
        let expected_layers = match config.variant {
            ExtractorVariant::Cnn => config.conv_channels.len(),
            ExtractorVariant::Dense => 0,
        };
        if conv.len() != expected_layers {
            return Err(Error::dim(format!(
                "{} kernel banks for {} conv layers",
                conv.len(),
                expected_layers
            )));
        }
        let mut in_c = config.input_channels;
        for (i, bank) in conv.iter().enumerate() {
            if bank.size != config.filter_sizes[i]
                || bank.in_channels != in_c
                || bank.out_channels != config.conv_channels[i]
            {
                return Err(Error::dim(format!("kernel bank {i} does not match config")));
            }
            in_c = bank.out_channels;
        }
        if dense.rows() != config.d_conv || dense.cols() != config.dense_input_len()? {
            return Err(Error::dim(format!(
                "dense matrix is {}x{}, config wants {}x{}",
                dense.rows(),
                dense.cols(),
                config.d_conv,
                config.dense_input_len()?
            )));
        }
        Ok(Self {
            config,
            conv,
            dense,
        })
    }

    pub fn config(&self) -> &ExtractorConfig {
        &self.config
    }

    pub fn conv_layers(&self) -> &[KernelBank] {
        &self.conv
    }

    pub fn dense_weights(&self) -> &Matrix2D {
        &self.dense
    }

    pub fn d_conv(&self) -> usize {
        self.config.d_conv
    }

    /// Features of one frame. The frame must match the configured input shape.
    pub fn extract(&self, frame: &Tensor3D) -> Result<FeatureVector> {
        let want = (
            self.config.input_h,
            self.config.input_w,
            self.config.input_channels,
        );
        if frame.shape() != want {
            return Err(Error::dim(format!(
                "frame is {:?}, extractor expects {:?}",
                frame.shape(),
                want
            )));
        }
        match self.config.variant {
            ExtractorVariant::Dense => self.dense_head(frame.as_slice()),
            ExtractorVariant::Cnn => {
                let mut x = frame.clone();
                for (bank, &stride) in self.conv.iter().zip(&self.config.strides) {
                    x = conv2d_forward(&x, bank, stride, self.config.padding)?;
                    tanh_in_place(x.as_mut_slice());
                }
                self.dense_head(x.as_slice())
            }
        }
    }

    /// `tanh(W x)` on an already-flat input; dense variant only.
    pub fn extract_dense_raw(&self, image: &[f64]) -> Result<FeatureVector> {
        if self.config.variant != ExtractorVariant::Dense {
            return Err(Error::Usage(
                "extract_dense_raw needs a dense-variant extractor".into(),
            ));
        }
        self.dense_head(image)
    }

    /// Batched [`Extractor::extract_dense_raw`]: `images` is row-major
    /// `count x input_len`; returns row-major `count x d_conv`.
    pub fn extract_dense_batch(&self, images: &[f64], count: usize) -> Result<Vec<f64>> {
        if self.config.variant != ExtractorVariant::Dense {
            return Err(Error::Usage(
                "extract_dense_batch needs a dense-variant extractor".into(),
            ));
        }
        let len = self.dense.cols();
        if images.len() != count * len {
            return Err(Error::dim(format!(
                "{} values for {count} images of length {len}",
                images.len()
            )));
        }
        let d = self.dense.rows();
        let mut out = vec![0.0; count * d];
        gemm(
            count,
            len,
            d,
            GemmOperand::row_major(images, len),
            GemmOperand::transposed(self.dense.as_slice(), len),
            &mut out,
        );
        tanh_in_place(&mut out);
        Ok(out)
    }

    fn dense_head(&self, flat: &[f64]) -> Result<FeatureVector> {
        let mut y = dense_forward(flat, &self.dense)?;
        tanh_in_place(&mut y);
        Ok(FeatureVector(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(variant: ExtractorVariant) -> ExtractorConfig {
        ExtractorConfig {
            variant,
            input_h: 8,
            input_w: 8,
            input_channels: 3,
            conv_channels: vec![4, 4],
            filter_sizes: vec![3, 3],
            strides: vec![2, 2],
            padding: Padding::Same,
            d_conv: 10,
            weight_stddev: 0.5,
            seed: 5,
        }
    }

    #[test]
    fn reference_dense_input_is_8x8x32() {
        let cfg = ExtractorConfig::reference(ExtractorVariant::Cnn, 0);
        assert_eq!(
            cfg.conv_shapes().unwrap(),
            vec![(32, 32, 16), (16, 16, 32), (8, 8, 32)]
        );
        assert_eq!(cfg.dense_input_len().unwrap(), 8 * 8 * 32);
        let dense = ExtractorConfig::reference(ExtractorVariant::Dense, 0);
        assert_eq!(dense.dense_input_len().unwrap(), 12288);
    }

    #[test]
    fn valid_padding_reference_stack_is_a_config_error() {
        let mut cfg = ExtractorConfig::reference(ExtractorVariant::Cnn, 0);
        cfg.padding = Padding::Valid;
        assert!(matches!(Extractor::new(cfg), Err(Error::Configuration(_))));
    }

    #[test]
    fn mismatched_layer_lists_are_rejected() {
        let mut cfg = tiny(ExtractorVariant::Cnn);
        cfg.strides.pop();
        assert!(matches!(Extractor::new(cfg), Err(Error::Configuration(_))));
        let mut cfg = tiny(ExtractorVariant::Cnn);
        cfg.d_conv = 0;
        assert!(Extractor::new(cfg).is_err());
    }

    #[test]
    fn same_seed_same_weights() {
        let a = Extractor::new(tiny(ExtractorVariant::Cnn)).unwrap();
        let b = Extractor::new(tiny(ExtractorVariant::Cnn)).unwrap();
        assert_eq!(a, b);
        let mut other = tiny(ExtractorVariant::Cnn);
        other.seed = 6;
        assert_ne!(a, Extractor::new(other).unwrap());
    }

    #[test]
    fn zero_stddev_gives_zero_features() {
        let mut cfg = tiny(ExtractorVariant::Cnn);
        cfg.weight_stddev = 0.0;
        let ex = Extractor::new(cfg).unwrap();
        let frame = Tensor3D::filled(8, 8, 3, 0.7);
        assert!(ex.extract(&frame).unwrap().as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_frame_gives_zero_features() {
        for variant in [ExtractorVariant::Cnn, ExtractorVariant::Dense] {
            let ex = Extractor::new(tiny(variant)).unwrap();
            let f = ex.extract(&Tensor3D::zeros(8, 8, 3)).unwrap();
            assert_eq!(f.len(), 10);
            assert!(f.as_slice().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn wrong_frame_shape_is_rejected() {
        let ex = Extractor::new(tiny(ExtractorVariant::Cnn)).unwrap();
        assert!(matches!(
            ex.extract(&Tensor3D::zeros(8, 9, 3)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            ex.extract_dense_raw(&[0.0; 192]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn dense_raw_checks_length() {
        let ex = Extractor::new(ExtractorConfig::mnist(16, 0.06, 1)).unwrap();
        assert_eq!(ex.extract_dense_raw(&[0.0; 784]).unwrap().len(), 16);
        assert!(matches!(
            ex.extract_dense_raw(&[0.0; 783]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn batch_matches_single() {
        let ex = Extractor::new(ExtractorConfig::mnist(16, 0.06, 1)).unwrap();
        let mut rng = SeededRng::new(2);
        let images: Vec<f64> = (0..3 * 784).map(|_| rng.uniform()).collect();
        let batch = ex.extract_dense_batch(&images, 3).unwrap();
        for i in 0..3 {
            let single = ex.extract_dense_raw(&images[i * 784..(i + 1) * 784]).unwrap();
            for (a, b) in single.as_slice().iter().zip(&batch[i * 16..(i + 1) * 16]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
