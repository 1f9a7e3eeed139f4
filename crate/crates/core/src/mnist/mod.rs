//! Random dense features on MNIST, classified by L2-penalised logistic
//! regression.
//!
//! Each trial merges the standard train and test files into one pool, draws
//! a fresh disjoint split, draws a fresh `N(0, 0.06^2)` dense layer, and
//! measures test accuracy of a linear classifier on `tanh(W x)`.

mod logreg;

use std::path::Path;

use serde::Serialize;

pub use logreg::{
    logreg_objective, train_logreg, train_logreg_from, Design, LogRegConfig, LogisticRegression,
    TrainReport,
};

use crate::error::{Error, Result};
use crate::extractor::{Extractor, ExtractorConfig};
use crate::rng::{mix_seed, SeededRng};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const CLASSES: usize = 10;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Images scaled to `[0, 1]` (pixel / 255), row-major `len x (rows * cols)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageDataset {
    pub images: Vec<f64>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
}

impl ImageDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn pixels(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let p = self.pixels();
        &self.images[i * p..(i + 1) * p]
    }

    pub fn select(&self, indices: &[usize]) -> ImageDataset {
        let mut images = Vec::with_capacity(indices.len() * self.pixels());
        for &i in indices {
            images.extend_from_slice(self.image(i));
        }
        ImageDataset {
            images,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn concat(mut self, other: &ImageDataset) -> Result<ImageDataset> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::dim("cannot merge datasets with different image sizes"));
        }
        self.images.extend_from_slice(&other.images);
        self.labels.extend_from_slice(&other.labels);
        Ok(self)
    }

    pub fn class_counts(&self) -> [usize; CLASSES] {
        let mut counts = [0; CLASSES];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::format(offset as u64, "file ends inside the header"))
}

/// Parse an IDX image file: magic, count, rows, cols, then `u8` pixels.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::format(0, format!("image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let expected = count * rows * cols;
    let body = &bytes[16..];
    if body.len() != expected {
        return Err(Error::format(
            16 + body.len().min(expected) as u64,
            format!("{count} images of {rows}x{cols} need {expected} bytes, found {}", body.len()),
        ));
    }
    Ok((rows, cols, body.iter().map(|&b| b as f64 / 255.0).collect()))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::format(0, format!("label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::format(
            8 + body.len().min(count) as u64,
            format!("{count} labels announced, {} present", body.len()),
        ));
    }
    if let Some(pos) = body.iter().position(|&l| l as usize >= CLASSES) {
        return Err(Error::format(8 + pos as u64, format!("label {} out of range", body[pos])));
    }
    Ok(body.to_vec())
}

pub fn load_idx(images: &Path, labels: &Path) -> Result<ImageDataset> {
    let img_bytes = std::fs::read(images).map_err(|e| Error::io(images, e))?;
    let lbl_bytes = std::fs::read(labels).map_err(|e| Error::io(labels, e))?;
    let (rows, cols, pixels) = parse_idx_images(&img_bytes)?;
    let labels_v = parse_idx_labels(&lbl_bytes)?;
    let count = if rows * cols == 0 { 0 } else { pixels.len() / (rows * cols) };
    if count != labels_v.len() {
        return Err(Error::format(
            4,
            format!("{count} images but {} labels", labels_v.len()),
        ));
    }
    Ok(ImageDataset {
        images: pixels,
        labels: labels_v,
        rows,
        cols,
    })
}

/// Load the four standard files from `dir` and merge them into one pool.
pub fn load_mnist_pool(dir: &Path) -> Result<ImageDataset> {
    let train = load_idx(&dir.join(TRAIN_IMAGES), &dir.join(TRAIN_LABELS))?;
    let test = load_idx(&dir.join(TEST_IMAGES), &dir.join(TEST_LABELS))?;
    train.concat(&test)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_n: usize,
    pub test_n: usize,
    pub seed: u64,
}

impl SplitSpec {
    /// 60000 train / 10000 test out of the merged 70000.
    pub fn standard(seed: u64) -> Self {
        Self {
            train_n: 60_000,
            test_n: 10_000,
            seed,
        }
    }
}

/// Uniform permutation of the pool; the first `train_n` go to training and
/// the next `test_n` to testing. The pool must hold exactly
/// `train_n + test_n` examples.
pub fn random_split(pool: &ImageDataset, spec: SplitSpec) -> Result<(ImageDataset, ImageDataset)> {
    if pool.len() != spec.train_n + spec.test_n {
        return Err(Error::param(format!(
            "pool of {} cannot be split into {} + {}",
            pool.len(),
            spec.train_n,
            spec.test_n
        )));
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    let mut rng = SeededRng::new(spec.seed);
    for i in (1..order.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    Ok((
        pool.select(&order[..spec.train_n]),
        pool.select(&order[spec.train_n..]),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub units: usize,
    pub weight_stddev: f64,
    pub train_n: usize,
    pub test_n: usize,
    pub logreg: LogRegConfig,
    /// Skip the random layer and classify raw pixels.
    pub raw_pixels: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            units: 512,
            weight_stddev: 0.06,
            train_n: 60_000,
            test_n: 10_000,
            logreg: LogRegConfig::default(),
            raw_pixels: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub split_seed: u64,
    pub layer_seed: u64,
    pub accuracy: f64,
    pub iterations: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkResult {
    pub trials: Vec<TrialResult>,
    /// Mean test accuracy in `[0, 1]`.
    pub mean: f64,
    /// Sample standard deviation across trials.
    pub stddev: f64,
}

/// Run one trial: split with `mix_seed([seed, trial, 1])`, dense layer
/// seeded with `mix_seed([seed, trial, 2])`.
pub fn run_trial(pool: &ImageDataset, config: &BenchmarkConfig, seed: u64, trial: usize) -> Result<TrialResult> {
    let split_seed = mix_seed(&[seed, trial as u64, 1]);
    let layer_seed = mix_seed(&[seed, trial as u64, 2]);
    let (train, test) = random_split(
        pool,
        SplitSpec {
            train_n: config.train_n,
            test_n: config.test_n,
            seed: split_seed,
        },
    )?;
    let (train_x, test_x, dim) = if config.raw_pixels {
        (train.images, test.images, pool.pixels())
    } else {
        let mut ec = ExtractorConfig::mnist(config.units, config.weight_stddev, layer_seed);
        ec.input_h = pool.rows;
        ec.input_w = pool.cols;
        let layer = Extractor::new(ec)?;
        (
            layer.extract_dense_batch(&train.images, train.len())?,
            layer.extract_dense_batch(&test.images, test.len())?,
            config.units,
        )
    };
    let design = Design::new(&train_x, &train.labels, dim, CLASSES)?;
    let (model, report) = train_logreg(&design, &config.logreg)?;
    Ok(TrialResult {
        trial,
        split_seed,
        layer_seed,
        accuracy: model.accuracy(&test_x, &test.labels),
        iterations: report.iterations,
        loss: report.loss,
        grad_norm: report.grad_norm,
    })
}

pub fn run_benchmark(pool: &ImageDataset, config: &BenchmarkConfig, trials: usize, seed: u64) -> Result<BenchmarkResult> {
    run_benchmark_with(pool, config, trials, seed, |_| {})
}

/// [`run_benchmark`] with a callback after every finished trial.
pub fn run_benchmark_with<F: FnMut(&TrialResult)>(
    pool: &ImageDataset,
    config: &BenchmarkConfig,
    trials: usize,
    seed: u64,
    mut on_trial: F,
) -> Result<BenchmarkResult> {
    if trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    let mut results = Vec::with_capacity(trials);
    for t in 0..trials {
        let r = run_trial(pool, config, seed, t)?;
        on_trial(&r);
        results.push(r);
    }
    let acc: Vec<f64> = results.iter().map(|r| r.accuracy).collect();
    let (mean, stddev) = crate::trainer::mean_stddev(&acc);
    Ok(BenchmarkResult {
        trials: results,
        mean,
        stddev,
    })
}
