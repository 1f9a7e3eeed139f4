//! Random dense features plus logistic regression on MNIST.
//!
//! With the four IDX files in `$MNIST_DIR` (or `data/mnist`) this runs a few
//! trials of the full 60000/10000 benchmark; otherwise it falls back to the
//! 1000-image fixture shipped with the tests.

use std::path::PathBuf;

use rcrc::mnist::{load_idx, load_mnist_pool, run_benchmark_with, BenchmarkConfig};

fn main() -> rcrc::Result<()> {
    let dir = std::env::var_os("MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data/mnist"));
    let (pool, config, trials) = if dir.join(rcrc::mnist::TRAIN_IMAGES).is_file() {
        (load_mnist_pool(&dir)?, BenchmarkConfig::default(), 3)
    } else {
        let fx = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data");
        println!("no MNIST in {}; using the 1000-image fixture", dir.display());
        let pool = load_idx(&fx.join("mnist-1k-images-idx3-ubyte"), &fx.join("mnist-1k-labels-idx1-ubyte"))?;
        let config = BenchmarkConfig {
            train_n: 800,
            test_n: 200,
            ..BenchmarkConfig::default()
        };
        (pool, config, 5)
    };
    println!(
        "{} images, {} train / {} test, {} random units",
        pool.len(),
        config.train_n,
        config.test_n,
        config.units
    );
    let r = run_benchmark_with(&pool, &config, trials, 0, |t| {
        println!(
            "trial {}: {:.2}% ({} L-BFGS iterations, |grad| {:.1e})",
            t.trial,
            100.0 * t.accuracy,
            t.iterations,
            t.grad_norm
        );
    })?;
    println!("mean {:.2}% +- {:.2}", 100.0 * r.mean, 100.0 * r.stddev);
    Ok(())
}
