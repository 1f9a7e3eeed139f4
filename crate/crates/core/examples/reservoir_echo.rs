//! Build the reference 512-unit reservoir and watch two different initial
//! states forget where they started.

use rcrc::extractor::FeatureVector;
use rcrc::reservoir::{Reservoir, ReservoirConfig, ReservoirState};
use rcrc::rng::SeededRng;
use rcrc::tensor::{spectral_radius, DEFAULT_MAX_ITERS, DEFAULT_TOL};

fn main() -> rcrc::Result<()> {
    let d_in = 128;
    let res = Reservoir::new(ReservoirConfig::reference(d_in, 1))?;
    let w = res.recurrent_weights();
    let n = w.rows() * w.cols();
    println!(
        "W: {}x{}, {:.3} zero, spectral radius {:.6}",
        w.rows(),
        w.cols(),
        w.count_zeros() as f64 / n as f64,
        spectral_radius(w, DEFAULT_TOL, DEFAULT_MAX_ITERS)?
    );

    let mut rng = SeededRng::new(2);
    let inputs: Vec<FeatureVector> = (0..200)
        .map(|_| FeatureVector::new((0..d_in).map(|_| rng.uniform_range(-1.0, 1.0)).collect()))
        .collect();
    let mut a = res.reset();
    let mut b = ReservoirState {
        values: (0..res.d_esn()).map(|_| rng.uniform_range(-1.0, 1.0)).collect(),
        step: 0,
    };
    for (t, x) in inputs.iter().enumerate() {
        res.update_in_place(&mut a, x.as_slice())?;
        res.update_in_place(&mut b, x.as_slice())?;
        if (t + 1) % 25 == 0 {
            let d: f64 = a.values.iter().zip(&b.values).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            println!("step {:3}: |a - b| = {d:.3e}", t + 1);
        }
    }
    Ok(())
}
