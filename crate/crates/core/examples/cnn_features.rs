//! Render a racer frame, downsample it and push it through the fixed random
//! CNN, printing the activation shapes along the way.

use rcrc::extractor::{Extractor, ExtractorConfig, ExtractorVariant};
use rcrc::racer::{EnvConfig, RacerEnv};
use rcrc::tensor::{bilinear_resize, conv2d_forward, tanh_in_place};

fn main() -> rcrc::Result<()> {
    let env = RacerEnv::with_seed(EnvConfig::reference(), 3)?;
    let frame = env.render();
    let ex = Extractor::new(ExtractorConfig::reference(ExtractorVariant::Cnn, 11))?;
    let cfg = ex.config();
    let small = bilinear_resize(&frame, cfg.input_h, cfg.input_w)?;
    println!("frame {:?} -> input {:?}", frame.shape(), small.shape());

    let mut x = small.clone();
    for (i, (bank, &stride)) in ex.conv_layers().iter().zip(&cfg.strides).enumerate() {
        x = conv2d_forward(&x, bank, stride, cfg.padding)?;
        tanh_in_place(x.as_mut_slice());
        println!("conv {} ({}x{}, stride {stride}): {:?}", i + 1, bank.size, bank.size, x.shape());
    }

    let features = ex.extract(&small)?;
    let v = features.as_slice();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
    println!("x_conv: {} values, mean {mean:.4}, range [{lo:.4}, {hi:.4}]", v.len());
    Ok(())
}
