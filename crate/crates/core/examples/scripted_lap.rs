//! Drive a generated track with the pure-pursuit pilot and save a few
//! frames as PNG.
//!
//! ```text
//! cargo run --release --example scripted_lap -- [track_seed] [out_dir]
//! ```

use std::path::PathBuf;

use rcrc::racer::{write_png, EnvConfig, PurePursuit, RacerEnv};

fn main() -> rcrc::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/scripted_lap".into()));
    std::fs::create_dir_all(&out).map_err(|e| rcrc::Error::Io { path: out.clone(), source: e })?;

    let cfg = EnvConfig {
        max_frames: 1000,
        ..EnvConfig::desk()
    };
    let mut env = RacerEnv::with_seed(cfg, seed)?;
    let track = env.track();
    println!(
        "track {seed}: {} tiles, {:.0} units long, {} retries",
        track.tile_count(),
        track.length(),
        track.retries
    );

    let mut pilot = PurePursuit::new(4, 35.0);
    write_png(&env.render(), &out.join("frame_00000.png"))?;
    loop {
        let action = pilot.act(env.track(), env.car(), &env.config().car);
        let (frame, step) = env.step(&action)?;
        let s = env.status();
        if s.frame % 100 == 0 {
            write_png(&frame, &out.join(format!("frame_{:05}.png", s.frame)))?;
            println!(
                "frame {:4}: {:3}/{} tiles, speed {:5.1}, reward {:7.1}",
                s.frame,
                s.visited_count,
                s.visited.len(),
                env.car().speed,
                s.cumulative_reward
            );
        }
        if step.done {
            break;
        }
    }
    let s = env.status();
    println!("{:?} after {} frames, score {:.1}", s.done.unwrap(), s.frame, s.cumulative_reward);
    println!("frames in {}", out.display());
    Ok(())
}
