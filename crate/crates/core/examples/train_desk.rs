//! Train the full model on the desk-scale task and print the learning
//! curve. Logs and checkpoints go to `runs/train_desk`.
//!
//! ```text
//! cargo run --release --example train_desk -- [variant] [generations]
//! ```

use rcrc::trainer::{ModelVariant, RunConfig, Trainer};

fn main() -> rcrc::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut args = std::env::args().skip(1);
    let variant: ModelVariant = args.next().map(|v| v.parse()).transpose()?.unwrap_or(ModelVariant::Full);
    let generations: u64 = args.next().and_then(|g| g.parse().ok()).unwrap_or(10);

    let mut cfg = RunConfig::desk(variant, 0);
    cfg.max_generations = generations;
    cfg.output_dir = Some("runs/train_desk".into());

    let mut trainer = Trainer::new(cfg)?;
    println!(
        "{} model, {} parameters, population {}, {} episodes each",
        variant.name(),
        trainer.agent().layout().param_count(),
        trainer.config().lambda,
        trainer.config().m_episodes
    );
    while trainer.generation() < generations {
        let r = trainer.step()?;
        let s = &r.stats;
        println!(
            "gen {:3}  best {:7.1}  mean {:7.1}  worst {:7.1}  sigma {:.4}  {:.1}s",
            s.generation, s.best, s.mean, s.worst, s.sigma, s.wall_time
        );
    }
    let ckpt = trainer.checkpoint();
    ckpt.save(&std::path::Path::new("runs/train_desk").join(rcrc::trainer::CHECKPOINT_FILE))?;
    if let Some(b) = &ckpt.best {
        println!("best candidate {:.1} from generation {}", b.score, b.generation);
    }
    Ok(())
}
