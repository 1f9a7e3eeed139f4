//! Train briefly, checkpoint, then load the checkpoint to evaluate on fresh
//! tracks and replay one of them frame by frame.

use rcrc::trainer::{evaluate, replay, train, ModelVariant, RunCheckpoint, RunConfig, CHECKPOINT_FILE};

fn main() -> rcrc::Result<()> {
    let dir = std::path::PathBuf::from("runs/evaluate_replay");
    let mut cfg = RunConfig::desk(ModelVariant::Visual, 3);
    cfg.max_generations = 5;
    cfg.output_dir = Some(dir.clone());
    train(cfg)?;

    let ckpt = RunCheckpoint::load(&dir.join(CHECKPOINT_FILE))?;
    println!("checkpoint after {} generations", ckpt.history.len());

    let summary = evaluate(&ckpt, 8, 1)?;
    println!("evaluation over 8 tracks: {summary}");

    let r = replay(&ckpt, 42, &dir.join("replay"))?;
    println!(
        "replay on track 42: score {:.1}, {} frames, {}/{} tiles, {:?}",
        r.score, r.frames, r.tiles_visited, r.tile_count, r.done_reason
    );
    Ok(())
}
