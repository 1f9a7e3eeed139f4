//! Maximize f(x) = -||x||^2 in 20 dimensions with the ask/tell interface.

use rcrc::cmaes::CmaEs;

fn main() -> rcrc::Result<()> {
    let dim = 20;
    let mut es = CmaEs::new(dim, 0.5, 16, 7)?.with_mean(&vec![1.0; dim])?;

    for g in 0.. {
        let batch = es.sample_generation()?;
        let scores: Vec<f64> = batch
            .candidates
            .iter()
            .map(|x| -x.iter().map(|v| v * v).sum::<f64>())
            .collect();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if g % 25 == 0 || best > -1e-10 {
            println!("generation {g:4}  best {best:.3e}  sigma {:.3e}", es.sigma());
        }
        if best > -1e-10 {
            break;
        }
        es.update(&batch.with_scores(scores))?;
    }
    println!("min eigenvalue of C: {:.3e}", es.min_eigenvalue());
    Ok(())
}
