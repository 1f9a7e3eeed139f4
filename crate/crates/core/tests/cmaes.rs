mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rcrc::cmaes::{CmaEs, EigenRefresh, Generation, StrategyParams};

fn sphere(x: &[f64]) -> f64 {
    -x.iter().map(|v| v * v).sum::<f64>()
}

fn score(es: &mut CmaEs, f: impl Fn(&[f64]) -> f64) -> (Generation, f64) {
    let g = es.sample_generation().unwrap();
    let scores: Vec<f64> = g.candidates.iter().map(|c| f(c)).collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (g.with_scores(scores), best)
}

/// Generations until the best sampled value exceeds `target`, checking
/// that C stays symmetric positive definite along the way.
fn generations_to(dim: usize, target: f64, budget: u64, seed: u64) -> Option<u64> {
    let mut es = CmaEs::new(dim, 0.5, 16, seed).unwrap().with_mean(&vec![1.0; dim]).unwrap();
    for g in 0..budget {
        let (gen, best) = score(&mut es, sphere);
        if best > target {
            return Some(g + 1);
        }
        es.update(&gen).unwrap();
        assert!(es.min_eigenvalue() > 0.0);
        assert!(es.max_asymmetry() < 1e-12);
    }
    None
}

#[test]
fn sphere_five_dims_within_300_generations() {
    for seed in 0..5 {
        let g = generations_to(5, -1e-10, 300, seed).expect("no convergence");
        assert!(g < 300, "seed {seed}: {g}");
    }
}

#[test]
fn sphere_twenty_dims_within_1000_generations() {
    let g = generations_to(20, -1e-10, 1000, 0).expect("no convergence");
    assert!(g < 1000);
}

#[test]
fn samples_have_requested_moments() {
    let n = 3;
    let c = DMatrix::from_row_slice(n, n, &[2.0, 0.6, 0.0, 0.6, 1.0, -0.3, 0.0, -0.3, 0.5]);
    let mut es = CmaEs::new(n, 0.7, 50, 4).unwrap().with_mean(&[1.0, -2.0, 0.5]).unwrap();
    es.set_covariance(c.clone()).unwrap();
    let mut xs = Vec::new();
    for _ in 0..400 {
        xs.extend(es.sample_generation().unwrap().candidates);
    }
    let count = xs.len() as f64;
    let mean: Vec<f64> = (0..n).map(|i| xs.iter().map(|x| x[i]).sum::<f64>() / count).collect();
    for (m, want) in mean.iter().zip([1.0, -2.0, 0.5]) {
        assert!((m - want).abs() < 0.02, "mean {m} vs {want}");
    }
    for i in 0..n {
        for j in 0..n {
            let cov = xs.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>() / (count - 1.0);
            let want = 0.49 * c[(i, j)];
            assert!((cov - want).abs() < 0.03, "cov[{i},{j}] {cov} vs {want}");
        }
    }
}

#[test]
fn monotone_transform_of_scores_changes_nothing() {
    let mut a = CmaEs::new(6, 0.3, 10, 9).unwrap();
    let mut b = CmaEs::new(6, 0.3, 10, 9).unwrap();
    let f = |x: &[f64]| sphere(&x.iter().map(|v| v - 0.7).collect::<Vec<_>>());
    for _ in 0..40 {
        let (ga, _) = score(&mut a, f);
        let (gb, _) = score(&mut b, |x| (f(x) / 3.0).exp() - 5.0);
        assert_eq!(ga.candidates, gb.candidates);
        a.update(&ga).unwrap();
        b.update(&gb).unwrap();
    }
    assert_eq!(a.mean(), b.mean());
    assert_eq!(a.sigma(), b.sigma());
}

#[test]
fn translation_invariance() {
    let shift = [3.0, -1.0, 0.25, 8.0];
    let mut a = CmaEs::new(4, 0.4, 8, 2).unwrap();
    let mut b = CmaEs::new(4, 0.4, 8, 2).unwrap().with_mean(&shift).unwrap();
    let target = [0.5, 0.5, -0.5, 1.0];
    for _ in 0..60 {
        let (ga, _) = score(&mut a, |x| sphere(&[x[0] - target[0], x[1] - target[1], x[2] - target[2], x[3] - target[3]]));
        let (gb, _) = score(&mut b, |x| {
            let y: Vec<f64> = (0..4).map(|i| x[i] - shift[i] - target[i]).collect();
            sphere(&y)
        });
        for (ca, cb) in ga.candidates.iter().zip(&gb.candidates) {
            for i in 0..4 {
                assert!((ca[i] + shift[i] - cb[i]).abs() < 1e-9);
            }
        }
        a.update(&ga).unwrap();
        b.update(&gb).unwrap();
    }
    assert!((a.sigma() - b.sigma()).abs() < 1e-9 * a.sigma().max(1e-300));
}

#[test]
fn candidate_order_does_not_matter_without_ties() {
    // Permuting the candidate list with its scores gives the same update.
    let mut a = CmaEs::new(5, 0.5, 12, 3).unwrap();
    let mut b = a.clone();
    for _ in 0..20 {
        let (ga, _) = score(&mut a, sphere);
        let (gb, _) = score(&mut b, sphere);
        let mut cands = gb.candidates.clone();
        let mut scores = gb.scores.clone().unwrap();
        cands.reverse();
        scores.reverse();
        let gb = Generation {
            index: gb.index,
            candidates: cands,
            scores: Some(scores),
        };
        a.update(&ga).unwrap();
        b.update(&gb).unwrap();
        assert_eq!(a.mean(), b.mean());
        assert_eq!(a.covariance(), b.covariance());
    }
}

#[test]
fn sigma_stays_finite_on_a_flat_landscape() {
    let mut es = CmaEs::new(10, 0.5, 8, 1).unwrap();
    for t in 0..1000 {
        let g = es.sample_generation().unwrap();
        // Random but bounded scores: nothing to learn.
        let scores: Vec<f64> = (0..8).map(|i| ((t * 8 + i) as f64 * 0.618).fract()).collect();
        es.update(&g.with_scores(scores)).unwrap();
        assert!(es.sigma().is_finite() && es.sigma() > 0.0);
        assert!(es.min_eigenvalue() > 0.0);
    }
}

#[test]
fn snapshot_continues_identically() {
    let mut a = CmaEs::new(7, 0.5, 10, 12).unwrap().with_eigen_refresh(EigenRefresh::Lazy);
    for _ in 0..13 {
        let (g, _) = score(&mut a, sphere);
        a.update(&g).unwrap();
    }
    let mut b = CmaEs::restore(a.snapshot()).unwrap();
    for _ in 0..20 {
        let (ga, _) = score(&mut a, sphere);
        let (gb, _) = score(&mut b, sphere);
        assert_eq!(ga.candidates, gb.candidates);
        a.update(&ga).unwrap();
        b.update(&gb).unwrap();
    }
    assert_eq!(a.snapshot(), b.snapshot());
}

#[test]
fn lazy_refresh_still_solves_sphere() {
    let mut es = CmaEs::new(20, 0.5, 16, 0)
        .unwrap()
        .with_mean(&[1.0; 20])
        .unwrap()
        .with_eigen_refresh(EigenRefresh::Lazy);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (g, b) = score(&mut es, sphere);
        best = best.max(b);
        es.update(&g).unwrap();
    }
    assert!(best > -1e-10, "{best}");
}

proptest! {
    #[test]
    fn weights_are_positive_descending_and_normalized(dim in 1usize..4000, lambda in 2usize..64) {
        let p = StrategyParams::new(dim, lambda).unwrap();
        prop_assert_eq!(p.mu, lambda / 2);
        prop_assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.weights.windows(2).all(|w| w[0] > w[1]) || p.mu == 1);
        prop_assert!(p.weights.iter().all(|w| *w > 0.0));
        prop_assert!(p.c_1 + p.c_mu <= 1.0);
        prop_assert!(p.c_sigma < 1.0 && p.c_c <= 1.0);
    }

    #[test]
    fn covariance_stays_spd(seed in 0u64..200, dim in 2usize..8) {
        let mut es = CmaEs::new(dim, 1.0, 6, seed).unwrap();
        for _ in 0..30 {
            let (g, _) = score(&mut es, |x| -x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v).sum::<f64>());
            es.update(&g).unwrap();
            prop_assert!(es.min_eigenvalue() > 0.0);
            prop_assert!(es.max_asymmetry() < 1e-12);
        }
    }
}
