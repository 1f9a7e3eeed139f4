//! Covariance matrix adaptation evolution strategy, maximizing.
//!
//! Strategy parameters follow the standard defaults for dimension `n` and
//! population `lambda` (all positive recombination weights, no active update):
//!
//! ```text
//! mu       = floor(lambda / 2)
//! w'_i     = ln((lambda + 1) / 2) - ln(i),  i = 1..mu;   w_i = w'_i / sum(w')
//! mu_eff   = 1 / sum(w_i^2)
//! c_sigma  = (mu_eff + 2) / (n + mu_eff + 5)
//! d_sigma  = 1 + 2 max(0, sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma
//! c_c      = (4 + mu_eff / n) / (n + 4 + 2 mu_eff / n)
//! c_1      = 2 / ((n + 1.3)^2 + mu_eff)
//! c_mu     = min(1 - c_1, 2 (mu_eff - 2 + 1 / mu_eff) / ((n + 2)^2 + mu_eff))
//! chi_n    = sqrt(n) (1 - 1 / (4n) + 1 / (21 n^2))      ~ E||N(0, I)||
//! ```
//!
//! One generation, with `y_i = (x_(i) - m) / sigma` for the `mu` best
//! candidates (ranked by score, highest first, ties by candidate index):
//!
//! ```text
//! y_w      = sum w_i y_i
//! m       <- m + sigma y_w
//! p_sigma <- (1 - c_sigma) p_sigma + sqrt(c_sigma (2 - c_sigma) mu_eff) C^{-1/2} y_w
//! h_sigma  = ||p_sigma|| / sqrt(1 - (1 - c_sigma)^(2 (g + 1))) < (1.4 + 2 / (n + 1)) chi_n
//! p_c     <- (1 - c_c) p_c + h_sigma sqrt(c_c (2 - c_c) mu_eff) y_w
//! C       <- (1 + c_1 (1 - h_sigma) c_c (2 - c_c) - c_1 - c_mu) C
//!            + c_1 p_c p_c^T + c_mu sum w_i y_i y_i^T
//! sigma   <- sigma exp((c_sigma / d_sigma) (||p_sigma|| / chi_n - 1))
//! ```

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RngState, SeededRng};

/// Relative floor applied to covariance eigenvalues by [`CmaEs::repair_covariance`].
pub const EIGEN_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub dim: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
}

impl StrategyParams {
    pub fn new(dim: usize, lambda: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("CMA-ES dimension must be >= 1"));
        }
        if lambda < 2 {
            return Err(Error::param(format!("population size {lambda} < 2")));
        }
        let n = dim as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

        Ok(Self {
            dim,
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        })
    }

    /// Generations between eigendecompositions in lazy mode:
    /// `ceil(1 / (10 n (c_1 + c_mu)))`.
    pub fn lazy_eigen_interval(&self) -> u64 {
        (1.0 / (10.0 * self.dim as f64 * (self.c_1 + self.c_mu))).ceil().max(1.0) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenRefresh {
    #[default]
    EveryGeneration,
    Lazy,
}

/// One batch of candidates and, after evaluation, their scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Generation {
    /// Value of the generation counter when the batch was sampled.
    pub index: u64,
    pub candidates: Vec<Vec<f64>>,
    pub scores: Option<Vec<f64>>,
}

impl Generation {
    pub fn with_scores(mut self, scores: Vec<f64>) -> Self {
        self.scores = Some(scores);
        self
    }
}

#[derive(Clone, Debug)]
pub struct CmaEs {
    params: StrategyParams,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    generation: u64,
    eigen_vectors: DMatrix<f64>,
    eigen_values: DVector<f64>,
    eigen_generation: u64,
    eigen_refresh: EigenRefresh,
    rng: SeededRng,
}

impl CmaEs {
    /// Zero mean, identity covariance, zero evolution paths.
    pub fn new(dim: usize, sigma0: f64, lambda: usize, seed: u64) -> Result<Self> {
        let params = StrategyParams::new(dim, lambda)?;
        if !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(Error::param(format!("sigma0 {sigma0} must be > 0")));
        }
        Ok(Self {
            params,
            mean: DVector::zeros(dim),
            sigma: sigma0,
            cov: DMatrix::identity(dim, dim),
            p_sigma: DVector::zeros(dim),
            p_c: DVector::zeros(dim),
            generation: 0,
            eigen_vectors: DMatrix::identity(dim, dim),
            eigen_values: DVector::from_element(dim, 1.0),
            eigen_generation: 0,
            eigen_refresh: EigenRefresh::EveryGeneration,
            rng: SeededRng::new(seed),
        })
    }

    pub fn with_mean(mut self, mean: &[f64]) -> Result<Self> {
        if mean.len() != self.params.dim {
            return Err(Error::dim(format!(
                "mean of length {} for dimension {}",
                mean.len(),
                self.params.dim
            )));
        }
        self.mean = DVector::from_column_slice(mean);
        Ok(self)
    }

    pub fn with_eigen_refresh(mut self, refresh: EigenRefresh) -> Self {
        self.eigen_refresh = refresh;
        self
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn lambda(&self) -> usize {
        self.params.lambda
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn p_sigma(&self) -> &[f64] {
        self.p_sigma.as_slice()
    }

    pub fn p_c(&self) -> &[f64] {
        self.p_c.as_slice()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Replace the covariance. Used by tests and the repair examples; the
    /// eigendecomposition is recomputed on the next sample.
    pub fn set_covariance(&mut self, cov: DMatrix<f64>) -> Result<()> {
        if cov.nrows() != self.params.dim || cov.ncols() != self.params.dim {
            return Err(Error::dim("covariance shape does not match dimension"));
        }
        self.cov = cov;
        self.refresh_eigen()?;
        Ok(())
    }

    pub fn set_sigma(&mut self, sigma: f64) -> Result<()> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::param(format!("sigma {sigma} must be > 0")));
        }
        self.sigma = sigma;
        Ok(())
    }

    /// Draw `lambda` candidates `m + sigma B diag(sqrt(d)) z`.
    pub fn sample_generation(&mut self) -> Result<Generation> {
        let n = self.params.dim;
        let scale = self.eigen_values.map(f64::sqrt);
        let mut candidates = Vec::with_capacity(self.params.lambda);
        let mut z = DVector::zeros(n);
        let mut y = DVector::zeros(n);
        for _ in 0..self.params.lambda {
            for i in 0..n {
                z[i] = self.rng.standard_normal() * scale[i];
            }
            y.gemv(1.0, &self.eigen_vectors, &z, 0.0);
            let x: Vec<f64> = (0..n).map(|i| self.mean[i] + self.sigma * y[i]).collect();
            candidates.push(x);
        }
        Ok(Generation {
            index: self.generation,
            candidates,
            scores: None,
        })
    }

    /// Rank the scored candidates (maximizing) and adapt mean, paths, step
    /// size and covariance.
    pub fn update(&mut self, generation: &Generation) -> Result<()> {
        let p = &self.params;
        let n = p.dim;
        if generation.index != self.generation {
            return Err(Error::Usage(format!(
                "generation {} handed to optimizer at generation {}",
                generation.index, self.generation
            )));
        }
        if generation.candidates.len() != p.lambda {
            return Err(Error::dim(format!(
                "{} candidates for population {}",
                generation.candidates.len(),
                p.lambda
            )));
        }
        let scores = generation
            .scores
            .as_ref()
            .ok_or_else(|| Error::Usage("generation has not been scored".into()))?;
        if scores.len() != p.lambda {
            return Err(Error::dim(format!(
                "{} scores for population {}",
                scores.len(),
                p.lambda
            )));
        }
        for (i, (s, c)) in scores.iter().zip(&generation.candidates).enumerate() {
            if !s.is_finite() {
                return Err(Error::Evaluation {
                    candidate: i,
                    reason: format!("score {s}"),
                });
            }
            if c.len() != n {
                return Err(Error::dim(format!("candidate {i} has length {}", c.len())));
            }
        }

        let mut order: Vec<usize> = (0..p.lambda).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

        let ys: Vec<DVector<f64>> = order[..p.mu]
            .iter()
            .map(|&i| {
                DVector::from_iterator(
                    n,
                    generation.candidates[i]
                        .iter()
                        .zip(self.mean.iter())
                        .map(|(x, m)| (x - m) / self.sigma),
                )
            })
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in p.weights.iter().zip(&ys) {
            y_w.axpy(*w, y, 1.0);
        }

        self.mean.axpy(self.sigma, &y_w, 1.0);

        // C^{-1/2} y_w = B diag(1 / sqrt(d)) B^T y_w
        let mut tmp = self.eigen_vectors.tr_mul(&y_w);
        for i in 0..n {
            tmp[i] /= self.eigen_values[i].sqrt();
        }
        let c_inv_sqrt_yw = &self.eigen_vectors * tmp;

        let cs = p.c_sigma;
        self.p_sigma *= 1.0 - cs;
        self.p_sigma
            .axpy((cs * (2.0 - cs) * p.mu_eff).sqrt(), &c_inv_sqrt_yw, 1.0);
        let ps_norm = self.p_sigma.norm();

        let g = self.generation as f64;
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powf(2.0 * (g + 1.0))).sqrt()
            < (1.4 + 2.0 / (n as f64 + 1.0)) * p.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };

        let cc = p.c_c;
        self.p_c *= 1.0 - cc;
        self.p_c.axpy(h * (cc * (2.0 - cc) * p.mu_eff).sqrt(), &y_w, 1.0);

        let delta_h = (1.0 - h) * cc * (2.0 - cc);
        let decay = 1.0 + p.c_1 * delta_h - p.c_1 - p.c_mu;
        self.cov *= decay;
        self.cov.ger(p.c_1, &self.p_c, &self.p_c, 1.0);
        for (w, y) in p.weights.iter().zip(&ys) {
            self.cov.ger(p.c_mu * w, y, y, 1.0);
        }

        self.sigma *= ((cs / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Numerical(format!("step size became {}", self.sigma)));
        }
        self.generation += 1;

        let due = match self.eigen_refresh {
            EigenRefresh::EveryGeneration => true,
            EigenRefresh::Lazy => {
                self.generation - self.eigen_generation >= self.params.lazy_eigen_interval()
            }
        };
        if due {
            self.refresh_eigen()?;
        }
        Ok(())
    }

    /// Symmetrize `C` and floor its eigenvalues at `EIGEN_FLOOR * max`.
    /// `C` is only rebuilt when some eigenvalue actually had to be raised.
    pub fn repair_covariance(&mut self) -> Result<()> {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        self.cov = sym;
        let eig = SymmetricEigen::new(self.cov.clone());
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("covariance has non-finite eigenvalues".into()));
        }
        let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Err(Error::Numerical(format!(
                "covariance has no positive eigenvalue (max {max})"
            )));
        }
        let floor = EIGEN_FLOOR * max;
        let mut values = eig.eigenvalues.clone();
        let mut changed = false;
        for v in values.iter_mut() {
            if *v < floor {
                *v = floor;
                changed = true;
            }
        }
        if changed {
            let b = &eig.eigenvectors;
            let rebuilt = b * DMatrix::from_diagonal(&values) * b.transpose();
            self.cov = (&rebuilt + rebuilt.transpose()) * 0.5;
        }
        self.eigen_vectors = eig.eigenvectors;
        self.eigen_values = values;
        self.eigen_generation = self.generation;
        Ok(())
    }

    fn refresh_eigen(&mut self) -> Result<()> {
        let eig = SymmetricEigen::new(self.cov.clone());
        let healthy = eig.eigenvalues.iter().all(|v| v.is_finite() && *v > 0.0);
        if healthy {
            self.eigen_vectors = eig.eigenvectors;
            self.eigen_values = eig.eigenvalues;
            self.eigen_generation = self.generation;
            Ok(())
        } else {
            self.repair_covariance()
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.cov.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.params.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.cov[(i, j)] - self.cov[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn snapshot(&self) -> CmaSnapshot {
        CmaSnapshot {
            params: self.params.clone(),
            sigma: self.sigma,
            generation: self.generation,
            eigen_generation: self.eigen_generation,
            eigen_refresh: self.eigen_refresh,
            rng: self.rng.state(),
            mean: self.mean.as_slice().to_vec(),
            cov: self.cov.as_slice().to_vec(),
            p_sigma: self.p_sigma.as_slice().to_vec(),
            p_c: self.p_c.as_slice().to_vec(),
            eigen_vectors: self.eigen_vectors.as_slice().to_vec(),
            eigen_values: self.eigen_values.as_slice().to_vec(),
        }
    }

    pub fn restore(s: CmaSnapshot) -> Result<Self> {
        let n = s.params.dim;
        let expected = StrategyParams::new(n, s.params.lambda)?;
        if expected != s.params {
            return Err(Error::format(0, "stored CMA-ES strategy parameters do not match defaults"));
        }
        let check = |name: &str, v: &[f64], len: usize| {
            if v.len() == len {
                Ok(())
            } else {
                Err(Error::dim(format!("{name} has {} values, expected {len}", v.len())))
            }
        };
        check("mean", &s.mean, n)?;
        check("cov", &s.cov, n * n)?;
        check("p_sigma", &s.p_sigma, n)?;
        check("p_c", &s.p_c, n)?;
        check("eigen_vectors", &s.eigen_vectors, n * n)?;
        check("eigen_values", &s.eigen_values, n)?;
        Ok(Self {
            params: s.params,
            mean: DVector::from_vec(s.mean),
            sigma: s.sigma,
            cov: DMatrix::from_vec(n, n, s.cov),
            p_sigma: DVector::from_vec(s.p_sigma),
            p_c: DVector::from_vec(s.p_c),
            generation: s.generation,
            eigen_vectors: DMatrix::from_vec(n, n, s.eigen_vectors),
            eigen_values: DVector::from_vec(s.eigen_values),
            eigen_generation: s.eigen_generation,
            eigen_refresh: s.eigen_refresh,
            rng: SeededRng::from_state(&s.rng),
        })
    }
}

/// Complete optimizer state. Matrices are column-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmaSnapshot {
    pub params: StrategyParams,
    pub sigma: f64,
    pub generation: u64,
    pub eigen_generation: u64,
    pub eigen_refresh: EigenRefresh,
    pub rng: RngState,
    #[serde(skip)]
    pub mean: Vec<f64>,
    #[serde(skip)]
    pub cov: Vec<f64>,
    #[serde(skip)]
    pub p_sigma: Vec<f64>,
    #[serde(skip)]
    pub p_c: Vec<f64>,
    #[serde(skip)]
    pub eigen_vectors: Vec<f64>,
    #[serde(skip)]
    pub eigen_values: Vec<f64>,
}
