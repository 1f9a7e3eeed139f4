//! Echo state network driven by the visual features.
//!
//! ```text
//! candidate = tanh(W_in * x_conv + W * state)
//! state'    = (1 - alpha) * state + alpha * candidate
//! ```
//!
//! `W_in` is dense `N(0, w_in_stddev^2)`. `W` starts as `N(0, 1)`, has a fixed
//! fraction of its entries zeroed, and is rescaled to the target spectral
//! radius. Sampling order from the config seed: `W_in`, then `W`, then the
//! sparsity positions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::FeatureVector;
use crate::rng::{mix_seed, SeededRng};
use crate::tensor::{apply_sparsity, dot, gaussian_matrix, scale_to_radius, tanh, Matrix2D};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub d_in: usize,
    pub d_esn: usize,
    /// Leak rate; 1.0 means no leaky integration.
    pub leak_alpha: f64,
    pub sparsity: f64,
    pub spectral_radius_target: f64,
    pub w_in_stddev: f64,
    pub seed: u64,
}

impl ReservoirConfig {
    /// 512 units, sparsity 0.8, spectral radius 0.95, `alpha = 1`.
    pub fn reference(d_in: usize, seed: u64) -> Self {
        Self {
            d_in,
            d_esn: 512,
            leak_alpha: 1.0,
            sparsity: 0.8,
            spectral_radius_target: 0.95,
            w_in_stddev: 0.06,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d_in == 0 || self.d_esn == 0 {
            return Err(Error::config("reservoir dimensions must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.leak_alpha) {
            return Err(Error::config(format!(
                "leak rate {} outside [0, 1]",
                self.leak_alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::config(format!(
                "sparsity {} outside [0, 1]",
                self.sparsity
            )));
        }
        if !(self.spectral_radius_target > 0.0) || !self.spectral_radius_target.is_finite() {
            return Err(Error::config(format!(
                "spectral radius target {} must be > 0",
                self.spectral_radius_target
            )));
        }
        if !(self.w_in_stddev >= 0.0) || !self.w_in_stddev.is_finite() {
            return Err(Error::config("input weight stddev must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Reservoir state `X_esn(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirState {
    pub values: Vec<f64>,
    pub step: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reservoir {
    config: ReservoirConfig,
    w_in: Matrix2D,
    w: Matrix2D,
}

impl Reservoir {
    pub fn new(config: ReservoirConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::new(config.seed);
        let w_in = gaussian_matrix(config.d_esn, config.d_in, 0.0, config.w_in_stddev, &mut rng)?;
        let raw = gaussian_matrix(config.d_esn, config.d_esn, 0.0, 1.0, &mut rng)?;
        let sparse = apply_sparsity(&raw, config.sparsity, &mut rng)?;
        let w = scale_to_radius(&sparse, config.spectral_radius_target).map_err(|e| match e {
            Error::Degenerate(msg) => Error::config(format!("recurrent matrix unusable: {msg}")),
            other => other,
        })?;
        Ok(Self { config, w_in, w })
    }

    /// Use explicit matrices instead of sampling them. No rescaling happens.
    pub fn from_weights(config: ReservoirConfig, w_in: Matrix2D, w: Matrix2D) -> Result<Self> {
        if !(0.0..=1.0).contains(&config.leak_alpha) {
            return Err(Error::config(format!(
                "leak rate {} outside [0, 1]",
                config.leak_alpha
            )));
        }
        if w_in.rows() != config.d_esn || w_in.cols() != config.d_in {
            return Err(Error::dim(format!(
                "W_in is {}x{}, expected {}x{}",
                w_in.rows(),
                w_in.cols(),
                config.d_esn,
                config.d_in
            )));
        }
        if w.rows() != config.d_esn || w.cols() != config.d_esn {
            return Err(Error::dim(format!(
                "W is {}x{}, expected {}x{}",
                w.rows(),
                w.cols(),
                config.d_esn,
                config.d_esn
            )));
        }
        Ok(Self { config, w_in, w })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    pub fn input_weights(&self) -> &Matrix2D {
        &self.w_in
    }

    pub fn recurrent_weights(&self) -> &Matrix2D {
        &self.w
    }

    pub fn d_esn(&self) -> usize {
        self.config.d_esn
    }

    pub fn reset(&self) -> ReservoirState {
        ReservoirState {
            values: vec![0.0; self.config.d_esn],
            step: 0,
        }
    }

    pub fn update(&self, state: &ReservoirState, x_conv: &FeatureVector) -> Result<ReservoirState> {
        let mut next = state.clone();
        self.update_in_place(&mut next, x_conv.as_slice())?;
        Ok(next)
    }

    pub fn update_in_place(&self, state: &mut ReservoirState, x_conv: &[f64]) -> Result<()> {
        if x_conv.len() != self.config.d_in {
            return Err(Error::dim(format!(
                "reservoir input has {} entries, expected {}",
                x_conv.len(),
                self.config.d_in
            )));
        }
        if state.values.len() != self.config.d_esn {
            return Err(Error::dim(format!(
                "reservoir state has {} entries, expected {}",
                state.values.len(),
                self.config.d_esn
            )));
        }
        let alpha = self.config.leak_alpha;
        let candidate: Vec<f64> = (0..self.config.d_esn)
            .map(|i| tanh(dot(self.w_in.row(i), x_conv) + dot(self.w.row(i), &state.values)))
            .collect();
        for (s, c) in state.values.iter_mut().zip(candidate) {
            *s = (1.0 - alpha) * *s + alpha * c;
        }
        state.step += 1;
        Ok(())
    }

    /// Drive two copies of the reservoir from `a` and `b` with the same inputs
    /// for `horizon` steps (inputs are cycled) and return the Euclidean
    /// distance between the final states.
    pub fn echo_state_distance(
        &self,
        a: &ReservoirState,
        b: &ReservoirState,
        inputs: &[FeatureVector],
        horizon: usize,
    ) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::param("echo state check needs at least one input"));
        }
        if horizon == 0 {
            return Err(Error::param("echo state horizon must be >= 1"));
        }
        let (mut a, mut b) = (a.clone(), b.clone());
        for t in 0..horizon {
            let x = inputs[t % inputs.len()].as_slice();
            self.update_in_place(&mut a, x)?;
            self.update_in_place(&mut b, x)?;
        }
        Ok(a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt())
    }

    /// Washout diagnostic: two initial states drawn uniformly from
    /// `[-1, 1]^d` (seeded from the config seed) driven by the same inputs.
    pub fn echo_state_check(&self, inputs: &[FeatureVector], horizon: usize) -> Result<f64> {
        let mut rng = SeededRng::new(mix_seed(&[self.config.seed, 0xEC40]));
        let mut draw = || ReservoirState {
            values: (0..self.config.d_esn)
                .map(|_| rng.uniform_range(-1.0, 1.0))
                .collect(),
            step: 0,
        };
        let a = draw();
        let b = draw();
        self.echo_state_distance(&a, &b, inputs, horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(alpha: f64) -> Reservoir {
        Reservoir::new(ReservoirConfig {
            d_in: 6,
            d_esn: 20,
            leak_alpha: alpha,
            sparsity: 0.8,
            spectral_radius_target: 0.95,
            w_in_stddev: 0.5,
            seed: 3,
        })
        .unwrap()
    }

    fn input(seed: u64, n: usize) -> FeatureVector {
        let mut rng = SeededRng::new(seed);
        FeatureVector::new((0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect())
    }

    #[test]
    fn reset_is_zero_and_zero_input_is_a_fixed_point() {
        let r = small(1.0);
        let s0 = r.reset();
        assert!(s0.values.iter().all(|v| *v == 0.0));
        assert_eq!(s0, r.reset());
        let s1 = r.update(&s0, &FeatureVector::new(vec![0.0; 6])).unwrap();
        assert!(s1.values.iter().all(|v| *v == 0.0));
        assert_eq!(s1.step, 1);
    }

    #[test]
    fn alpha_edges() {
        let x = input(1, 6);
        let frozen = small(0.0);
        let mut s = frozen.reset();
        s.values.iter_mut().enumerate().for_each(|(i, v)| *v = 0.01 * i as f64);
        let next = frozen.update(&s, &x).unwrap();
        assert_eq!(next.values, s.values);

        let full = small(1.0);
        let next = full.update(&s, &x).unwrap();
        for i in 0..20 {
            let pre = dot(full.input_weights().row(i), x.as_slice())
                + dot(full.recurrent_weights().row(i), &s.values);
            assert_eq!(next.values[i], tanh(pre));
        }
    }

    #[test]
    fn dimension_errors() {
        let r = small(1.0);
        assert!(matches!(
            r.update(&r.reset(), &FeatureVector::new(vec![0.0; 5])),
            Err(Error::Dimension(_))
        ));
        let bad = ReservoirState {
            values: vec![0.0; 3],
            step: 0,
        };
        assert!(r.update(&bad, &input(2, 6)).is_err());
    }

    #[test]
    fn full_sparsity_is_a_configuration_error() {
        let cfg = ReservoirConfig {
            sparsity: 1.0,
            ..ReservoirConfig::reference(4, 1)
        };
        assert!(matches!(Reservoir::new(cfg), Err(Error::Configuration(_))));
        let cfg = ReservoirConfig {
            leak_alpha: 1.5,
            ..ReservoirConfig::reference(4, 1)
        };
        assert!(Reservoir::new(cfg).is_err());
    }

    #[test]
    fn echo_state_edges() {
        let r = small(1.0);
        let inputs = vec![input(4, 6), input(5, 6)];
        let s = r.reset();
        assert_eq!(r.echo_state_distance(&s, &s, &inputs, 10).unwrap(), 0.0);
        assert!(r.echo_state_check(&[], 10).is_err());
        assert!(r.echo_state_check(&inputs, 0).is_err());

        // No recurrence: the state after one step depends on the input only.
        let cfg = r.config().clone();
        let no_rec = Reservoir::from_weights(
            cfg.clone(),
            r.input_weights().clone(),
            Matrix2D::zeros(cfg.d_esn, cfg.d_esn),
        )
        .unwrap();
        assert_eq!(no_rec.echo_state_check(&inputs, 1).unwrap(), 0.0);
    }

    #[test]
    fn states_stay_in_open_unit_interval() {
        let r = small(1.0);
        let mut s = r.reset();
        for t in 0..50 {
            let mut x = input(100 + t, 6).into_vec();
            x.iter_mut().for_each(|v| *v *= 5.0);
            r.update_in_place(&mut s, &x).unwrap();
            assert!(s.values.iter().all(|v| v.abs() < 1.0));
        }
    }
}
