//! Linear readout from features to squashed actions.
//!
//! `S(t) = [x_conv; x_esn; 1]` (or `[x_conv; 1]` without a reservoir),
//! `A~ = W_out S`, then per action:
//!
//! * steer = `tanh(A~_1)` in `[-1, 1]`
//! * accel = `(tanh(A~_2) + 1) / 2` in `[0, 1]`
//! * brake = `clip(tanh(A~_3), 0, 1)`
//!
//! The flat parameter vector searched by CMA-ES is `W_out` row-major: all
//! inputs of the steering row, then accelerator, then brake.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::FeatureVector;
use crate::reservoir::ReservoirState;
use crate::tensor::{dot, tanh, Matrix2D};

pub const N_ACTIONS: usize = 3;

/// Which feature blocks feed the controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputLayout {
    pub d_conv: usize,
    /// Zero when the agent has no reservoir.
    pub d_esn: usize,
}

impl InputLayout {
    pub fn with_reservoir(d_conv: usize, d_esn: usize) -> Self {
        Self { d_conv, d_esn }
    }

    pub fn features_only(d_conv: usize) -> Self {
        Self { d_conv, d_esn: 0 }
    }

    /// Length of `S(t)`, bias included.
    pub fn input_len(&self) -> usize {
        self.d_conv + self.d_esn + 1
    }

    /// Number of trainable parameters.
    pub fn param_count(&self) -> usize {
        N_ACTIONS * self.input_len()
    }
}

/// Controller input vector `S(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerInput(Vec<f64>);

impl ControllerInput {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for ControllerInput {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub fn assemble_input(
    layout: &InputLayout,
    x_conv: &FeatureVector,
    x_esn: Option<&ReservoirState>,
) -> Result<ControllerInput> {
    let mut s = Vec::with_capacity(layout.input_len());
    assemble_into(layout, x_conv.as_slice(), x_esn.map(|r| r.values.as_slice()), &mut s)?;
    Ok(ControllerInput(s))
}

pub(crate) fn assemble_into(
    layout: &InputLayout,
    x_conv: &[f64],
    x_esn: Option<&[f64]>,
    out: &mut Vec<f64>,
) -> Result<()> {
    if x_conv.len() != layout.d_conv {
        return Err(Error::dim(format!(
            "controller expects {} visual features, got {}",
            layout.d_conv,
            x_conv.len()
        )));
    }
    out.clear();
    out.extend_from_slice(x_conv);
    match (layout.d_esn, x_esn) {
        (0, None) => {}
        (0, Some(_)) => {
            return Err(Error::dim("reservoir state given to a feature-only controller"))
        }
        (d, Some(esn)) if esn.len() == d => out.extend_from_slice(esn),
        (d, Some(esn)) => {
            return Err(Error::dim(format!(
                "controller expects {d} reservoir values, got {}",
                esn.len()
            )))
        }
        (d, None) => return Err(Error::dim(format!("controller expects {d} reservoir values"))),
    }
    out.push(1.0);
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionVector {
    pub steer: f64,
    pub accel: f64,
    pub brake: f64,
}

impl ActionVector {
    pub const NEUTRAL: ActionVector = ActionVector {
        steer: 0.0,
        accel: 0.0,
        brake: 0.0,
    };

    pub fn new(steer: f64, accel: f64, brake: f64) -> Self {
        Self {
            steer,
            accel,
            brake,
        }
    }

    pub fn in_range(&self) -> bool {
        (-1.0..=1.0).contains(&self.steer)
            && (0.0..=1.0).contains(&self.accel)
            && (0.0..=1.0).contains(&self.brake)
    }

    /// Squash raw controller outputs into the action ranges.
    pub fn squash(raw: [f64; N_ACTIONS]) -> Self {
        Self {
            steer: tanh(raw[0]),
            accel: (tanh(raw[1]) + 1.0) / 2.0,
            brake: tanh(raw[2]).clamp(0.0, 1.0),
        }
    }
}

/// `W_out`, shape `N_ACTIONS x input_len`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerWeights {
    w_out: Matrix2D,
}

impl ControllerWeights {
    pub fn zeros(layout: &InputLayout) -> Self {
        Self {
            w_out: Matrix2D::zeros(N_ACTIONS, layout.input_len()),
        }
    }

    pub fn from_matrix(w_out: Matrix2D) -> Result<Self> {
        if w_out.rows() != N_ACTIONS {
            return Err(Error::dim(format!(
                "controller needs {N_ACTIONS} rows, got {}",
                w_out.rows()
            )));
        }
        if !w_out.is_finite() {
            return Err(Error::param("controller weights must be finite"));
        }
        Ok(Self { w_out })
    }

    pub fn matrix(&self) -> &Matrix2D {
        &self.w_out
    }

    pub fn input_len(&self) -> usize {
        self.w_out.cols()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.w_out.as_slice().to_vec()
    }

    pub fn unflatten(layout: &InputLayout, v: &[f64]) -> Result<Self> {
        if v.len() != layout.param_count() {
            return Err(Error::dim(format!(
                "{} parameters for a controller that needs {}",
                v.len(),
                layout.param_count()
            )));
        }
        Self::from_matrix(Matrix2D::from_vec(N_ACTIONS, layout.input_len(), v.to_vec())?)
    }

    /// Pre-squash outputs `A~ = W_out S`.
    pub fn raw_outputs(&self, s: &[f64]) -> Result<[f64; N_ACTIONS]> {
        if s.len() != self.w_out.cols() {
            return Err(Error::dim(format!(
                "controller input has {} entries, weights expect {}",
                s.len(),
                self.w_out.cols()
            )));
        }
        let mut out = [0.0; N_ACTIONS];
        for (a, o) in out.iter_mut().enumerate() {
            *o = dot(self.w_out.row(a), s);
        }
        Ok(out)
    }

    pub fn act(&self, s: &ControllerInput) -> Result<ActionVector> {
        self.raw_outputs(s.as_slice()).map(ActionVector::squash)
    }
}
