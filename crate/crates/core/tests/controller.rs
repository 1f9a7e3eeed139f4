mod common;

use common::*;
use proptest::prelude::*;
use rcrc::controller::*;
use rcrc::extractor::FeatureVector;
use rcrc::reservoir::ReservoirState;

#[test]
fn reference_parameter_counts() {
    assert_eq!(InputLayout::with_reservoir(512, 512).param_count(), 3075);
    assert_eq!(InputLayout::features_only(512).param_count(), 1539);
}

#[test]
fn act_matches_scalar_formula() {
    let layout = InputLayout::with_reservoir(5, 4);
    let w = ControllerWeights::unflatten(&layout, &random_vec(layout.param_count(), -2.0, 2.0, 1)).unwrap();
    let x = FeatureVector::new(random_vec(5, -1.0, 1.0, 2));
    let esn = ReservoirState {
        values: random_vec(4, -1.0, 1.0, 3),
        step: 0,
    };
    let s = assemble_input(&layout, &x, Some(&esn)).unwrap();
    let mut full = x.as_slice().to_vec();
    full.extend(&esn.values);
    full.push(1.0);
    assert_eq!(s.as_slice(), full.as_slice());

    let raw = naive_matvec(w.matrix(), &full);
    let a = w.act(&s).unwrap();
    assert!((a.steer - raw[0].tanh()).abs() < 1e-12);
    assert!((a.accel - (raw[1].tanh() + 1.0) / 2.0).abs() < 1e-12);
    assert!((a.brake - raw[2].tanh().max(0.0)).abs() < 1e-12);
}

#[test]
fn zero_weights_give_half_throttle() {
    let layout = InputLayout::features_only(3);
    let a = ControllerWeights::zeros(&layout)
        .act(&assemble_input(&layout, &FeatureVector::new(vec![0.3; 3]), None).unwrap())
        .unwrap();
    assert_eq!(a, ActionVector::new(0.0, 0.5, 0.0));
}

#[test]
fn layout_mismatches_are_rejected() {
    let layout = InputLayout::with_reservoir(3, 2);
    let x = FeatureVector::new(vec![0.0; 3]);
    assert!(assemble_input(&layout, &x, None).is_err());
    assert!(assemble_input(&InputLayout::features_only(3), &x, Some(&ReservoirState { values: vec![0.0; 2], step: 0 })).is_err());
    assert!(ControllerWeights::unflatten(&layout, &[0.0; 17]).is_err());
    assert!(ControllerWeights::unflatten(&layout, &[f64::NAN; 18]).is_err());
}

proptest! {
    #[test]
    fn flatten_roundtrips(d_conv in 1usize..20, d_esn in 0usize..20, seed in 0u64..1000) {
        let layout = InputLayout::with_reservoir(d_conv, d_esn);
        let v = random_vec(layout.param_count(), -5.0, 5.0, seed);
        let w = ControllerWeights::unflatten(&layout, &v).unwrap();
        prop_assert_eq!(w.flatten(), v.clone());
        // Row-major: entry (a, j) sits at a * input_len + j.
        let n = layout.input_len();
        prop_assert_eq!(w.matrix().get(2, n - 1), v[2 * n + n - 1]);
    }

    #[test]
    fn actions_always_in_range(raw in prop::array::uniform3(-1e6f64..1e6)) {
        prop_assert!(ActionVector::squash(raw).in_range());
    }
}
