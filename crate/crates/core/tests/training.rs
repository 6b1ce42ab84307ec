use matnet_core::data::{sine_dataset, xor_dataset};
use matnet_core::gradient::{cost, cost_gradient, squared_error};
use matnet_core::network::predict;
use matnet_core::train::{
    residual_jacobian, residual_vector, train_gd, train_rootfind, train_rsm, GdConfig, RootFindConfig, RsmConfig,
    Sequential, TraceOptions,
};
use matnet_core::{Activation, LayerSpec, NetworkGains, NetworkSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn xor_spec() -> NetworkSpec {
    NetworkSpec::new(2, vec![LayerSpec::new(2, Activation::Sigmoid)], Some(1)).unwrap()
}

#[test]
fn root_finding_solves_xor_from_some_seed() {
    let spec = xor_spec();
    let data = xor_dataset();
    let solved = (0..10u64).any(|seed| {
        let init = NetworkGains::random(&spec, &mut ChaCha8Rng::seed_from_u64(seed));
        let trace = train_rootfind(
            &spec,
            &init,
            &data,
            &RootFindConfig::default(),
            &TraceOptions::default(),
        )
        .unwrap();
        data.iter()
            .all(|s| (predict(&spec, &trace.final_gains, &s.input).unwrap()[0] - s.target[0]).abs() < 1e-6)
    });
    assert!(solved);
}

#[test]
fn root_finding_never_increases_cost() {
    let spec = xor_spec();
    let data = xor_dataset();
    for seed in 0..10u64 {
        let init = NetworkGains::random(&spec, &mut ChaCha8Rng::seed_from_u64(seed));
        let trace = train_rootfind(
            &spec,
            &init,
            &data,
            &RootFindConfig::default(),
            &TraceOptions::default(),
        )
        .unwrap();
        assert!(trace.records.windows(2).all(|w| w[1].cost < w[0].cost));
    }
}

#[test]
fn xor_jacobian_is_samples_by_parameters() {
    let spec = xor_spec();
    let gains = NetworkGains::random(&spec, &mut ChaCha8Rng::seed_from_u64(0));
    let jac = residual_jacobian(&spec, &gains, &xor_dataset()).unwrap();
    assert_eq!(jac.shape(), (4, 8));
}

#[test]
fn cost_gradient_is_jacobian_transpose_times_residual() {
    let spec = NetworkSpec::new(
        1,
        vec![
            LayerSpec::new(3, Activation::Sigmoid),
            LayerSpec::new(1, Activation::Linear),
        ],
        None,
    )
    .unwrap();
    let data = sine_dataset(7).unwrap();
    let gains = NetworkGains::random(&spec, &mut ChaCha8Rng::seed_from_u64(4));
    let r = residual_vector(&spec, &gains, &data).unwrap();
    let jtr = residual_jacobian(&spec, &gains, &data).unwrap().tr_mul_vec(&r).unwrap();
    let g = cost_gradient(&spec, &gains, &data).unwrap().flatten();
    for (a, b) in g.iter().zip(&jtr) {
        assert!((a - 2.0 * b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
    let r2: f64 = r.iter().map(|v| v * v).sum();
    assert!((r2 - cost(&spec, &gains, &data, 2).unwrap().value).abs() <= 1e-12 * r2);
}

#[test]
fn all_trainers_share_the_trace_shape() {
    let spec = xor_spec();
    let data = xor_dataset();
    let init = NetworkGains::random(&spec, &mut ChaCha8Rng::seed_from_u64(8));
    let opts = TraceOptions {
        snapshots: true,
        ..Default::default()
    };
    let gd = train_gd(
        &spec,
        &init,
        &data,
        &GdConfig {
            learning_rate: 0.5,
            epochs: 7,
        },
        &opts,
    )
    .unwrap();
    let rsm_cfg = RsmConfig {
        epochs: 7,
        ..Default::default()
    };
    let rsm = train_rsm(&spec, &init, &data, &rsm_cfg, &Sequential, &opts).unwrap();
    for t in [&gd, &rsm] {
        assert_eq!(t.records.len(), 8);
        assert_eq!(t.snapshots.as_ref().unwrap().len(), 8);
        assert_eq!(t.records[0].cost, squared_error(&spec, &init, &data).unwrap());
        assert_eq!(t.snapshots.as_ref().unwrap()[0], init.flatten());
        assert_eq!(t.final_cost(), squared_error(&spec, &t.final_gains, &data).unwrap());
    }
}
