//! Cross-module properties of trained models.

use approx::assert_abs_diff_eq;
use ndarray::{Array2, Array3};
use nrn_core::explain::{explain_prediction, InclusionTest};
use nrn_core::model::{Model, ModelConfig};
use nrn_core::network::{LogicBlock, Network};
use nrn_core::preprocess::{BinarizeMode, Dataset};
use nrn_core::trainer::{prune_and_sample, BanditPolicy, TrainConfig};
use nrn_core::ArchitectureConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_simple_fn((n, 4), || rng.gen_range(-3.0..3.0));
    let y = x.outer_iter().map(|r| u8::from(r[1] > 0.5 && r[3] < 1.0)).collect();
    Dataset::new(vec!["a".into(), "b".into(), "c".into(), "d".into()], x, y).unwrap()
}

fn fit(mode: BinarizeMode, epochs: usize) -> (Model, Dataset) {
    let d = data(400, 21);
    // Without binarization the network sees only the four scaled columns.
    let n_selected_features_input = if mode == BinarizeMode::None { 3 } else { 8 };
    let cfg = ModelConfig {
        binarize: mode,
        architecture: ArchitectureConfig { n_selected_features_input, ..Default::default() },
        training: TrainConfig { epochs, ..Default::default() },
        ..Default::default()
    };
    (Model::fit(&d, Some(&d), &cfg, 8, "y").unwrap().model, d)
}

#[test]
fn explanations_are_sound_and_no_longer_than_the_tree() {
    for mode in [BinarizeMode::Replace, BinarizeMode::None] {
        let (m, d) = fit(mode, 40);
        for row in d.features.outer_iter().take(120) {
            let raw = row.as_slice().unwrap();
            let trace = explain_prediction(&m.network, &m.pipeline, row, InclusionTest::default()).unwrap();
            let e = m.explain(row).unwrap();
            assert!(e.holds(raw), "{mode:?}: {e} on {raw:?}");
            assert!(e.size() <= trace.tree.leaf_count(), "{mode:?}: {e} vs {}", trace.tree);
            assert_eq!(e.confidence, trace.output);
        }
    }
}

#[test]
fn scaled_pipeline_round_trips() {
    let (m, d) = fit(BinarizeMode::None, 5);
    assert!(m.pipeline.plan.is_none());
    let back = Model::load(&m.save()).unwrap();
    let (p, q) = (m.predict(d.features.view()).unwrap(), back.predict(d.features.view()).unwrap());
    assert!(p.iter().zip(&q).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn resampling_only_touches_the_input_layer() {
    let (m, _) = fit(BinarizeMode::Replace, 3);
    let before = m.network.clone();
    let mut net = m.network;
    let policy = BanditPolicy::new(vec![0.5; net.predicates().len()], 1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let changed = prune_and_sample(&mut net, &policy, 0.5, 4.0, (0.002, 0.2), &mut rng).unwrap();
    assert!(!changed.is_empty());
    for (k, (a, b)) in before.blocks().iter().zip(net.blocks()).enumerate() {
        assert_eq!(a.shape(), b.shape(), "block {k}");
        assert_eq!(a.kind(), b.kind());
        if k > 0 {
            assert_eq!(a, b, "block {k} changed");
        }
    }
    assert_eq!(before.predicates(), net.predicates());
    for [c, o, i] in changed {
        let w = net.blocks()[0].weights()[[c, o, i]].abs();
        assert!((0.002..=0.2).contains(&w), "re-initialized weight {w}");
    }
}

#[test]
fn single_precision_network_tracks_double() {
    let (m, d) = fit(BinarizeMode::Replace, 10);
    let net = &m.network;
    let blocks: Vec<LogicBlock<f32>> = net
        .blocks()
        .iter()
        .map(|b| {
            let w: Array3<f32> = b.weights().mapv(|v| v as f32);
            let beta = b.betas().mapv(|v| v as f32);
            LogicBlock::new(b.kind(), w, beta, b.connectivity().clone()).unwrap()
        })
        .collect();
    let single = Network::<f32>::from_parts(
        net.feature_names().to_vec(),
        net.predicates().to_vec(),
        blocks,
        net.normal_form(),
    )
    .unwrap();
    let x = m.pipeline.transform(d.features.view()).unwrap();
    let p64 = net.predict(x.view()).unwrap();
    let p32 = single.predict(x.mapv(|v| v as f32).view()).unwrap();
    for (a, b) in p64.iter().zip(&p32) {
        assert_abs_diff_eq!(*a, f64::from(*b), epsilon = 1e-4);
    }
}

#[test]
fn same_seed_same_model() {
    let d = data(300, 4);
    let cfg = ModelConfig {
        architecture: ArchitectureConfig { layer_sizes: vec![6], n_layers: 3, ..Default::default() },
        training: TrainConfig { epochs: 12, ..Default::default() },
        ..Default::default()
    };
    let a = Model::fit(&d, Some(&d), &cfg, 3, "y").unwrap().model;
    let b = Model::fit(&d, Some(&d), &cfg, 3, "y").unwrap().model;
    assert_eq!(a.save(), b.save());
    let c = Model::fit(&d, Some(&d), &cfg, 4, "y").unwrap().model;
    assert_ne!(a.save(), c.save());
}
