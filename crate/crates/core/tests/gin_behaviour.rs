mod common;

use common::*;
use emograph::gin::linalg::Matrix;
use emograph::gin::{
    eval_loss, train, GraphBatch, Mode, Target, TrainSample, BN_EPS,
};
use emograph::graph::{Edge, Node};
use emograph::pipeline::Predictor;
use emograph::{
    build_graph, ContextGraph, GinModel, LossConfig, ModelConfig, NodeKind, NormalizationConfig,
    Pooling, TrainConfig,
};

const DIM: usize = 3;

/// One block, width 3, identity MLP, BN reduced to the identity in eval mode.
fn identity_model() -> GinModel {
    let cfg = ModelConfig {
        input: DIM,
        hidden: DIM,
        d_read: DIM,
        layers: 1,
        pooling: Pooling::Avg,
        readout_skip_h0: false,
    };
    let mut m = GinModel::new(cfg, 0).unwrap();
    let eye = |n: usize| {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        Matrix::from_vec(n, n, v)
    };
    let b = &mut m.params.blocks[0];
    b.eps = 0.0;
    b.mlp1.weight = eye(DIM);
    b.mlp2.weight = eye(DIM);
    m.running[0].mean = vec![0.0; DIM];
    m.running[0].var = vec![1.0 - BN_EPS; DIM];
    m
}

fn graph(features: &[[f64; DIM]], edges: &[(usize, usize, f64)]) -> ContextGraph {
    ContextGraph {
        caption_id: "g".into(),
        nodes: features
            .iter()
            .enumerate()
            .map(|(i, f)| Node {
                id: i,
                kind: NodeKind::Word,
                label: format!("w{i}"),
                feature: f.to_vec(),
            })
            .collect(),
        edges: edges
            .iter()
            .map(|&(src, dst, weight)| Edge { src, dst, weight })
            .collect(),
    }
}

fn layer_one(m: &GinModel, g: &ContextGraph) -> Vec<Vec<f64>> {
    let pass = m.forward(&GraphBatch::single(g).unwrap(), Mode::Eval).unwrap();
    let h = pass.hidden(1);
    (0..h.rows()).map(|r| h.row(r).to_vec()).collect()
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

#[test]
fn isolated_node_passes_through_relu() {
    let m = identity_model();
    let h = layer_one(&m, &graph(&[[0.5, -1.0, 2.0]], &[]));
    assert!(close(&h[0], &[0.5, 0.0, 2.0]));
}

#[test]
fn zero_weight_edge_is_inert() {
    let m = identity_model();
    let g = graph(&[[0.5, -1.0, 2.0], [3.0, 3.0, 3.0]], &[(1, 0, 0.0), (0, 1, 0.0)]);
    let h = layer_one(&m, &g);
    assert!(close(&h[0], &[0.5, 0.0, 2.0]));
    assert!(close(&h[1], &[3.0, 3.0, 3.0]));
}

#[test]
fn path_centre_sums_neighbours() {
    let m = identity_model();
    let g = graph(
        &[[1.0, 0.0, -2.0], [0.5, 0.5, 0.5], [0.25, -1.0, 4.0]],
        &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)],
    );
    let h = layer_one(&m, &g);
    assert!(close(&h[1], &[1.75, 0.0, 2.5]));
}

#[test]
fn empty_graph_and_wrong_width_are_rejected() {
    let m = identity_model();
    let empty = graph(&[], &[]);
    assert!(GraphBatch::single(&empty).is_err());
    let wide = ContextGraph {
        nodes: vec![Node {
            id: 0,
            kind: NodeKind::Word,
            label: "x".into(),
            feature: vec![0.0; DIM + 1],
        }],
        ..empty
    };
    assert!(m.predict_graph(&wide).is_err());
}

#[test]
fn outputs_are_in_range() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    let m = GinModel::new(ModelConfig::default(), 1).unwrap();
    for i in 0..10 {
        let p = m.predict_graph(&random_graph(&mut rng, &i.to_string(), 30)).unwrap();
        assert!(p.cat.iter().all(|&x| x > 0.0 && x < 1.0));
        assert!(p.cont.iter().all(|x| x.is_finite()));
    }
}

fn fixture_predictor(seed: u64) -> (Predictor, Vec<TrainSample>) {
    let lex = fixture_lexicon(seed);
    let caps = fixture_captions("captions_train.jsonl");
    let corpus = normalized(&caps);
    let co = mined(&corpus);
    let samples = corpus
        .iter()
        .filter_map(|c| {
            build_graph(c, &co, &lex).map(|graph| TrainSample {
                graph,
                target: Target::from_caption(c),
            })
        })
        .collect();
    let model = GinModel::new(ModelConfig::default(), seed).unwrap();
    (
        Predictor {
            normalization: NormalizationConfig::default(),
            cooccur: co,
            lexicon: lex,
            model,
        },
        samples,
    )
}

#[test]
fn predict_matches_forward_on_prebuilt_graph() {
    let (p, _) = fixture_predictor(0);
    let caps = fixture_captions("captions_test.jsonl");
    let preds = p.predict(&caps).unwrap();
    let cfg = NormalizationConfig::default();
    for (c, out) in caps.iter().zip(&preds) {
        let nc = emograph::text::normalize(c, &cfg);
        match build_graph(&nc, &p.cooccur, &p.lexicon) {
            Some(g) => {
                assert!(!out.degenerate);
                assert_eq!(p.model.predict_graph(&g).unwrap(), out.prediction);
            }
            None => assert!(out.degenerate),
        }
    }
    assert_eq!(p.predict(&caps).unwrap(), preds);
    assert_eq!(p.predict_parallel(&caps, 4).unwrap(), preds);

    let empty = p.predict_text("e", "a man and a woman").unwrap();
    assert!(empty.degenerate);
    assert_eq!(empty.prediction.cat, [0.5; 26]);
    assert_eq!(empty.prediction.cont, [0.5; 3]);
}

#[test]
fn training_is_deterministic_and_lr_zero_is_frozen() {
    let (p, samples) = fixture_predictor(3);
    let lc = LossConfig::new(*p.cooccur.category_prior());
    let tc = TrainConfig {
        epochs: 3,
        batch_size: 8,
        lr: 1.0,
        seed: 9,
        ..TrainConfig::default()
    };
    let run = || {
        let mut m = p.model.clone();
        let out = train(&mut m, &samples, &tc, &lc, |_, _, _| Ok(())).unwrap();
        (m, out.loss_history)
    };
    let (m1, h1) = run();
    let (m2, h2) = run();
    assert_eq!(h1, h2);
    assert_eq!(m1, m2);
    assert!(h1.iter().all(|l| *l >= 0.0));

    let mut frozen = p.model.clone();
    let zero = TrainConfig { lr: 0.0, ..tc.clone() };
    train(&mut frozen, &samples, &zero, &lc, |_, _, _| Ok(())).unwrap();
    assert_eq!(frozen.params, p.model.params);

    assert!(eval_loss(&m1, &samples, &lc).unwrap().is_finite());
    assert!(train(&mut p.model.clone(), &[], &tc, &lc, |_, _, _| Ok(())).is_err());
}

#[test]
fn checkpoint_round_trip_and_errors() {
    let (p, samples) = fixture_predictor(4);
    let lc = LossConfig::new(*p.cooccur.category_prior());
    let tc = TrainConfig { epochs: 1, lr: 1.0, ..TrainConfig::default() };
    let mut m = p.model.clone();
    let out = train(&mut m, &samples, &tc, &lc, |_, _, _| Ok(())).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    m.save_checkpoint(&path, None, Some(&out.optimizer)).unwrap();
    let ck = GinModel::load_checkpoint(&path).unwrap();
    assert_eq!(ck.model, m);
    assert_eq!(ck.optimizer.as_ref(), Some(&out.optimizer));

    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(GinModel::load_checkpoint(&path).is_err());

    let small = GinModel::new(ModelConfig { hidden: 32, ..ModelConfig::default() }, 0).unwrap();
    small.save_checkpoint(&path, None, None).unwrap();
    let err = GinModel::load_checkpoint_for(&path, &ModelConfig::default()).unwrap_err();
    assert!(matches!(err, emograph::Error::Shape(_)), "{err}");
}
