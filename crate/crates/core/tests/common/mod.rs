#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use emograph::emotions::NUM_CATEGORIES;
use emograph::graph::{Edge, Node};
use emograph::lexicon::{EmbeddingTable, SenticStore, SynonymTable, EMBED_DIM};
use emograph::text::{load_captions, normalize};
use emograph::{Caption, CooccurrenceModel, ContextGraph, Lexicon, NodeKind, NormalizationConfig, NormalizedCaption};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_lexicon(seed: u64) -> Lexicon {
    let dir = fixtures();
    Lexicon::load(
        &dir.join("senticnet.csv"),
        &dir.join("synonyms.csv"),
        &dir.join("embeddings.txt"),
        seed,
    )
    .unwrap()
}

pub fn fixture_captions(name: &str) -> Vec<Caption> {
    load_captions(&fixtures().join(name), 10.0).unwrap()
}

pub fn normalized(captions: &[Caption]) -> Vec<NormalizedCaption> {
    let cfg = NormalizationConfig::default();
    captions.iter().map(|c| normalize(c, &cfg)).collect()
}

pub fn nc(id: &str, words: &[&str], labels: &[usize]) -> NormalizedCaption {
    NormalizedCaption {
        id: id.to_string(),
        valid_words: words.iter().map(|w| w.to_string()).collect(),
        labels: labels.to_vec(),
        vad: [0.5; 3],
    }
}

/// Lexicon from CSV rows with seeded-fallback embeddings only.
pub fn lexicon_from_rows(rows: &str) -> Lexicon {
    let sentic = SenticStore::parse(rows, std::path::Path::new("<test>")).unwrap();
    Lexicon::new(sentic, SynonymTable::default(), EmbeddingTable::new(HashMap::new(), 3))
}

pub fn mined(corpus: &[NormalizedCaption]) -> CooccurrenceModel {
    CooccurrenceModel::mine(corpus, 3).unwrap()
}

/// Random graph with 50-dim features and random signed edge weights, both
/// directions present for every pair.
pub fn random_graph(rng: &mut ChaCha8Rng, id: &str, max_nodes: usize) -> ContextGraph {
    let n = rng.gen_range(2..=max_nodes);
    let kinds = [NodeKind::Word, NodeKind::Emotion, NodeKind::Mood, NodeKind::Related];
    let nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            id: i,
            kind: kinds[i % 4],
            label: format!("n{i}"),
            feature: (0..EMBED_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        })
        .collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(0.3) {
                let w = rng.gen_range(-1.0..1.0);
                edges.push(Edge { src: a, dst: b, weight: w });
                edges.push(Edge { src: b, dst: a, weight: w });
            }
        }
    }
    ContextGraph {
        caption_id: id.to_string(),
        nodes,
        edges,
    }
}

pub fn permuted(g: &ContextGraph, perm: &[usize]) -> ContextGraph {
    // perm[old] = new
    let mut nodes = g.nodes.clone();
    for (old, n) in g.nodes.iter().enumerate() {
        nodes[perm[old]] = Node { id: perm[old], ..n.clone() };
    }
    let edges = g
        .edges
        .iter()
        .rev()
        .map(|e| Edge { src: perm[e.src], dst: perm[e.dst], weight: e.weight })
        .collect();
    ContextGraph {
        caption_id: g.caption_id.clone(),
        nodes,
        edges,
    }
}

/// Two disjoint copies of `g` in one graph.
pub fn duplicated(g: &ContextGraph) -> ContextGraph {
    let n = g.nodes.len();
    let mut nodes = g.nodes.clone();
    nodes.extend(g.nodes.iter().map(|x| Node { id: x.id + n, label: format!("{}#2", x.label), ..x.clone() }));
    let mut edges = g.edges.clone();
    edges.extend(g.edges.iter().map(|e| Edge { src: e.src + n, dst: e.dst + n, weight: e.weight }));
    ContextGraph {
        caption_id: g.caption_id.clone(),
        nodes,
        edges,
    }
}

pub fn max_abs_diff(a: &emograph::Prediction, b: &emograph::Prediction) -> f64 {
    a.cat
        .iter()
        .zip(&b.cat)
        .chain(a.cont.iter().zip(&b.cont))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn uniform_prior() -> [f64; NUM_CATEGORIES] {
    [1.0 / NUM_CATEGORIES as f64; NUM_CATEGORIES]
}
