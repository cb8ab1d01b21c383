mod common;

use common::*;
use emograph::emotions::NUM_CATEGORIES;
use emograph::graph::{build_corpus_graphs, Manifest};
use emograph::{build_graph, ContextGraph, NodeKind};

/// beach with two moods and five related concepts, each of which has five
/// related concepts of its own; no label is shared anywhere.
fn beach_rows() -> String {
    let mut rows = String::from("concept,mood1,mood2,pleasantness,polarity,related\n");
    let level1: Vec<String> = (0..5).map(|i| format!("r{i}")).collect();
    rows.push_str(&format!("beach,joy,calmness,0.8,0.7,{}\n", level1.join(";")));
    for (i, r) in level1.iter().enumerate() {
        let level2: Vec<String> = (0..5).map(|j| format!("s{i}{j}")).collect();
        rows.push_str(&format!("{r},serenity,interest,0.1,{:.1},{}\n", 0.1 * i as f64, level2.join(";")));
    }
    rows
}

fn beach_cooccurrence() -> emograph::CooccurrenceModel {
    mined(&[
        nc("a", &["beach"], &[0]),
        nc("b", &["beach"], &[0]),
        nc("c", &["beach"], &[0]),
        nc("d", &["beach"], &[1]),
    ])
}

#[test]
fn single_word_census() {
    let lex = lexicon_from_rows(&beach_rows());
    let co = beach_cooccurrence();
    let g = build_graph(&nc("x", &["beach"], &[]), &co, &lex).unwrap();
    assert_eq!(g.num_nodes(), 1 + 26 + 2 + 5 + 25);
    assert_eq!(g.nodes_of(NodeKind::Emotion).count(), NUM_CATEGORIES);
    assert_eq!(g.nodes_of(NodeKind::Mood).count(), 2);
    assert_eq!(g.nodes_of(NodeKind::Related).count(), 30);
    // 26 emotion + 2 mood + 5 related + 25 second-level pairs, both directions.
    assert_eq!(g.edges.len(), 2 * (26 + 2 + 5 + 25));

    let beach = g.find(NodeKind::Word, "beach").unwrap().id;
    let emotions: Vec<f64> = g
        .nodes_of(NodeKind::Emotion)
        .map(|n| g.edge_weight(beach, n.id).unwrap())
        .collect();
    assert_eq!(emotions[0], 0.75);
    assert_eq!(emotions[1], 0.25);
    assert!(emotions[2..].iter().all(|&w| w == 0.0));

    let joy = g.find(NodeKind::Mood, "joy").unwrap().id;
    assert_eq!(g.edge_weight(beach, joy), Some(0.8));
    assert_eq!(g.edge_weight(joy, beach), Some(0.8));
    let r3 = g.find(NodeKind::Related, "r3").unwrap().id;
    assert_eq!(g.edge_weight(beach, r3), Some(0.7));
    // Second-level edges carry the first-level concept's polarity.
    let s32 = g.find(NodeKind::Related, "s32").unwrap().id;
    assert!((g.edge_weight(r3, s32).unwrap() - 0.3).abs() < 1e-15);

    for (i, n) in g.nodes.iter().enumerate() {
        assert_eq!(n.id, i);
    }
}

#[test]
fn shared_mood_merges() {
    let rows = "a,joy,calmness,0.5,0.5,x1;x2;x3;x4;x5\n\
                b,joy,anger,-0.2,0.1,y1;y2;y3;y4;y5\n";
    let lex = lexicon_from_rows(rows);
    let co = mined(&[nc("c", &["a", "b"], &[3])]);
    let g = build_graph(&nc("q", &["a", "b"], &[]), &co, &lex).unwrap();
    let joy: Vec<_> = g.nodes_of(NodeKind::Mood).filter(|n| n.label == "joy").collect();
    assert_eq!(joy.len(), 1);
    let joy = joy[0].id;
    let a = g.find(NodeKind::Word, "a").unwrap().id;
    let b = g.find(NodeKind::Word, "b").unwrap().id;
    assert_eq!(g.edge_weight(a, joy), Some(0.5));
    assert_eq!(g.edge_weight(b, joy), Some(-0.2));
    // Word-word edges exist in both directions.
    assert_eq!(g.edge_weight(a, b), Some(1.0));
    assert_eq!(g.edge_weight(b, a), Some(1.0));
}

#[test]
fn empty_when_no_word_survives() {
    let lex = lexicon_from_rows(&beach_rows());
    let co = beach_cooccurrence();
    assert!(build_graph(&nc("e", &[], &[]), &co, &lex).is_none());
    assert!(build_graph(&nc("e", &["zorblax"], &[]), &co, &lex).is_none());
}

#[test]
fn emotion_rows_are_stochastic_on_fixtures() {
    let lex = fixture_lexicon(0);
    let corpus = normalized(&fixture_captions("captions_train.jsonl"));
    let co = mined(&corpus);
    for c in &corpus {
        let Some(g) = build_graph(c, &co, &lex) else { continue };
        g.validate().unwrap();
        for w in g.nodes_of(NodeKind::Word) {
            let s: f64 = g
                .nodes_of(NodeKind::Emotion)
                .map(|e| g.edge_weight(w.id, e.id).unwrap())
                .sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
        for e in &g.edges {
            assert!(e.weight.is_finite() && (-1.0..=1.0).contains(&e.weight));
        }
    }
}

#[test]
fn json_round_trip_and_rejections() {
    let lex = lexicon_from_rows(&beach_rows());
    let g = build_graph(&nc("x", &["beach"], &[]), &beach_cooccurrence(), &lex).unwrap();
    let (back, meta) = ContextGraph::from_json(&g.to_json(None)).unwrap();
    assert_eq!(back, g);
    assert!(meta.is_none());

    let mut dangling = g.clone();
    dangling.edges[0].dst = g.num_nodes();
    assert!(ContextGraph::from_json(&dangling.to_json(None)).is_err());

    let mut hollow = g.clone();
    hollow.nodes.clear();
    assert!(ContextGraph::from_json(&hollow.to_json(None)).is_err());

    assert!(ContextGraph::from_json("{\"nodes\": [").is_err());
}

#[test]
fn corpus_build_writes_manifest() {
    let lex = lexicon_from_rows(&beach_rows());
    let co = beach_cooccurrence();
    let corpus = vec![
        nc("one", &["beach"], &[0]),
        nc("two", &[], &[1]),
        nc("three", &["r1", "beach"], &[0]),
    ];
    let dir = tempfile::tempdir().unwrap();
    let m = build_corpus_graphs(&corpus, &co, &lex, dir.path(), 2, None).unwrap();
    assert_eq!(m.built.len(), 2);
    assert_eq!(m.skipped, vec!["two".to_string()]);
    assert_eq!(Manifest::load(dir.path()).unwrap(), m);
    for p in m.graph_paths(dir.path()) {
        assert!(p.exists());
    }

    let again = tempfile::tempdir().unwrap();
    build_corpus_graphs(&corpus, &co, &lex, again.path(), 1, None).unwrap();
    for e in &m.built {
        let a = std::fs::read(dir.path().join(&e.file)).unwrap();
        let b = std::fs::read(again.path().join(&e.file)).unwrap();
        assert_eq!(a, b, "{}", e.file);
    }

    let empty = tempfile::tempdir().unwrap();
    let m = build_corpus_graphs(&[], &co, &lex, empty.path(), 1, None).unwrap();
    assert!(m.built.is_empty() && m.skipped.is_empty());
}
