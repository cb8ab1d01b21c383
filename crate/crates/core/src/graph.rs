//! Per-caption context graphs: valid words linked to emotion categories,
//! mood tags and two levels of related concepts.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::ArtifactMeta;
use crate::cooccur::CooccurrenceModel;
use crate::emotions::{category_key, NUM_CATEGORIES};
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, LexiconEntry, EMBED_DIM};
use crate::text::NormalizedCaption;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Word,
    Emotion,
    Mood,
    Related,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub label: String,
    pub feature: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextGraph {
    pub caption_id: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    caption_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<ArtifactMeta>,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl ContextGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes_of(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }

    pub fn find(&self, kind: NodeKind, label: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.kind == kind && n.label == label)
    }

    pub fn edge_weight(&self, src: usize, dst: usize) -> Option<f64> {
        self.edges
            .iter()
            .find(|e| e.src == src && e.dst == dst)
            .map(|e| e.weight)
    }

    pub fn to_json(&self, meta: Option<&ArtifactMeta>) -> String {
        let file = GraphFile {
            caption_id: self.caption_id.clone(),
            meta: meta.cloned(),
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        };
        serde_json::to_string(&file).expect("graph serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<(Self, Option<ArtifactMeta>)> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("graph file: {e}")))?;
        let graph = ContextGraph {
            caption_id: file.caption_id,
            nodes: file.nodes,
            edges: file.edges,
        };
        graph.validate()?;
        Ok((graph, file.meta))
    }

    pub fn save(&self, path: &Path, meta: Option<&ArtifactMeta>) -> Result<()> {
        fs::write(path, self.to_json(meta)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(Self, Option<ArtifactMeta>)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Structural checks shared by the parser and tests.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 && !self.edges.is_empty() {
            return Err(Error::Format("graph has edges but no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::Format(format!("node ids must be dense: found {} at position {i}", node.id)));
            }
            if node.feature.len() != EMBED_DIM {
                return Err(Error::Format(format!(
                    "node {i} feature has {} components, expected {EMBED_DIM}",
                    node.feature.len()
                )));
            }
        }
        for e in &self.edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::Format(format!(
                    "edge {} -> {} references a missing node (graph has {n})",
                    e.src, e.dst
                )));
            }
            if !e.weight.is_finite() {
                return Err(Error::Format(format!("edge {} -> {} has non-finite weight", e.src, e.dst)));
            }
        }
        Ok(())
    }
}

struct Builder<'a> {
    lex: &'a Lexicon,
    nodes: Vec<Node>,
    index: HashMap<(NodeKind, String), usize>,
    linked: HashSet<(usize, usize)>,
    edges: Vec<Edge>,
}

impl<'a> Builder<'a> {
    fn node(&mut self, kind: NodeKind, label: &str, embed_key: &str) -> usize {
        if let Some(&id) = self.index.get(&(kind, label.to_string())) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            kind,
            label: label.to_string(),
            feature: self.lex.embedding(embed_key).to_vec(),
        });
        self.index.insert((kind, label.to_string()), id);
        id
    }

    /// Adds `a -> b` and `b -> a` with the same weight, once per pair.
    fn link(&mut self, a: usize, b: usize, weight: f64) {
        if a == b || !self.linked.insert((a.min(b), a.max(b))) {
            return;
        }
        self.edges.push(Edge { src: a, dst: b, weight });
        self.edges.push(Edge { src: b, dst: a, weight });
    }

    fn attach_related(&mut self, from: usize, entry: &LexiconEntry, weight: f64) {
        for r in &entry.related {
            let id = self.node(NodeKind::Related, r, r);
            self.link(from, id, weight);
        }
    }
}

/// Builds the context graph for one caption, or `None` when no valid word
/// survives the lexicon lookup.
pub fn build_graph(
    caption: &NormalizedCaption,
    co: &CooccurrenceModel,
    lex: &Lexicon,
) -> Option<ContextGraph> {
    let mut seen = HashSet::new();
    let words: Vec<(&str, &LexiconEntry)> = caption
        .valid_words
        .iter()
        .filter(|w| seen.insert(w.as_str()))
        .filter_map(|w| lex.lookup_sentic(w).map(|e| (w.as_str(), e)))
        .collect();
    if words.is_empty() {
        return None;
    }

    let mut b = Builder {
        lex,
        nodes: Vec::new(),
        index: HashMap::new(),
        linked: HashSet::new(),
        edges: Vec::new(),
    };

    let word_ids: Vec<usize> = words
        .iter()
        .map(|(w, _)| b.node(NodeKind::Word, w, w))
        .collect();

    let emotion_ids: Vec<usize> = (0..NUM_CATEGORIES)
        .map(|c| b.node(NodeKind::Emotion, &co.emotions()[c], &category_key(c)))
        .collect();
    for (&wid, (w, _)) in word_ids.iter().zip(&words) {
        let dist = co.emotion_distribution(w);
        for (&eid, &p) in emotion_ids.iter().zip(&dist) {
            b.link(wid, eid, p);
        }
    }

    for (&wid, (_, entry)) in word_ids.iter().zip(&words) {
        for mood in &entry.mood_tags {
            let mid = b.node(NodeKind::Mood, mood, mood);
            b.link(wid, mid, entry.pleasantness);
        }
        b.attach_related(wid, entry, entry.polarity);
    }

    // Second level: the related concepts of each first-level related
    // concept, weighted by the first-level concept's own polarity.
    for (_, entry) in &words {
        for concept in &entry.related {
            let rid = b.index[&(NodeKind::Related, concept.clone())];
            if let Some(sub) = lex.lookup_sentic(concept) {
                b.attach_related(rid, sub, sub.polarity);
            }
        }
    }

    for (i, &(wi, _)) in words.iter().enumerate() {
        for (j, &(wj, _)) in words.iter().enumerate() {
            if i == j {
                continue;
            }
            let w = co.word_pair_weight(wi, wj).unwrap_or(0.0);
            if w != 0.0 {
                b.edges.push(Edge {
                    src: word_ids[i],
                    dst: word_ids[j],
                    weight: w,
                });
            }
        }
    }

    Some(ContextGraph {
        caption_id: caption.id.clone(),
        nodes: b.nodes,
        edges: b.edges,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub caption_id: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<ArtifactMeta>,
    pub built: Vec<ManifestEntry>,
    pub skipped: Vec<String>,
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE_NAME);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn graph_paths(&self, dir: &Path) -> Vec<PathBuf> {
        self.built.iter().map(|e| dir.join(&e.file)).collect()
    }
}

fn graph_file_name(position: usize, caption_id: &str) -> String {
    let safe: String = caption_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .take(48)
        .collect();
    format!("{position:06}_{safe}.json")
}

/// Writes one graph file per buildable caption plus `manifest.json`.
/// Output is identical for any thread count.
pub fn build_corpus_graphs(
    corpus: &[NormalizedCaption],
    co: &CooccurrenceModel,
    lex: &Lexicon,
    out_dir: &Path,
    threads: usize,
    meta: Option<&ArtifactMeta>,
) -> Result<Manifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let results: Vec<Result<Option<ManifestEntry>>> = pool.install(|| {
        corpus
            .par_iter()
            .enumerate()
            .map(|(pos, caption)| {
                let Some(graph) = build_graph(caption, co, lex) else {
                    return Ok(None);
                };
                let file = graph_file_name(pos, &caption.id);
                graph.save(&out_dir.join(&file), meta)?;
                Ok(Some(ManifestEntry {
                    caption_id: caption.id.clone(),
                    file,
                }))
            })
            .collect()
    });

    let mut manifest = Manifest {
        meta: meta.cloned(),
        ..Manifest::default()
    };
    for (caption, result) in corpus.iter().zip(results) {
        match result? {
            Some(entry) => manifest.built.push(entry),
            None => manifest.skipped.push(caption.id.clone()),
        }
    }
    let path = out_dir.join(Manifest::FILE_NAME);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialization is infallible");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
