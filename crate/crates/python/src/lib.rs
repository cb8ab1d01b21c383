//! Python module `emograph`.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use emograph::emotions::CATEGORIES;
use emograph::gin::{train, Target, TrainSample};
use emograph::pipeline::Predictor;
use emograph::text::{normalize_text, tokenize as tokenize_text};
use emograph::{
    build_graph, ContextGraph, CooccurrenceModel, GinModel, Lexicon, LossConfig, ModelConfig,
    NormalizationConfig, NormalizedCaption, Pooling, Prediction, TrainConfig,
};

fn err(e: emograph::Error) -> PyErr {
    match e {
        emograph::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        emograph::Error::NonFinite { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn prediction_dict<'py>(py: Python<'py>, p: &Prediction) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scores", p.cat.to_vec())?;
    d.set_item("vad", p.cont.to_vec())?;
    Ok(d)
}

/// Lowercased alphabetic tokens.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    tokenize_text(text)
}

/// Valid words of `text` under the bundled stop-word, banned-noun and
/// lemma lists.
#[pyfunction]
fn normalize(text: &str) -> Vec<String> {
    normalize_text(text, &NormalizationConfig::default())
}

#[pyfunction]
fn categories() -> Vec<&'static str> {
    CATEGORIES.to_vec()
}

/// Non-interpolated average precision; `None` without positives.
#[pyfunction]
fn average_precision(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<Option<f64>> {
    emograph::eval::average_precision(&scores, &labels).map_err(err)
}

/// Per-category AP and mAP for rows of 26 scores against label lists.
#[pyfunction]
fn evaluate<'py>(py: Python<'py>, scores: Vec<Vec<f64>>, targets: Vec<Vec<usize>>) -> PyResult<Bound<'py, PyDict>> {
    let preds = scores
        .into_iter()
        .map(|row| {
            let cat = row
                .try_into()
                .map_err(|r: Vec<f64>| PyValueError::new_err(format!("expected 26 scores, got {}", r.len())))?;
            Ok(Prediction { cat, cont: [0.5; 3] })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let r = emograph::eval::evaluate(&preds, &targets).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("map", r.map)?;
    d.set_item("per_category_ap", r.per_category_ap)?;
    d.set_item("excluded", r.excluded)?;
    d.set_item("n_samples", r.n_samples)?;
    Ok(d)
}

#[pyclass(name = "Lexicon", module = "emograph", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLexicon {
    inner: Lexicon,
}

#[pymethods]
impl PyLexicon {
    #[new]
    #[pyo3(signature = (sentic, synonyms, embeddings, seed = 0))]
    fn new(sentic: PathBuf, synonyms: PathBuf, embeddings: PathBuf, seed: u64) -> PyResult<Self> {
        Ok(PyLexicon {
            inner: Lexicon::load(&sentic, &synonyms, &embeddings, seed).map_err(err)?,
        })
    }

    /// The entry used for `word` (its own or a synonym's), or `None`.
    fn lookup<'py>(&self, py: Python<'py>, word: &str) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Some(e) = self.inner.lookup_sentic(word) else {
            return Ok(None);
        };
        let d = PyDict::new(py);
        d.set_item("concept", &e.concept)?;
        d.set_item("mood_tags", e.mood_tags.to_vec())?;
        d.set_item("pleasantness", e.pleasantness)?;
        d.set_item("polarity", e.polarity)?;
        d.set_item("related", e.related.to_vec())?;
        Ok(Some(d))
    }

    fn embedding(&self, word: &str) -> Vec<f64> {
        self.inner.embedding(word).to_vec()
    }

    fn ranked_synonyms(&self, word: &str) -> Vec<(String, f64)> {
        self.inner
            .ranked_synonyms(word)
            .into_iter()
            .map(|(w, s)| (w.to_string(), s))
            .collect()
    }
}

#[pyclass(name = "CooccurrenceModel", module = "emograph", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCooccurrence {
    inner: CooccurrenceModel,
}

#[pymethods]
impl PyCooccurrence {
    /// Mines counts from `(valid_words, labels)` pairs.
    #[staticmethod]
    #[pyo3(signature = (corpus, window = 3))]
    fn mine(corpus: Vec<(Vec<String>, Vec<usize>)>, window: usize) -> PyResult<Self> {
        let corpus: Vec<NormalizedCaption> = corpus
            .into_iter()
            .enumerate()
            .map(|(i, (valid_words, labels))| NormalizedCaption {
                id: i.to_string(),
                valid_words,
                labels,
                vad: [0.5; 3],
            })
            .collect();
        Ok(PyCooccurrence {
            inner: CooccurrenceModel::mine(&corpus, window).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyCooccurrence {
            inner: CooccurrenceModel::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn vocab(&self) -> Vec<String> {
        self.inner.vocab().to_vec()
    }

    #[getter]
    fn window(&self) -> usize {
        self.inner.window()
    }

    #[getter]
    fn category_prior(&self) -> Vec<f64> {
        self.inner.category_prior().to_vec()
    }

    fn emotion_distribution(&self, word: &str) -> Vec<f64> {
        self.inner.emotion_distribution(word).to_vec()
    }

    fn word_pair_weight(&self, src: &str, dst: &str) -> PyResult<f64> {
        self.inner.word_pair_weight(src, dst).map_err(err)
    }
}

#[pyclass(name = "ContextGraph", module = "emograph", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: ContextGraph,
}

#[pymethods]
impl PyGraph {
    /// Graph for a list of valid words, or `None` when none survives.
    #[staticmethod]
    #[pyo3(signature = (words, cooccur, lexicon, caption_id = String::new()))]
    fn build(words: Vec<String>, cooccur: &PyCooccurrence, lexicon: &PyLexicon, caption_id: String) -> Option<Self> {
        let nc = NormalizedCaption {
            id: caption_id,
            valid_words: words,
            labels: vec![],
            vad: [0.5; 3],
        };
        build_graph(&nc, &cooccur.inner, &lexicon.inner).map(|inner| PyGraph { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyGraph {
            inner: ContextGraph::from_json(text).map_err(err)?.0,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json(None)
    }

    #[getter]
    fn caption_id(&self) -> String {
        self.inner.caption_id.clone()
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    /// `(id, kind, label)` per node.
    #[getter]
    fn nodes(&self) -> Vec<(usize, String, String)> {
        self.inner
            .nodes
            .iter()
            .map(|n| {
                let kind = kind_name(n.kind);
                (n.id, kind, n.label.clone())
            })
            .collect()
    }

    /// `(src, dst, weight)` per directed edge.
    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges.iter().map(|e| (e.src, e.dst, e.weight)).collect()
    }
}

fn kind_name(kind: emograph::NodeKind) -> String {
    match kind {
        emograph::NodeKind::Word => "word",
        emograph::NodeKind::Emotion => "emotion",
        emograph::NodeKind::Mood => "mood",
        emograph::NodeKind::Related => "related",
    }
    .to_string()
}

#[pyclass(name = "GinModel", module = "emograph", skip_from_py_object)]
#[derive(Clone)]
struct PyGin {
    inner: GinModel,
}

#[pymethods]
impl PyGin {
    #[new]
    #[pyo3(signature = (seed = 0, hidden = 64, d_read = 64, layers = 5, pooling = "avg", readout_skip_h0 = false))]
    fn new(seed: u64, hidden: usize, d_read: usize, layers: usize, pooling: &str, readout_skip_h0: bool) -> PyResult<Self> {
        let pooling: Pooling = pooling.parse().map_err(err)?;
        let cfg = ModelConfig {
            hidden,
            d_read,
            layers,
            pooling,
            readout_skip_h0,
            ..ModelConfig::default()
        };
        Ok(PyGin {
            inner: GinModel::new(cfg, seed).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyGin {
            inner: GinModel::load_checkpoint(&path).map_err(err)?.model,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_checkpoint(&path, None, None).map_err(err)
    }

    #[getter]
    fn pooling(&self) -> String {
        self.inner.config.pooling.to_string()
    }

    /// Eval-mode prediction: `{"scores": [26], "vad": [3]}`.
    fn predict<'py>(&self, py: Python<'py>, graph: &PyGraph) -> PyResult<Bound<'py, PyDict>> {
        let p = self.inner.predict_graph(&graph.inner).map_err(err)?;
        prediction_dict(py, &p)
    }

    /// Trains in place and returns the per-epoch mean loss.
    #[pyo3(signature = (graphs, labels, vad, category_prior, epochs = 50, batch_size = 16, lr = 0.001, weight_decay = 0.0004, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &mut self,
        py: Python<'_>,
        graphs: Vec<PyRef<'_, PyGraph>>,
        labels: Vec<Vec<usize>>,
        vad: Vec<[f64; 3]>,
        category_prior: [f64; 26],
        epochs: usize,
        batch_size: usize,
        lr: f64,
        weight_decay: f64,
        seed: u64,
    ) -> PyResult<Vec<f64>> {
        if graphs.len() != labels.len() || graphs.len() != vad.len() {
            return Err(PyValueError::new_err("graphs, labels and vad must have equal length"));
        }
        let data: Vec<TrainSample> = graphs
            .iter()
            .zip(labels.iter().zip(&vad))
            .map(|(g, (l, v))| {
                let mut cat = [0.0; 26];
                for &i in l {
                    if i >= 26 {
                        return Err(PyValueError::new_err(format!("label {i} out of range")));
                    }
                    cat[i] = 1.0;
                }
                Ok(TrainSample {
                    graph: g.inner.clone(),
                    target: Target { cat, cont: *v },
                })
            })
            .collect::<PyResult<_>>()?;
        let tc = TrainConfig {
            epochs,
            batch_size,
            lr,
            weight_decay,
            seed,
            ..TrainConfig::default()
        };
        let lc = LossConfig::new(category_prior);
        let model = &mut self.inner;
        let out = py
            .detach(|| train(model, &data, &tc, &lc, |_, _, _| Ok(())))
            .map_err(err)?;
        Ok(out.loss_history)
    }
}

#[pyclass(name = "Predictor", module = "emograph", frozen, skip_from_py_object)]
struct PyPredictor {
    inner: Predictor,
}

#[pymethods]
impl PyPredictor {
    #[new]
    fn new(cooccur: &PyCooccurrence, lexicon: &PyLexicon, model: &PyGin) -> Self {
        PyPredictor {
            inner: Predictor {
                normalization: NormalizationConfig::default(),
                cooccur: cooccur.inner.clone(),
                lexicon: lexicon.inner.clone(),
                model: model.inner.clone(),
            },
        }
    }

    /// Full pipeline on raw caption text.
    #[pyo3(signature = (text, top_k = 3))]
    fn predict<'py>(&self, py: Python<'py>, text: &str, top_k: usize) -> PyResult<Bound<'py, PyDict>> {
        let p = self.inner.predict_text("", text).map_err(err)?;
        let d = prediction_dict(py, &p.prediction)?;
        d.set_item("top", p.top_k(top_k))?;
        d.set_item("degenerate", p.degenerate)?;
        Ok(d)
    }
}

#[pymodule]
#[pyo3(name = "emograph")]
fn emograph_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(categories, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_class::<PyLexicon>()?;
    m.add_class::<PyCooccurrence>()?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyGin>()?;
    m.add_class::<PyPredictor>()?;
    m.add("__version__", emograph::artifact::TOOL_VERSION)?;
    Ok(())
}
