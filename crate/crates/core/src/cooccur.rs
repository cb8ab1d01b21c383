//! Word/emotion and word/word co-occurrence statistics mined from a
//! normalized training corpus.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::ArtifactMeta;
use crate::emotions::{self, NUM_CATEGORIES};
use crate::error::{Error, Result};
use crate::text::NormalizedCaption;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceModel {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    emotions: Vec<String>,
    /// W x C word/emotion counts.
    m_c: Vec<[u64; NUM_CATEGORIES]>,
    /// Sparse symmetric W x W word/word counts, zero diagonal.
    m_w: Vec<BTreeMap<usize, u64>>,
    word_total: Vec<u64>,
    window: usize,
    category_prior: [f64; NUM_CATEGORIES],
}

impl CooccurrenceModel {
    /// Counts, for every caption, each (valid-word occurrence, label) pair
    /// and each pair of distinct words whose positions are at most
    /// `window - 1` apart.
    pub fn mine(corpus: &[NormalizedCaption], window: usize) -> Result<Self> {
        if window < 1 {
            return Err(Error::Domain("co-occurrence window must be >= 1".into()));
        }
        if corpus.is_empty() {
            return Err(Error::Domain("cannot mine an empty corpus".into()));
        }
        let mut model = CooccurrenceModel {
            vocab: Vec::new(),
            index: HashMap::new(),
            emotions: emotions::default_names(),
            m_c: Vec::new(),
            m_w: Vec::new(),
            word_total: Vec::new(),
            window,
            category_prior: [0.0; NUM_CATEGORIES],
        };
        let mut label_counts = [0u64; NUM_CATEGORIES];

        for caption in corpus {
            for &l in &caption.labels {
                if l >= NUM_CATEGORIES {
                    return Err(Error::Domain(format!(
                        "caption {}: label index {l} out of range",
                        caption.id
                    )));
                }
                label_counts[l] += 1;
            }
            let ids: Vec<usize> = caption
                .valid_words
                .iter()
                .map(|w| model.intern(w))
                .collect();
            for &w in &ids {
                model.word_total[w] += 1;
                for &l in &caption.labels {
                    model.m_c[w][l] += 1;
                }
            }
            for (i, &a) in ids.iter().enumerate() {
                for &b in ids.iter().skip(i + 1).take(window - 1) {
                    if a != b {
                        *model.m_w[a].entry(b).or_default() += 1;
                        *model.m_w[b].entry(a).or_default() += 1;
                    }
                }
            }
        }

        let n = corpus.len() as f64;
        for (p, &c) in model.category_prior.iter_mut().zip(&label_counts) {
            *p = c as f64 / n;
        }
        Ok(model)
    }

    fn intern(&mut self, word: &str) -> usize {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        let i = self.vocab.len();
        self.vocab.push(word.to_string());
        self.index.insert(word.to_string(), i);
        self.m_c.push([0; NUM_CATEGORIES]);
        self.m_w.push(BTreeMap::new());
        self.word_total.push(0);
        i
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn emotions(&self) -> &[String] {
        &self.emotions
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn category_prior(&self) -> &[f64; NUM_CATEGORIES] {
        &self.category_prior
    }

    pub fn word_index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word_total(&self, word: &str) -> Option<u64> {
        self.word_index(word).map(|i| self.word_total[i])
    }

    pub fn emotion_counts(&self, word: &str) -> Option<&[u64; NUM_CATEGORIES]> {
        self.word_index(word).map(|i| &self.m_c[i])
    }

    pub fn pair_count(&self, a: &str, b: &str) -> Option<u64> {
        let (i, j) = (self.word_index(a)?, self.word_index(b)?);
        Some(self.m_w[i].get(&j).copied().unwrap_or(0))
    }

    /// Neighbours of `word` with non-zero pair counts, in index order.
    pub fn neighbours(&self, word: &str) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.word_index(word)
            .into_iter()
            .flat_map(move |i| self.m_w[i].iter())
            .map(move |(&j, &c)| (self.vocab[j].as_str(), c))
    }

    /// P(category | word) from the emotion co-occurrence row. Unseen words,
    /// and words whose row is all zero, get the uniform distribution.
    pub fn emotion_distribution(&self, word: &str) -> [f64; NUM_CATEGORIES] {
        if let Some(row) = self.emotion_counts(word) {
            let total: u64 = row.iter().sum();
            if total > 0 {
                let total = total as f64;
                return row.map(|c| c as f64 / total);
            }
        }
        [1.0 / NUM_CATEGORIES as f64; NUM_CATEGORIES]
    }

    /// Pair count normalized by the total occurrences of `src`, so the
    /// weight depends on direction.
    pub fn word_pair_weight(&self, src: &str, dst: &str) -> Result<f64> {
        let i = self
            .word_index(src)
            .ok_or_else(|| Error::Lookup(format!("word {src:?} not in vocabulary")))?;
        let j = self
            .word_index(dst)
            .ok_or_else(|| Error::Lookup(format!("word {dst:?} not in vocabulary")))?;
        let total = self.word_total[i];
        if total == 0 {
            return Ok(0.0);
        }
        Ok(self.m_w[i].get(&j).copied().unwrap_or(0) as f64 / total as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.save_with_meta(path, None)
    }

    pub fn save_with_meta(&self, path: &Path, meta: Option<&ArtifactMeta>) -> Result<()> {
        let text = self.to_json(meta)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn to_json(&self, meta: Option<&ArtifactMeta>) -> Result<String> {
        let mut m_c = Vec::new();
        for (i, row) in self.m_c.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c > 0 {
                    m_c.push([i as u64, j as u64, c]);
                }
            }
        }
        let m_w = self
            .m_w
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |(&j, &c)| [i as u64, j as u64, c]))
            .collect();
        let file = CooccurFile {
            version: FORMAT_VERSION,
            meta: meta.cloned(),
            window: self.window,
            vocab: self.vocab.clone(),
            emotions: self.emotions.clone(),
            word_total: self.word_total.clone(),
            category_prior: self.category_prior.to_vec(),
            m_c,
            m_w,
        };
        serde_json::to_string(&file).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with_meta(path).map(|(m, _)| m)
    }

    pub fn load_with_meta(path: &Path) -> Result<(Self, Option<ArtifactMeta>)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<(Self, Option<ArtifactMeta>)> {
        if text.trim().is_empty() {
            return Err(Error::Format("empty co-occurrence file".into()));
        }
        let header: VersionProbe =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("co-occurrence file: {e}")))?;
        if header.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported co-occurrence file version {} (expected {FORMAT_VERSION})",
                header.version
            )));
        }
        let file: CooccurFile =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("co-occurrence file: {e}")))?;
        let model = Self::from_file(file.clone())?;
        Ok((model, file.meta))
    }

    fn from_file(file: CooccurFile) -> Result<Self> {
        let w = file.vocab.len();
        let bad = |msg: String| Error::Format(msg);
        if file.window < 1 {
            return Err(bad("window must be >= 1".into()));
        }
        if file.emotions.len() != NUM_CATEGORIES {
            return Err(bad(format!(
                "expected {NUM_CATEGORIES} emotions, found {}",
                file.emotions.len()
            )));
        }
        if file.word_total.len() != w {
            return Err(bad(format!("word_total has {} entries for {w} words", file.word_total.len())));
        }
        let category_prior: [f64; NUM_CATEGORIES] = file
            .category_prior
            .as_slice()
            .try_into()
            .map_err(|_| bad("category_prior must have 26 entries".into()))?;
        if category_prior.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(bad("category_prior entries must lie in [0, 1]".into()));
        }
        let mut index = HashMap::with_capacity(w);
        for (i, word) in file.vocab.iter().enumerate() {
            if index.insert(word.clone(), i).is_some() {
                return Err(bad(format!("duplicate vocabulary entry {word:?}")));
            }
        }
        let mut m_c = vec![[0u64; NUM_CATEGORIES]; w];
        for &[i, j, c] in &file.m_c {
            let (i, j) = (i as usize, j as usize);
            if i >= w || j >= NUM_CATEGORIES {
                return Err(bad(format!("m_c entry ({i}, {j}) out of range")));
            }
            m_c[i][j] = c;
        }
        let mut m_w = vec![BTreeMap::new(); w];
        for &[i, j, c] in &file.m_w {
            let (i, j) = (i as usize, j as usize);
            if i >= w || j >= w || i == j {
                return Err(bad(format!("m_w entry ({i}, {j}) invalid")));
            }
            if c > 0 {
                m_w[i].insert(j, c);
            }
        }
        for (i, row) in m_w.iter().enumerate() {
            for (&j, &c) in row {
                if m_w[j].get(&i) != Some(&c) {
                    return Err(bad(format!("m_w not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(CooccurrenceModel {
            vocab: file.vocab,
            index,
            emotions: file.emotions,
            m_c,
            m_w,
            word_total: file.word_total,
            window: file.window,
            category_prior,
        })
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CooccurFile {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<ArtifactMeta>,
    window: usize,
    vocab: Vec<String>,
    emotions: Vec<String>,
    word_total: Vec<u64>,
    category_prior: Vec<f64>,
    m_c: Vec<[u64; 3]>,
    m_w: Vec<[u64; 3]>,
}
