//! Sentic attributes, synonym fallback and word embeddings backed by
//! plain-text files.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const EMBED_DIM: usize = 50;
pub const FALLBACK_RANGE: f64 = 0.01;

pub type Embedding = [f64; EMBED_DIM];

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub concept: String,
    pub mood_tags: [String; 2],
    pub pleasantness: f64,
    pub polarity: f64,
    pub related: [String; 5],
}

#[derive(Debug, Clone, Default)]
pub struct SenticStore {
    entries: HashMap<String, LexiconEntry>,
}

impl SenticStore {
    pub fn from_entries(entries: impl IntoIterator<Item = LexiconEntry>) -> Self {
        SenticStore {
            entries: entries.into_iter().map(|e| (e.concept.clone(), e)).collect(),
        }
    }

    pub fn get(&self, concept: &str) -> Option<&LexiconEntry> {
        self.entries.get(concept)
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.entries.contains_key(concept)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `concept,mood1,mood2,pleasantness,polarity,rel1;rel2;rel3;rel4;rel5`
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?, path)
    }

    pub fn parse(src: &str, path: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        for (lineno, line) in data_lines(src) {
            if entries.is_empty() && line.starts_with("concept,") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 6 {
                return Err(Error::parse(path, lineno, format!("expected 6 columns, found {}", cols.len())));
            }
            let pleasantness = sentic_value(cols[3], "pleasantness", path, lineno)?;
            let polarity = sentic_value(cols[4], "polarity", path, lineno)?;
            let related: Vec<String> = cols[5].split(';').map(|s| s.trim().to_lowercase()).collect();
            let related: [String; 5] = related.try_into().map_err(|v: Vec<String>| {
                Error::parse(path, lineno, format!("expected 5 related concepts, found {}", v.len()))
            })?;
            if cols[0].is_empty() || cols[1].is_empty() || cols[2].is_empty() || related.iter().any(String::is_empty) {
                return Err(Error::parse(path, lineno, "empty concept, mood tag or related concept"));
            }
            let concept = cols[0].to_lowercase();
            entries.insert(
                concept.clone(),
                LexiconEntry {
                    concept,
                    mood_tags: [cols[1].to_lowercase(), cols[2].to_lowercase()],
                    pleasantness,
                    polarity,
                    related,
                },
            );
        }
        Ok(SenticStore { entries })
    }
}

fn sentic_value(raw: &str, what: &str, path: &Path, lineno: usize) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::parse(path, lineno, format!("{what} {raw:?} is not a number")))?;
    if !(-1.0..=1.0).contains(&v) {
        return Err(Error::parse(path, lineno, format!("{what} {v} outside [-1, 1]")));
    }
    Ok(v)
}

#[derive(Debug, Clone, Default)]
pub struct SynonymTable {
    map: HashMap<String, Vec<String>>,
}

impl SynonymTable {
    pub fn insert(&mut self, word: &str, candidates: impl IntoIterator<Item = String>) {
        let list = self.map.entry(word.to_string()).or_default();
        for c in candidates {
            if c != word && !list.contains(&c) {
                list.push(c);
            }
        }
    }

    pub fn get(&self, word: &str) -> &[String] {
        self.map.get(word).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `word,syn1;syn2;...`
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?, path)
    }

    pub fn parse(src: &str, path: &Path) -> Result<Self> {
        let mut table = SynonymTable::default();
        for (lineno, line) in data_lines(src) {
            let Some((word, rest)) = line.split_once(',') else {
                return Err(Error::parse(path, lineno, "expected `word,syn1;syn2;...`"));
            };
            if rest.contains(',') {
                return Err(Error::parse(path, lineno, "expected 2 columns"));
            }
            let word = word.trim().to_lowercase();
            if word.is_empty() {
                return Err(Error::parse(path, lineno, "empty word"));
            }
            let syns = rest
                .split(';')
                .map(|s| s.trim().to_lowercase())
                .filter(|s| !s.is_empty());
            table.insert(&word, syns);
        }
        Ok(table)
    }
}

/// Stored vectors plus a seeded fallback for words without one. A fallback
/// depends only on `(seed, word)` and is cached on first use.
#[derive(Debug)]
pub struct EmbeddingTable {
    vectors: HashMap<String, Embedding>,
    seed: u64,
    cache: Mutex<HashMap<String, Embedding>>,
}

impl Clone for EmbeddingTable {
    fn clone(&self) -> Self {
        EmbeddingTable {
            vectors: self.vectors.clone(),
            seed: self.seed,
            cache: Mutex::new(self.cache.lock().unwrap().clone()),
        }
    }
}

impl EmbeddingTable {
    pub fn new(vectors: HashMap<String, Embedding>, seed: u64) -> Self {
        EmbeddingTable {
            vectors,
            seed,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn stored(&self, word: &str) -> Option<&Embedding> {
        self.vectors.get(word)
    }

    pub fn get(&self, word: &str) -> Embedding {
        if let Some(v) = self.vectors.get(word) {
            return *v;
        }
        let mut cache = self.cache.lock().unwrap();
        *cache
            .entry(word.to_string())
            .or_insert_with(|| fallback_vector(self.seed, word))
    }

    pub fn fallback_count(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    /// Writes the generated fallback vectors in the embeddings text layout,
    /// sorted by word, so they can be appended to the stored table.
    pub fn save_fallbacks(&self, path: &Path) -> Result<()> {
        let cache = self.cache.lock().unwrap();
        let mut words: Vec<&String> = cache.keys().collect();
        words.sort();
        let mut out = Vec::new();
        for w in words {
            write_embedding_line(&mut out, w, &cache[w]);
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// One `word v1 ... v50` row per line.
    pub fn load(path: &Path, seed: u64) -> Result<Self> {
        Self::parse(&read(path)?, path, seed)
    }

    pub fn parse(src: &str, path: &Path, seed: u64) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (lineno, line) in data_lines(src) {
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap_or_default().to_lowercase();
            let values = parts
                .map(|p| {
                    p.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(path, lineno, format!("bad embedding component {p:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let v: Embedding = values.try_into().map_err(|v: Vec<f64>| {
                Error::parse(path, lineno, format!("expected {EMBED_DIM} components, found {}", v.len()))
            })?;
            vectors.insert(word, v);
        }
        Ok(EmbeddingTable::new(vectors, seed))
    }
}

fn write_embedding_line(out: &mut Vec<u8>, word: &str, v: &Embedding) {
    write!(out, "{word}").unwrap();
    for x in v {
        write!(out, " {x}").unwrap();
    }
    out.push(b'\n');
}

fn fallback_vector(seed: u64, word: &str) -> Embedding {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(word.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(key);
    let mut v = [0.0; EMBED_DIM];
    for x in &mut v {
        *x = rng.gen_range(-FALLBACK_RANGE..=FALLBACK_RANGE);
    }
    v
}

pub fn cosine(a: &Embedding, b: &Embedding) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// The three lexical stores used during graph construction.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub sentic: SenticStore,
    pub synonyms: SynonymTable,
    pub embeddings: EmbeddingTable,
}

impl Lexicon {
    pub fn new(sentic: SenticStore, synonyms: SynonymTable, embeddings: EmbeddingTable) -> Self {
        Lexicon {
            sentic,
            synonyms,
            embeddings,
        }
    }

    pub fn load(sentic: &Path, synonyms: &Path, embeddings: &Path, seed: u64) -> Result<Self> {
        Ok(Lexicon {
            sentic: SenticStore::load(sentic)?,
            synonyms: SynonymTable::load(synonyms)?,
            embeddings: EmbeddingTable::load(embeddings, seed)?,
        })
    }

    pub fn embedding(&self, word: &str) -> Embedding {
        self.embeddings.get(word)
    }

    /// Synonyms of `word` ordered by descending cosine similarity to it,
    /// ties broken lexicographically.
    pub fn ranked_synonyms(&self, word: &str) -> Vec<(&str, f64)> {
        let base = self.embedding(word);
        let mut ranked: Vec<(&str, f64)> = self
            .synonyms
            .get(word)
            .iter()
            .map(|s| (s.as_str(), cosine(&base, &self.embedding(s))))
            .collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(b.0))
        });
        ranked
    }

    /// The word's own entry, else the entry of its best-ranked synonym that
    /// is in the store. `None` means the word is dropped.
    pub fn lookup_sentic(&self, word: &str) -> Option<&LexiconEntry> {
        if let Some(e) = self.sentic.get(word) {
            return Some(e);
        }
        self.ranked_synonyms(word)
            .into_iter()
            .find_map(|(s, _)| self.sentic.get(s))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn data_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test")
    }

    fn axis(i: usize, scale: f64) -> Embedding {
        let mut v = [0.0; EMBED_DIM];
        v[i] = scale;
        v
    }

    fn lexicon() -> Lexicon {
        let sentic = SenticStore::parse(
            "concept,mood1,mood2,pleasantness,polarity,related\n\
             beach,joy,serenity,0.81,0.74,sand;sea;sun;coast;shore\n\
             car,interest,calmness,0.2,0.3,road;wheel;drive;engine;garage\n\
             vehicle,interest,calmness,0.1,0.1,road;wheel;drive;engine;truck\n",
            p(),
        )
        .unwrap();
        let synonyms = SynonymTable::parse(
            "automobile,machine;car\nauto,vehicle;car\nnowhere,ghost\n",
            p(),
        )
        .unwrap();
        let mut vectors = HashMap::new();
        vectors.insert("auto".to_string(), axis(0, 1.0));
        let mut car = axis(0, 1.0);
        car[1] = 1.0;
        vectors.insert("car".to_string(), car);
        vectors.insert("vehicle".to_string(), axis(0, 2.0));
        Lexicon::new(sentic, synonyms, EmbeddingTable::new(vectors, 42))
    }

    #[test]
    fn sentic_row_maps_fields() {
        let lex = lexicon();
        let e = lex.sentic.get("beach").unwrap();
        assert_eq!(e.mood_tags, ["joy".to_string(), "serenity".to_string()]);
        assert_eq!(e.pleasantness, 0.81);
        assert_eq!(e.polarity, 0.74);
        assert_eq!(e.related, ["sand", "sea", "sun", "coast", "shore"].map(String::from));
        assert_eq!(lex.sentic.len(), 3);
    }

    #[test]
    fn sentic_parse_errors_carry_line() {
        let err = SenticStore::parse("a,b,c,1.5,0,r;r;r;r;r", p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = SenticStore::parse("\na,b,c,0.5,0,r;r;r;r", p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(SenticStore::parse("a,b,0.5,0,r;r;r;r;r", p()).is_err());
        assert!(SenticStore::parse("a,b,c,x,0,r;r;r;r;r", p()).is_err());
    }

    #[test]
    fn embedding_parse_errors() {
        let row49 = format!("w {}", vec!["0.1"; 49].join(" "));
        assert!(matches!(
            EmbeddingTable::parse(&row49, p(), 0),
            Err(Error::Parse { line: 1, .. })
        ));
        let row50 = format!("w {} x", vec!["0.1"; 49].join(" "));
        assert!(EmbeddingTable::parse(&row50, p(), 0).is_err());
        let ok = format!("w {}", vec!["0.25"; 50].join(" "));
        let t = EmbeddingTable::parse(&ok, p(), 0).unwrap();
        assert_eq!(t.get("w"), [0.25; EMBED_DIM]);
    }

    #[test]
    fn lookup_direct_synonym_and_dropped() {
        let lex = lexicon();
        assert_eq!(lex.lookup_sentic("beach").unwrap().concept, "beach");
        // "machine" is not in the store, "car" is.
        assert_eq!(lex.lookup_sentic("automobile").unwrap().concept, "car");
        assert!(lex.lookup_sentic("nowhere").is_none());
        assert!(lex.lookup_sentic("unknown").is_none());
    }

    #[test]
    fn synonyms_ranked_by_cosine() {
        let lex = lexicon();
        // vehicle is parallel to auto, car is at 45 degrees.
        let ranked = lex.ranked_synonyms("auto");
        assert_eq!(ranked[0].0, "vehicle");
        assert_eq!(lex.lookup_sentic("auto").unwrap().concept, "vehicle");
    }

    #[test]
    fn synonym_ties_break_lexicographically() {
        let sentic = SenticStore::parse(
            "b,m,n,0,0,r;r;r;r;r\na,m,n,0,0,r;r;r;r;r",
            p(),
        )
        .unwrap();
        let syn = SynonymTable::parse("w,b;a", p()).unwrap();
        let mut vectors = HashMap::new();
        for w in ["w", "a", "b"] {
            vectors.insert(w.to_string(), axis(3, 1.0));
        }
        let lex = Lexicon::new(sentic, syn, EmbeddingTable::new(vectors, 0));
        assert_eq!(lex.lookup_sentic("w").unwrap().concept, "a");
    }

    #[test]
    fn fallback_is_cached_and_bounded() {
        let lex = lexicon();
        let a = lex.embedding("zebra");
        let b = lex.embedding("zebra");
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x.abs() <= FALLBACK_RANGE));
        assert_eq!(lex.embeddings.fallback_count(), 1);
        // Same seed in a fresh table gives the same vector.
        let fresh = EmbeddingTable::new(HashMap::new(), 42);
        assert_eq!(fresh.get("zebra"), a);
        let other = EmbeddingTable::new(HashMap::new(), 43);
        assert_ne!(other.get("zebra"), a);
        assert_eq!(lex.embedding("car")[1], 1.0);
    }

    #[test]
    fn fallback_is_consistent_across_threads() {
        let table = EmbeddingTable::new(HashMap::new(), 9);
        let vs: Vec<Embedding> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..8).map(|_| s.spawn(|| table.get("shared"))).collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(vs.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(table.fallback_count(), 1);
    }

    #[test]
    fn saved_fallbacks_reload_verbatim() {
        let table = EmbeddingTable::new(HashMap::new(), 5);
        let v = table.get("kite");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fallbacks.txt");
        table.save_fallbacks(&path).unwrap();
        let reloaded = EmbeddingTable::load(&path, 0).unwrap();
        assert_eq!(reloaded.stored("kite"), Some(&v));
    }
}
