//! Caption ingestion and normalization into valid-word sequences.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emotions::NUM_CATEGORIES;
use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const DEFAULT_BANNED_NOUNS: &str = include_str!("../data/banned_nouns.txt");
const DEFAULT_LEMMAS: &str = include_str!("../data/lemmas.tsv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caption {
    pub id: String,
    pub text: String,
    /// Sorted, unique category indices.
    pub labels: Vec<usize>,
    pub vad: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCaption {
    pub id: String,
    pub valid_words: Vec<String>,
    pub labels: Vec<usize>,
    pub vad: [f64; 3],
}

impl NormalizedCaption {
    /// A caption with no valid words cannot produce a graph.
    pub fn is_empty(&self) -> bool {
        self.valid_words.is_empty()
    }

    /// 0/1 indicator vector over the categories.
    pub fn label_indicator(&self) -> [f64; NUM_CATEGORIES] {
        let mut y = [0.0; NUM_CATEGORIES];
        for &l in &self.labels {
            y[l] = 1.0;
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationConfig {
    pub stopwords: HashSet<String>,
    pub banned_nouns: HashSet<String>,
    pub lemmas: HashMap<String, String>,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        let src = Path::new("<bundled>");
        NormalizationConfig {
            stopwords: parse_word_list(DEFAULT_STOPWORDS),
            banned_nouns: parse_word_list(DEFAULT_BANNED_NOUNS),
            lemmas: parse_lemmas(DEFAULT_LEMMAS, src).expect("bundled lemma table is well formed"),
        }
    }
}

impl NormalizationConfig {
    /// Loads any of the three lists from disk, falling back to the bundled
    /// defaults for the ones not given.
    pub fn from_files(
        stopwords: Option<&Path>,
        banned_nouns: Option<&Path>,
        lemmas: Option<&Path>,
    ) -> Result<Self> {
        let mut cfg = NormalizationConfig::default();
        if let Some(p) = stopwords {
            cfg.stopwords = parse_word_list(&read(p)?);
        }
        if let Some(p) = banned_nouns {
            cfg.banned_nouns = parse_word_list(&read(p)?);
        }
        if let Some(p) = lemmas {
            cfg.lemmas = parse_lemmas(&read(p)?, p)?;
        }
        Ok(cfg)
    }

    fn is_filtered(&self, token: &str) -> bool {
        self.stopwords.contains(token) || self.banned_nouns.contains(token)
    }

    fn lemmatize<'a>(&'a self, token: &'a str) -> &'a str {
        self.lemmas.get(token).map(String::as_str).unwrap_or(token)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_word_list(src: &str) -> HashSet<String> {
    src.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn parse_lemmas(src: &str, path: &Path) -> Result<HashMap<String, String>> {
    let mut table = HashMap::new();
    for (i, line) in src.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(surface), Some(lemma), None) if !surface.is_empty() && !lemma.trim().is_empty() => {
                table.insert(surface.trim().to_lowercase(), lemma.trim().to_lowercase());
            }
            _ => return Err(Error::parse(path, i + 1, "expected `surface<TAB>lemma`")),
        }
    }
    Ok(table)
}

#[derive(Deserialize)]
struct CaptionRecord {
    id: String,
    caption: String,
    labels: Vec<i64>,
    vad: [f64; 3],
}

/// Reads a caption-jsonl file. `vad_scale` divides raw VAD annotations
/// (use 10.0 for the 1..10 EMOTIC scale, 1.0 when already normalized).
pub fn load_captions(path: &Path, vad_scale: f64) -> Result<Vec<Caption>> {
    let src = read(path)?;
    parse_captions(&src, path, vad_scale)
}

pub fn parse_captions(src: &str, path: &Path, vad_scale: f64) -> Result<Vec<Caption>> {
    if !(vad_scale > 0.0) {
        return Err(Error::Domain(format!("vad scale must be positive, got {vad_scale}")));
    }
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let rec: CaptionRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let mut labels = BTreeSet::new();
        for &l in &rec.labels {
            if l < 0 || l as usize >= NUM_CATEGORIES {
                return Err(Error::Domain(format!(
                    "{}:{lineno}: label index {l} outside [0, {NUM_CATEGORIES})",
                    path.display()
                )));
            }
            if !labels.insert(l as usize) {
                return Err(Error::Domain(format!(
                    "{}:{lineno}: duplicate label index {l}",
                    path.display()
                )));
            }
        }
        let vad = rec.vad.map(|v| v / vad_scale);
        if vad.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Domain(format!(
                "{}:{lineno}: vad {:?} outside [0, 1] after scaling by {vad_scale}",
                path.display(),
                rec.vad
            )));
        }
        out.push(Caption {
            id: rec.id,
            text: rec.caption,
            labels: labels.into_iter().collect(),
            vad,
        });
    }
    Ok(out)
}

/// Splits on whitespace and punctuation, lowercases, and keeps only
/// alphabetic characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| c.is_whitespace() || c.is_ascii_punctuation() || is_unicode_punct(c))
        .map(|piece| {
            piece
                .chars()
                .flat_map(char::to_lowercase)
                .filter(|c| c.is_alphabetic() && !c.is_uppercase())
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}' | '\u{00A1}' | '\u{00AB}' | '\u{00BB}' | '\u{00BF}'
    )
}

/// stop words -> banned nouns -> lemma lookup; lemmas are re-checked
/// against both lists.
pub fn normalize(caption: &Caption, cfg: &NormalizationConfig) -> NormalizedCaption {
    NormalizedCaption {
        id: caption.id.clone(),
        valid_words: normalize_text(&caption.text, cfg),
        labels: caption.labels.clone(),
        vad: caption.vad,
    }
}

pub fn normalize_text(text: &str, cfg: &NormalizationConfig) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !cfg.is_filtered(t))
        .filter_map(|t| {
            let lemma = cfg.lemmatize(&t);
            (!cfg.is_filtered(lemma)).then(|| lemma.to_string())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cap(text: &str) -> Caption {
        Caption {
            id: "t".into(),
            text: text.into(),
            labels: vec![],
            vad: [0.5; 3],
        }
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("A man, sitting."), vec!["a", "man", "sitting"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("BEACH!!!"), vec!["beach"]);
        assert_eq!(tokenize("don't  stop-now 42x"), vec!["don", "t", "stop", "now", "x"]);
    }

    #[test]
    fn normalize_examples() {
        let cfg = NormalizationConfig::default();
        let out = normalize(&cap("a man sitting on a surfboard in the ocean"), &cfg);
        assert_eq!(out.valid_words, vec!["sit", "surfboard", "ocean"]);
        assert!(normalize(&cap("it is on the"), &cfg).is_empty());
        assert_eq!(
            normalize(&cap("two women riding horses"), &cfg).valid_words,
            vec!["ride", "horse"]
        );
    }

    #[test]
    fn lemma_output_is_rechecked() {
        let mut cfg = NormalizationConfig::default();
        cfg.banned_nouns.remove("men");
        cfg.lemmas.insert("men".into(), "man".into());
        assert!(normalize_text("men", &cfg).is_empty());
    }

    #[test]
    fn duplicates_and_order_kept() {
        let cfg = NormalizationConfig::default();
        assert_eq!(
            normalize_text("dogs chasing dogs on the beach", &cfg),
            vec!["dog", "chase", "dog", "beach"]
        );
    }

    #[test]
    fn caption_line_maps_fields() {
        let src = r#"{"id":"a","caption":"A man on a beach","labels":[14],"vad":[0.8,0.5,0.6]}"#;
        let caps = parse_captions(src, Path::new("x.jsonl"), 1.0).unwrap();
        assert_eq!(
            caps,
            vec![Caption {
                id: "a".into(),
                text: "A man on a beach".into(),
                labels: vec![14],
                vad: [0.8, 0.5, 0.6],
            }]
        );
    }

    #[test]
    fn caption_loader_edge_cases() {
        let p = Path::new("x.jsonl");
        assert!(parse_captions("", p, 1.0).unwrap().is_empty());
        assert!(parse_captions("\n  \n", p, 1.0).unwrap().is_empty());

        let bad = r#"{"id":"a","caption":"x","labels":[26],"vad":[0.1,0.1,0.1]}"#;
        assert!(matches!(parse_captions(bad, p, 1.0), Err(Error::Domain(_))));

        let src = "{\"id\":\"a\",\"caption\":\"x\",\"labels\":[],\"vad\":[0,0,0]}\n\n{oops";
        match parse_captions(src, p, 1.0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }

        let raw = r#"{"id":"a","caption":"x","labels":[3,1],"vad":[5,10,1]}"#;
        let caps = parse_captions(raw, p, 10.0).unwrap();
        assert_eq!(caps[0].vad, [0.5, 1.0, 0.1]);
        assert_eq!(caps[0].labels, vec![1, 3]);
        assert!(parse_captions(raw, p, 1.0).is_err());
    }

    #[test]
    fn bundled_assets_load() {
        let cfg = NormalizationConfig::default();
        assert!((150..=200).contains(&cfg.stopwords.len()));
        for n in ["man", "woman", "girl", "boy", "men", "women", "girls", "boys", "person", "people"] {
            assert!(cfg.banned_nouns.contains(n), "{n}");
        }
        assert!(cfg.lemmas.values().all(|v| !v.is_empty()));
    }
}
