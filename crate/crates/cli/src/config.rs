//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use emograph::artifact::short_hash;
use emograph::gin::{LossConfig, ModelConfig, Pooling, TrainConfig};
use emograph::lexicon::EMBED_DIM;

use crate::error::CliError;

/// Every recognised key with its default. An empty default means unset.
const KEYS: &[(&str, &str)] = &[
    ("train_captions", ""),
    ("val_captions", ""),
    ("test_captions", ""),
    ("vad_scale", "1"),
    ("stopwords", ""),
    ("banned_nouns", ""),
    ("lemmas", ""),
    ("sentic", ""),
    ("synonyms", ""),
    ("embeddings", ""),
    ("window", "3"),
    ("seed", "0"),
    ("hidden", "64"),
    ("d_read", "64"),
    ("layers", "5"),
    ("pooling", "avg"),
    ("readout_skip_h0", "false"),
    ("lambda_cat", "1"),
    ("lambda_cont", "1"),
    ("c", "1.2"),
    ("batch_size", "16"),
    ("lr", "0.001"),
    ("weight_decay", "0.0004"),
    ("epochs", "50"),
    ("rho", "0.9"),
    ("adadelta_eps", "1e-6"),
    ("top_k", "3"),
    ("warmup", "2"),
    ("reps", "10"),
    ("out", "out"),
    ("threads", "1"),
];

const PATH_KEYS: &[&str] = &[
    "train_captions",
    "val_captions",
    "test_captions",
    "stopwords",
    "banned_nouns",
    "lemmas",
    "sentic",
    "synonyms",
    "embeddings",
    "out",
];

/// Keys each stage's output depends on, including everything upstream.
/// `threads` and the output location never affect results.
const PREPROCESS_KEYS: &[&str] = &[
    "train_captions",
    "val_captions",
    "test_captions",
    "vad_scale",
    "stopwords",
    "banned_nouns",
    "lemmas",
];
const MINE_KEYS: &[&str] = &["window"];
const GRAPH_KEYS: &[&str] = &["sentic", "synonyms", "embeddings", "seed"];
const TRAIN_KEYS: &[&str] = &[
    "hidden",
    "d_read",
    "layers",
    "pooling",
    "readout_skip_h0",
    "lambda_cat",
    "lambda_cont",
    "c",
    "batch_size",
    "lr",
    "weight_decay",
    "epochs",
    "rho",
    "adadelta_eps",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Preprocess,
    Mine,
    BuildGraphs,
    Train,
}

impl Stage {
    pub fn command(self) -> &'static str {
        match self {
            Stage::Preprocess => "preprocess",
            Stage::Mine => "mine",
            Stage::BuildGraphs => "build-graphs",
            Stage::Train => "train",
        }
    }

    fn keys(self) -> Vec<&'static str> {
        let mut keys = PREPROCESS_KEYS.to_vec();
        if self >= Stage::Mine {
            keys.extend(MINE_KEYS);
        }
        if self >= Stage::BuildGraphs {
            keys.extend(GRAPH_KEYS);
        }
        if self >= Stage::Train {
            keys.extend(TRAIN_KEYS);
        }
        keys
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Defaults, then the config file, then `overrides` in order.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        if let Some(path) = file {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new(""));
            let mut seen = BTreeMap::new();
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap().trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    CliError::input(format!("{}:{}: expected key = value", path.display(), i + 1))
                })?;
                let (k, v) = (k.trim(), v.trim());
                check_key(k).map_err(|e| CliError::input(format!("{}:{}: {}", path.display(), i + 1, e.message)))?;
                if seen.insert(k.to_string(), i + 1).is_some() {
                    return Err(CliError::input(format!("{}:{}: duplicate key {k}", path.display(), i + 1)));
                }
                let v = if PATH_KEYS.contains(&k) && !v.is_empty() {
                    base.join(v).to_string_lossy().into_owned()
                } else {
                    v.to_string()
                };
                values.insert(k.to_string(), v);
            }
        }
        for (k, v) in overrides {
            check_key(k)?;
            values.insert(k.clone(), v.clone());
        }
        let cfg = RunConfig { values };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (k, _) in KEYS {
            if !PATH_KEYS.contains(k) && !self.values[*k].is_empty() && *k != "pooling" && *k != "readout_skip_h0" {
                self.number(k)?;
            }
        }
        self.pooling()?;
        self.flag("readout_skip_h0")?;
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        &self.values[key]
    }

    fn number(&self, key: &str) -> Result<f64, CliError> {
        let v = self.raw(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::usage(format!("{key} = {v:?} is not a number")))
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.number(key).expect("validated at load")
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let v = self.raw(key);
        v.parse()
            .map_err(|_| CliError::usage(format!("{key} = {v:?} is not a non-negative integer")))
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        let v = self.raw(key);
        v.parse()
            .map_err(|_| CliError::usage(format!("{key} = {v:?} is not a non-negative integer")))
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(CliError::usage(format!("{key} = {v:?} is not a boolean"))),
        }
    }

    fn pooling(&self) -> Result<Pooling, CliError> {
        self.raw("pooling")
            .parse()
            .map_err(|_| CliError::usage(format!("pooling = {:?}; expected avg or sum", self.raw("pooling"))))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.u64("seed")
    }

    pub fn threads(&self) -> Result<usize, CliError> {
        Ok(self.usize("threads")?.max(1))
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out"))
    }

    /// A path-valued key, which must name an existing file.
    pub fn input_path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        let v = self.raw(key);
        if v.is_empty() {
            return Ok(None);
        }
        let p = PathBuf::from(v);
        if !p.is_file() {
            return Err(CliError::input(format!("{key}: no such file {}", p.display())));
        }
        Ok(Some(p))
    }

    pub fn required_path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.input_path(key)?
            .ok_or_else(|| CliError::usage(format!("{key} is not set; add it to the config or pass --set {key}=PATH")))
    }

    pub fn model_config(&self) -> Result<ModelConfig, CliError> {
        let cfg = ModelConfig {
            input: EMBED_DIM,
            hidden: self.usize("hidden")?,
            d_read: self.usize("d_read")?,
            layers: self.usize("layers")?,
            pooling: self.pooling()?,
            readout_skip_h0: self.flag("readout_skip_h0")?,
        };
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let tc = TrainConfig {
            batch_size: self.usize("batch_size")?,
            lr: self.f64("lr"),
            weight_decay: self.f64("weight_decay"),
            epochs: self.usize("epochs")?,
            seed: self.seed()?,
            rho: self.f64("rho"),
            adadelta_eps: self.f64("adadelta_eps"),
        };
        tc.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(tc)
    }

    pub fn loss_config(&self, prior: [f64; emograph::emotions::NUM_CATEGORIES]) -> Result<LossConfig, CliError> {
        let lc = LossConfig {
            lambda_cat: self.f64("lambda_cat"),
            lambda_cont: self.f64("lambda_cont"),
            c: self.f64("c"),
            category_prior: prior,
        };
        lc.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(lc)
    }

    /// Hash of everything that determines `stage`'s output. Input files
    /// contribute their contents, not their location.
    pub fn stage_hash(&self, stage: Stage) -> Result<String, CliError> {
        let mut text = String::new();
        for k in stage.keys() {
            let v = self.raw(k);
            let v = if PATH_KEYS.contains(&k) && !v.is_empty() {
                let content = fs::read(v)
                    .map_err(|e| CliError::input(format!("{k}: cannot read {v}: {e}")))?;
                short_hash(&String::from_utf8_lossy(&content))
            } else {
                v.to_string()
            };
            text.push_str(&format!("{k}={v}\n"));
        }
        Ok(short_hash(&text))
    }
}

fn check_key(k: &str) -> Result<(), CliError> {
    if KEYS.iter().any(|(key, _)| *key == k) {
        Ok(())
    } else {
        Err(CliError::usage(format!("unknown config key {k:?}")))
    }
}

/// Parses `KEY=VALUE`.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("run.conf");
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "# comment\nwindow = 5\nsentic = lex/s.csv  # trailing\n");
        let cfg = RunConfig::load(Some(&p), &[("seed".into(), "9".into())]).unwrap();
        assert_eq!(cfg.usize("window").unwrap(), 5);
        assert_eq!(cfg.seed().unwrap(), 9);
        assert_eq!(PathBuf::from(cfg.raw("sentic")), dir.path().join("lex/s.csv"));
        assert_eq!(cfg.raw("pooling"), "avg");
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        for bad in ["nonsense\n", "window = 3\nwindow = 4\n", "colour = red\n"] {
            let p = write(dir.path(), bad);
            assert!(RunConfig::load(Some(&p), &[]).is_err(), "{bad:?}");
        }
        assert!(RunConfig::load(None, &[("lr".into(), "fast".into())]).is_err());
        assert!(RunConfig::load(None, &[("pooling".into(), "max".into())]).is_err());
    }

    #[test]
    fn threads_do_not_change_hashes() {
        let a = RunConfig::load(None, &[]).unwrap();
        let b = RunConfig::load(None, &[("threads".into(), "8".into())]).unwrap();
        let c = RunConfig::load(None, &[("epochs".into(), "3".into())]).unwrap();
        for s in [Stage::Preprocess, Stage::Mine, Stage::BuildGraphs, Stage::Train] {
            assert_eq!(a.stage_hash(s).unwrap(), b.stage_hash(s).unwrap());
        }
        assert_eq!(a.stage_hash(Stage::BuildGraphs).unwrap(), c.stage_hash(Stage::BuildGraphs).unwrap());
        assert_ne!(a.stage_hash(Stage::Train).unwrap(), c.stage_hash(Stage::Train).unwrap());
    }
}
