use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use emograph::artifact::ArtifactMeta;
use emograph::eval::{bench_inference, evaluate_predictions, EvalReport};
use emograph::gin::{eval_loss, train, Target, TrainSample};
use emograph::graph::{build_corpus_graphs, Manifest};
use emograph::pipeline::{CaptionPrediction, Predictor, DEGENERATE};
use emograph::text::{load_captions, normalize};
use emograph::{
    Caption, ContextGraph, CooccurrenceModel, GinModel, Lexicon, NormalizationConfig,
    NormalizedCaption,
};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Stage};
use crate::error::CliError;

pub const CORPUS_FILE: &str = "corpus.json";
pub const COOCCUR_FILE: &str = "cooccur.json";
pub const GRAPHS_DIR: &str = "graphs";
pub const FALLBACK_FILE: &str = "fallback_embeddings.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const EVAL_FILE: &str = "eval_report.json";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const LATENCY_FILE: &str = "latency_report.json";

const SPLITS: [(&str, &str); 3] = [
    ("train", "train_captions"),
    ("val", "val_captions"),
    ("test", "test_captions"),
];

pub struct Ctx {
    pub cfg: RunConfig,
    pub force: bool,
}

#[derive(Serialize, Deserialize)]
struct CorpusFile {
    meta: ArtifactMeta,
    splits: BTreeMap<String, Vec<NormalizedCaption>>,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialization is infallible")
}

impl Ctx {
    fn out(&self, name: &str) -> PathBuf {
        self.cfg.out_dir().join(name)
    }

    fn meta(&self, stage: Stage) -> Result<ArtifactMeta, CliError> {
        Ok(ArtifactMeta::new(self.cfg.seed()?, self.cfg.stage_hash(stage)?))
    }

    /// Refuses an upstream artifact produced under a different config
    /// unless `--force` was given.
    fn check(&self, stage: Stage, path: &Path, meta: Option<&ArtifactMeta>) -> Result<(), CliError> {
        let expected = self.cfg.stage_hash(stage)?;
        let found = meta.map(|m| m.config_hash.as_str()).unwrap_or("none");
        if found == expected {
            return Ok(());
        }
        let msg = format!(
            "{} has config hash {found} but the current config gives {expected}; rerun {} or pass --force",
            path.display(),
            stage.command()
        );
        if self.force {
            eprintln!("warning: {msg}");
            Ok(())
        } else {
            Err(CliError::input(msg))
        }
    }

    fn require(&self, stage: Stage, name: &str) -> Result<PathBuf, CliError> {
        let p = self.out(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(CliError::missing(stage.command(), &p))
        }
    }

    fn normalization(&self) -> Result<NormalizationConfig, CliError> {
        Ok(NormalizationConfig::from_files(
            self.cfg.input_path("stopwords")?.as_deref(),
            self.cfg.input_path("banned_nouns")?.as_deref(),
            self.cfg.input_path("lemmas")?.as_deref(),
        )?)
    }

    fn lexicon(&self) -> Result<Lexicon, CliError> {
        Ok(Lexicon::load(
            &self.cfg.required_path("sentic")?,
            &self.cfg.required_path("synonyms")?,
            &self.cfg.required_path("embeddings")?,
            self.cfg.seed()?,
        )?)
    }

    fn captions(&self, key: &str) -> Result<Vec<Caption>, CliError> {
        let path = self.cfg.required_path(key)?;
        Ok(load_captions(&path, self.cfg.f64("vad_scale"))?)
    }

    fn corpus(&self) -> Result<BTreeMap<String, Vec<NormalizedCaption>>, CliError> {
        let path = self.require(Stage::Preprocess, CORPUS_FILE)?;
        let text = fs::read_to_string(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let file: CorpusFile =
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        self.check(Stage::Preprocess, &path, Some(&file.meta))?;
        Ok(file.splits)
    }

    fn cooccur(&self) -> Result<CooccurrenceModel, CliError> {
        let path = self.require(Stage::Mine, COOCCUR_FILE)?;
        let (model, meta) = CooccurrenceModel::load_with_meta(&path)?;
        self.check(Stage::Mine, &path, meta.as_ref())?;
        Ok(model)
    }

    fn checkpoint(&self) -> Result<GinModel, CliError> {
        let path = self.require(Stage::Train, CHECKPOINT_FILE)?;
        let ck = GinModel::load_checkpoint_for(&path, &self.cfg.model_config()?)?;
        self.check(Stage::Train, &path, ck.meta.as_ref())?;
        Ok(ck.model)
    }

    /// Graphs of one split keyed by caption id.
    fn graphs(&self, split: &str) -> Result<HashMap<String, ContextGraph>, CliError> {
        let dir = self.out(GRAPHS_DIR).join(split);
        let manifest_path = dir.join(Manifest::FILE_NAME);
        if !manifest_path.exists() {
            return Err(CliError::missing(Stage::BuildGraphs.command(), &manifest_path));
        }
        let manifest = Manifest::load(&dir)?;
        self.check(Stage::BuildGraphs, &manifest_path, manifest.meta.as_ref())?;
        let mut out = HashMap::new();
        for (entry, path) in manifest.built.iter().zip(manifest.graph_paths(&dir)) {
            let (graph, meta) = ContextGraph::load(&path)?;
            self.check(Stage::BuildGraphs, &path, meta.as_ref())?;
            out.insert(entry.caption_id.clone(), graph);
        }
        Ok(out)
    }

    fn predictor(&self) -> Result<Predictor, CliError> {
        Ok(Predictor {
            normalization: self.normalization()?,
            cooccur: self.cooccur()?,
            lexicon: self.lexicon()?,
            model: self.checkpoint()?,
        })
    }
}

/// Predictions for every caption of a split, degenerate where no graph
/// was built.
fn split_predictions(
    model: &GinModel,
    captions: &[NormalizedCaption],
    graphs: &HashMap<String, ContextGraph>,
) -> Result<Vec<CaptionPrediction>, CliError> {
    captions
        .iter()
        .map(|c| {
            Ok(match graphs.get(&c.id) {
                Some(g) => CaptionPrediction {
                    id: c.id.clone(),
                    prediction: model.predict_graph(g)?,
                    degenerate: false,
                },
                None => CaptionPrediction {
                    id: c.id.clone(),
                    prediction: DEGENERATE,
                    degenerate: true,
                },
            })
        })
        .collect()
}

fn report(preds: &[CaptionPrediction], captions: &[NormalizedCaption]) -> Result<EvalReport, CliError> {
    let targets: Vec<Vec<usize>> = captions.iter().map(|c| c.labels.clone()).collect();
    Ok(evaluate_predictions(preds, &targets)?)
}

pub fn preprocess(ctx: &Ctx) -> Result<(), CliError> {
    ctx.cfg.required_path("train_captions")?;
    let norm = ctx.normalization()?;
    let mut splits = BTreeMap::new();
    for (name, key) in SPLITS {
        if ctx.cfg.input_path(key)?.is_none() {
            continue;
        }
        let normalized: Vec<NormalizedCaption> =
            ctx.captions(key)?.iter().map(|c| normalize(c, &norm)).collect();
        let empty = normalized.iter().filter(|c| c.is_empty()).count();
        println!("{name:<6} {:>6} captions {empty:>4} without valid words", normalized.len());
        splits.insert(name.to_string(), normalized);
    }
    let file = CorpusFile {
        meta: ctx.meta(Stage::Preprocess)?,
        splits,
    };
    let path = ctx.out(CORPUS_FILE);
    write(&path, pretty(&file))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn mine(ctx: &Ctx) -> Result<(), CliError> {
    let corpus = ctx.corpus()?;
    let train = corpus.get("train").ok_or_else(|| CliError::input("corpus has no train split"))?;
    let model = CooccurrenceModel::mine(train, ctx.cfg.usize("window")?)?;
    let path = ctx.out(COOCCUR_FILE);
    model
        .save_with_meta(&path, Some(&ctx.meta(Stage::Mine)?))
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let pairs: usize = model.vocab().iter().map(|w| model.neighbours(w).count()).sum::<usize>() / 2;
    println!(
        "vocabulary {} words, {pairs} co-occurring pairs, window {}",
        model.vocab().len(),
        model.window()
    );
    println!("wrote {}", path.display());
    Ok(())
}

pub fn build_graphs(ctx: &Ctx) -> Result<(), CliError> {
    let corpus = ctx.corpus()?;
    let co = ctx.cooccur()?;
    let lex = ctx.lexicon()?;
    let meta = ctx.meta(Stage::BuildGraphs)?;
    let root = ctx.out(GRAPHS_DIR);
    for (split, captions) in &corpus {
        let dir = root.join(split);
        if dir.exists() {
            fs::remove_dir_all(&dir)
                .map_err(|e| CliError::runtime(format!("cannot clear {}: {e}", dir.display())))?;
        }
        let manifest = build_corpus_graphs(captions, &co, &lex, &dir, ctx.cfg.threads()?, Some(&meta))
            .map_err(|e| CliError::runtime(e.to_string()))?;
        println!(
            "{split:<6} {:>6} graphs {:>4} skipped",
            manifest.built.len(),
            manifest.skipped.len()
        );
    }
    let fallback = root.join(FALLBACK_FILE);
    lex.embeddings
        .save_fallbacks(&fallback)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    println!(
        "{} words without stored embeddings; fallback vectors in {}",
        lex.embeddings.fallback_count(),
        fallback.display()
    );
    Ok(())
}

fn samples(captions: &[NormalizedCaption], graphs: &HashMap<String, ContextGraph>) -> Vec<TrainSample> {
    captions
        .iter()
        .filter_map(|c| {
            graphs.get(&c.id).map(|g| TrainSample {
                graph: g.clone(),
                target: Target::from_caption(c),
            })
        })
        .collect()
}

pub fn train_cmd(ctx: &Ctx) -> Result<(), CliError> {
    let corpus = ctx.corpus()?;
    let co = ctx.cooccur()?;
    let train_caps = corpus.get("train").ok_or_else(|| CliError::input("corpus has no train split"))?;
    let train_set = samples(train_caps, &ctx.graphs("train")?);
    if train_set.is_empty() {
        return Err(CliError::input("no training caption produced a graph"));
    }
    // Validation uses the val split, else the test split, else nothing.
    let val = ["val", "test"]
        .into_iter()
        .find_map(|s| corpus.get(s).filter(|c| !c.is_empty()).map(|c| (s, c)));
    let val = match val {
        Some((split, caps)) => Some((caps, ctx.graphs(split)?)),
        None => None,
    };
    let val_set = val.as_ref().map(|(caps, graphs)| samples(caps, graphs));

    let model_cfg = ctx.cfg.model_config()?;
    let tc = ctx.cfg.train_config()?;
    let lc = ctx.cfg.loss_config(*co.category_prior())?;
    let meta = ctx.meta(Stage::Train)?;
    let mut model = GinModel::new(model_cfg, tc.seed)?;

    let log_path = ctx.out(TRAIN_LOG_FILE);
    let mut log = format!(
        "# {}\nepoch,train_loss,val_loss,val_mAP\n",
        serde_json::to_string(&meta).unwrap()
    );
    write(&log_path, &log)?;
    println!("{:>6} {:>12} {:>12} {:>8}", "epoch", "train_loss", "val_loss", "val_mAP");
    let outcome = train(&mut model, &train_set, &tc, &lc, |epoch, loss, m| {
        let (val_loss, val_map) = match (&val, &val_set) {
            (Some((caps, graphs)), Some(set)) => {
                let vl = if set.is_empty() { f64::NAN } else { eval_loss(m, set, &lc)? };
                let preds = split_predictions(m, caps, graphs).map_err(|e| emograph::Error::Domain(e.message))?;
                let map = evaluate_predictions(&preds, &caps.iter().map(|c| c.labels.clone()).collect::<Vec<_>>())
                    .map(|r| r.map)
                    .unwrap_or(f64::NAN);
                (vl, map)
            }
            _ => (f64::NAN, f64::NAN),
        };
        let fmt = |x: f64| if x.is_nan() { String::new() } else { format!("{x}") };
        log.push_str(&format!("{epoch},{loss},{},{}\n", fmt(val_loss), fmt(val_map)));
        fs::write(&log_path, &log).map_err(|e| emograph::Error::Io { path: log_path.clone(), source: e })?;
        println!("{epoch:>6} {loss:>12.6} {val_loss:>12.6} {val_map:>8.4}");
        Ok(())
    });
    // Divergence and log-write failures both surface here.
    let outcome = outcome.map_err(|e| CliError::runtime(e.to_string()))?;
    let path = ctx.out(CHECKPOINT_FILE);
    write(&path, model.to_checkpoint_json(Some(&meta), Some(&outcome.optimizer)))?;
    println!("wrote {} and {}", path.display(), log_path.display());
    Ok(())
}

pub fn eval(ctx: &Ctx) -> Result<(), CliError> {
    let model = ctx.checkpoint()?;
    let corpus = ctx.corpus()?;
    let test = corpus
        .get("test")
        .filter(|c| !c.is_empty())
        .ok_or_else(|| CliError::usage("test_captions is not set; preprocess a test split to evaluate"))?;
    let preds = split_predictions(&model, test, &ctx.graphs("test")?)?;
    let mut rep = report(&preds, test)?;
    rep.meta = Some(ctx.meta(Stage::Train)?);
    let path = ctx.out(EVAL_FILE);
    write(&path, pretty(&rep))?;
    println!("{}", rep.to_table());
    println!("wrote {}", path.display());
    Ok(())
}

pub fn infer(ctx: &Ctx, texts: &[String], input: Option<&Path>, output: Option<&Path>) -> Result<(), CliError> {
    let mut captions: Vec<Caption> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Caption {
            id: format!("text-{}", i + 1),
            text: t.clone(),
            labels: vec![],
            vad: [0.5; 3],
        })
        .collect();
    if let Some(path) = input {
        if !path.is_file() {
            return Err(CliError::input(format!("no such file {}", path.display())));
        }
        if path.extension().is_some_and(|e| e == "jsonl") {
            captions.extend(load_captions(path, ctx.cfg.f64("vad_scale"))?);
        } else {
            let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            captions.extend(text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| Caption {
                id: format!("line-{}", i + 1),
                text: l.trim().to_string(),
                labels: vec![],
                vad: [0.5; 3],
            }));
        }
    }
    if captions.is_empty() {
        return Err(CliError::usage("nothing to infer; pass --text or --input"));
    }
    let predictor = ctx.predictor()?;
    let preds = predictor.predict_parallel(&captions, ctx.cfg.threads()?)?;
    let k = ctx.cfg.usize("top_k")?;
    let mut out = serde_json::to_string(&serde_json::json!({ "meta": ctx.meta(Stage::Train)? })).unwrap();
    out.push('\n');
    for p in &preds {
        let row = p.to_row(k);
        out.push_str(&serde_json::to_string(&row).unwrap());
        out.push('\n');
        let top: Vec<String> = row.top.iter().map(|(n, s)| format!("{n} {s:.3}")).collect();
        println!(
            "{}\t{}\tVAD {:.3} {:.3} {:.3}{}",
            row.id,
            top.join(", "),
            row.vad[0],
            row.vad[1],
            row.vad[2],
            if row.degenerate { "\t(degenerate)" } else { "" }
        );
    }
    let path = output.map(Path::to_path_buf).unwrap_or_else(|| ctx.out(PREDICTIONS_FILE));
    write(&path, out)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn bench(ctx: &Ctx) -> Result<(), CliError> {
    let captions = ctx.captions("test_captions")?;
    let predictor = ctx.predictor()?;
    let warmup = ctx.cfg.usize("warmup")?;
    let reps = ctx.cfg.usize("reps")?;
    let mut rep = bench_inference(&captions, &predictor, warmup, reps).map_err(|e| CliError::usage(e.to_string()))?;
    rep.meta = Some(ctx.meta(Stage::Train)?);
    let path = ctx.out(LATENCY_FILE);
    write(&path, pretty(&rep))?;
    println!("{}", rep.to_table());
    println!("wrote {}", path.display());
    std::io::stdout().flush().ok();
    Ok(())
}
