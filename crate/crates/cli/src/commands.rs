use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use kanhope::agreement::{annotator_summary, coincidence_matrix, krippendorff_alpha, load_annotations, read_roster};
use kanhope::classifiers::{Classifier, ClassifierModel};
use kanhope::corpus::{
    corpus_stats, filter_labels, load_dataset, save_dataset, split, Comment, Dataset, Label,
};
use kanhope::dualchannel::{
    encode_dataset, grad_check, history_csv, predict_labels, separable_set, train, Channels, DualChannelModel,
    Example, FusionMode, ModelConfig, TranslationProvider,
};
use kanhope::experiment::{confusion_of, fit_baseline, fit_features, vectorize, BaselineKind};
use kanhope::features::TfidfModel;
use kanhope::hashing::derive_indexed_seed;
use kanhope::metrics::{self, ConfusionMatrix, EvalReport, RunMeta};
use kanhope::preprocess::{clean, clean_dataset, codemix_type, CodeMixConfig, EmojiMap, MixType};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::manifest::{compare_outputs, hash_inputs, hash_outputs, Manifest, MANIFEST_VERSION};
use crate::{Cli, Command, Invalid, ModelKind, TextInput, TrainArgs};

const ARTIFACT_VERSION: u32 = 1;
const DC_DISPLAY_NAME: &str = "Dual-Channel";

/// State of one invocation: the resolved config and the files it touched.
struct Ctx {
    cfg: RunConfig,
    seed: u64,
    out: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Ctx {
    /// Registers an input file, failing with a validation error when it is
    /// missing.
    fn input(&mut self, path: &Path) -> Result<PathBuf> {
        if !path.is_file() {
            return Err(Invalid(format!("input {} does not exist", path.display())).into());
        }
        if !self.inputs.contains(&path.to_path_buf()) {
            self.inputs.push(path.to_path_buf());
        }
        Ok(path.to_path_buf())
    }

    /// Path of an output under `--out`, with its directory created.
    fn output(&mut self, rel: impl AsRef<Path>) -> Result<PathBuf> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        if !self.outputs.contains(&path) {
            self.outputs.push(path.clone());
        }
        Ok(path)
    }

    fn write(&mut self, rel: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.output(rel)?;
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    fn write_json(&mut self, rel: impl AsRef<Path>, value: &impl Serialize) -> Result<PathBuf> {
        let json = serde_json::to_string_pretty(value)?;
        self.write(rel, json + "\n")
    }

    fn load(&mut self, path: &Path) -> Result<Dataset> {
        let path = self.input(path)?;
        let labels = self.cfg.label_map()?;
        load_dataset(&path, &labels).with_context(|| format!("loading {}", path.display()))
    }

    fn cleaning(&self) -> Result<bool> {
        self.cfg.parse("preprocess.clean")
    }
}

pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    if let Command::Replay { manifest } = &cli.command {
        return replay(manifest, &cli.out);
    }
    if let Some(path) = &cli.config {
        if !path.is_file() {
            return Err(Invalid(format!("config file {} does not exist", path.display())).into());
        }
    }
    let cfg = RunConfig::resolve(cli.config.as_deref(), &cli.set)?;
    execute(cli, cfg, argv).map(|_| ())
}

/// Runs a subcommand and, unless it only wrote to stdout, records a
/// manifest. Returns the manifest.
fn execute(cli: Cli, cfg: RunConfig, argv: Vec<String>) -> Result<Option<Manifest>> {
    let mut ctx = Ctx {
        cfg,
        seed: cli.seed,
        out: cli.out.clone(),
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    let name = match cli.command {
        Command::Stats { inputs, clean } => stats(&mut ctx, &inputs, clean)?,
        Command::Clean(t) => clean_cmd(&mut ctx, t)?,
        Command::Codemix(t) => codemix(&mut ctx, t)?,
        Command::Agreement { input, roster } => agreement(&mut ctx, &input, roster.as_deref())?,
        Command::Split {
            input,
            fractions,
            no_stratify,
            out_prefix,
        } => split_cmd(&mut ctx, &input, fractions, no_stratify, &out_prefix)?,
        Command::Featurize {
            train,
            ngram,
            min_df,
            analyzer,
        } => featurize(&mut ctx, &train, ngram, min_df, analyzer)?,
        Command::Train(args) => train_cmd(&mut ctx, args)?,
        Command::Eval { models, test } => eval(&mut ctx, &models, &test)?,
        Command::Report { inputs } => report(&mut ctx, &inputs)?,
        Command::Gradcheck {
            dim,
            vocab,
            models,
            epsilon,
        } => gradcheck(&mut ctx, dim, vocab, models, epsilon)?,
        Command::Replay { .. } => unreachable!("handled by run"),
    };
    let Some(name) = name else { return Ok(None) };

    // the manifest's own hash would otherwise chase itself
    let manifest_path = ctx.out.join("manifests").join(format!("{name}.json"));
    ctx.outputs.retain(|p| p != &manifest_path);
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        argv,
        seed: ctx.seed,
        cwd: std::env::current_dir()?,
        config: ctx.cfg.values().clone(),
        inputs: hash_inputs(&ctx.inputs)?,
        outputs: hash_outputs(&ctx.out, &ctx.outputs)?,
        created: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    std::fs::create_dir_all(manifest_path.parent().unwrap())?;
    manifest.save(&manifest_path)?;
    Ok(Some(manifest))
}

fn replay(manifest_path: &Path, out: &Path) -> Result<()> {
    use clap::Parser;

    if !manifest_path.is_file() {
        return Err(Invalid(format!("manifest {} does not exist", manifest_path.display())).into());
    }
    let manifest = Manifest::load(manifest_path)?;
    let out = std::env::current_dir()?.join(out);
    std::env::set_current_dir(&manifest.cwd)
        .with_context(|| format!("entering recorded directory {}", manifest.cwd.display()))?;
    for (path, want) in &manifest.inputs {
        let got = crate::manifest::sha256_file(Path::new(path))?;
        if &got != want {
            bail!("input {path} changed since the recorded run");
        }
    }
    let argv: Vec<String> = std::iter::once("kanhope".to_string())
        .chain(manifest.argv.iter().cloned())
        .collect();
    let mut cli = Cli::try_parse_from(&argv).map_err(|e| Invalid(format!("recorded arguments: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(Invalid("a manifest cannot record a replay".into()).into());
    }
    cli.seed = manifest.seed;
    cli.out = out.clone();
    let cfg = RunConfig::from_map(manifest.config.clone())?;
    execute(cli, cfg, manifest.argv.clone())?;

    let diffs = compare_outputs(&manifest, &out);
    for (file, why) in &diffs {
        eprintln!("{file}: {why}");
    }
    if !diffs.is_empty() {
        bail!("{} of {} outputs differ", diffs.len(), manifest.outputs.len());
    }
    println!("replayed {} outputs identically", manifest.outputs.len());
    Ok(())
}

fn concat(parts: Vec<Dataset>) -> Result<Dataset> {
    if parts.len() == 1 {
        return Ok(parts.into_iter().next().unwrap());
    }
    let comments: Vec<Comment> = parts
        .iter()
        .flat_map(|d| d.comments())
        .enumerate()
        .map(|(i, c)| Comment {
            id: i as u64,
            ..c.clone()
        })
        .collect();
    Ok(Dataset::new("combined", comments)?)
}

fn stats(ctx: &mut Ctx, inputs: &[PathBuf], clean: bool) -> Result<Option<String>> {
    let parts = inputs.iter().map(|p| ctx.load(p)).collect::<Result<Vec<_>>>()?;
    let mut d = concat(parts)?;
    if clean {
        d = clean_dataset(&d, &EmojiMap::default())?;
    }
    let s = corpus_stats(&d);
    ctx.write_json("reports/stats.json", &s)?;
    println!("posts      {:>8}", s.num_posts);
    println!("tokens     {:>8}", s.num_tokens);
    println!("vocabulary {:>8}", s.vocab_size);
    println!("sentences  {:>8}", s.num_sentences);
    println!("tokens/post    {:>4}", s.tokens_per_post);
    println!("sentences/post {:>4}", s.sentences_per_post);
    Ok(Some("stats".into()))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}

fn clean_cmd(ctx: &mut Ctx, t: TextInput) -> Result<Option<String>> {
    let emoji = EmojiMap::default();
    if let Some(text) = t.text {
        println!("{}", clean(&text, &emoji));
        return Ok(None);
    }
    let input = t.input.expect("clap requires --in or --text");
    let d = ctx.load(&input)?;
    let cleaned = clean_dataset(&d, &emoji)?;
    let path = ctx.output(format!("splits/{}.clean.csv", stem(&input)))?;
    save_dataset(&cleaned, &path)?;
    println!("{} comments -> {}", cleaned.len(), path.display());
    Ok(Some("clean".into()))
}

#[derive(Serialize)]
struct CodemixRow<'a> {
    id: u64,
    mix_type: MixType,
    token_tags: &'a [kanhope::preprocess::TokenTag],
}

fn codemix(ctx: &mut Ctx, t: TextInput) -> Result<Option<String>> {
    let config = CodeMixConfig::default();
    if let Some(text) = t.text {
        let p = codemix_type(&text, &config);
        println!("{}", serde_json::to_string(&p)?);
        return Ok(None);
    }
    let input = t.input.expect("clap requires --in or --text");
    let d = ctx.load(&input)?;
    let mut lines = String::new();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for c in d.comments() {
        let p = codemix_type(&c.text, &config);
        *counts.entry(format!("{:?}", p.mix_type)).or_default() += 1;
        lines.push_str(&serde_json::to_string(&CodemixRow {
            id: c.id,
            mix_type: p.mix_type,
            token_tags: &p.token_tags,
        })?);
        lines.push('\n');
    }
    ctx.write("reports/codemix.jsonl", lines)?;
    for (t, n) in &counts {
        println!("{t:<8} {n:>7}");
    }
    Ok(Some("codemix".into()))
}

fn agreement(ctx: &mut Ctx, input: &Path, roster: Option<&Path>) -> Result<Option<String>> {
    let input = ctx.input(input)?;
    let records = load_annotations(&input, &ctx.cfg.label_map()?)?;
    let alpha = krippendorff_alpha(&records)?;
    let coincidence = coincidence_matrix(&records)?;
    let summary = match roster {
        Some(r) => {
            let r = ctx.input(r)?;
            let file = std::fs::File::open(&r).with_context(|| format!("opening {}", r.display()))?;
            Some(annotator_summary(&records, &read_roster(file)?))
        }
        None => None,
    };
    let body = serde_json::json!({
        "alpha": alpha,
        "coincidence": coincidence,
        "annotators": summary,
    });
    ctx.write_json("reports/agreement.json", &body)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({ "alpha": alpha, "coincidence": coincidence }))?
    );
    Ok(Some("agreement".into()))
}

fn split_cmd(
    ctx: &mut Ctx,
    input: &Path,
    fractions: Option<String>,
    no_stratify: bool,
    prefix: &str,
) -> Result<Option<String>> {
    if let Some(f) = fractions {
        ctx.cfg.set("split.fractions", f)?;
    }
    if no_stratify {
        ctx.cfg.set("split.stratified", "false".into())?;
    }
    let d = ctx.load(input)?;
    let labels = ctx.cfg.label_map()?;
    let keep = ctx
        .cfg
        .list::<String>("split.keep")?
        .iter()
        .map(|s| labels.get(s).ok_or_else(|| Invalid(format!("split.keep: unknown label {s:?}"))))
        .collect::<Result<Vec<Label>, _>>()?;
    // labels are filtered before splitting, never after
    let kept = filter_labels(&d, &keep)?;
    let spec = ctx.cfg.split_spec(ctx.seed)?;
    let (train, dev, test) = split(&kept, &spec)?;
    for (part, name) in [(&train, "train"), (&dev, "dev"), (&test, "test")] {
        let path = ctx.output(format!("splits/{prefix}{name}.csv"))?;
        save_dataset(part, &path)?;
        println!("{name:<5} {:>6}  {}", part.len(), path.display());
    }
    Ok(Some("split".into()))
}

fn featurize(
    ctx: &mut Ctx,
    train: &Path,
    ngram: Option<String>,
    min_df: Option<String>,
    analyzer: Option<String>,
) -> Result<Option<String>> {
    for (key, v) in [("features.ngram", ngram), ("features.min_df", min_df), ("features.analyzer", analyzer)] {
        if let Some(v) = v {
            ctx.cfg.set(key, v)?;
        }
    }
    let mut d = ctx.load(train)?;
    if ctx.cleaning()? {
        d = clean_dataset(&d, &EmojiMap::default())?;
    }
    let model = fit_features(&d, &ctx.cfg.features()?)?;
    let path = ctx.output("models/tfidf.json")?;
    model.save(&path)?;
    println!("{} features from {} comments -> {}", model.vocab_size(), d.len(), path.display());
    Ok(Some("featurize".into()))
}

/// A trained model with what `eval` needs to apply it.
#[derive(Debug, Serialize, Deserialize)]
struct ModelArtifact {
    version: u32,
    kind: String,
    display_name: String,
    seed: u64,
    /// Whether text is cleaned before features or tokenization.
    clean: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<TfidfModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classifier: Option<ClassifierModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dual_channel: Option<DualChannelModel>,
}

impl ModelArtifact {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let a: ModelArtifact =
            serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))?;
        if a.version != ARTIFACT_VERSION {
            return Err(Invalid(format!("{}: model version {} is not {ARTIFACT_VERSION}", path.display(), a.version)).into());
        }
        Ok(a)
    }
}

fn kind_code(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Lr => "lr",
        ModelKind::Nb => "nb",
        ModelKind::Knn => "knn",
        ModelKind::Tree => "tree",
        ModelKind::Forest => "forest",
        ModelKind::Dc => "dc",
    }
}

fn translation_provider(cfg: &RunConfig) -> Result<TranslationProvider> {
    let cache = match cfg.get("translate.cache") {
        "" => None,
        p => Some(PathBuf::from(p)),
    };
    let timeout = Duration::from_secs(cfg.parse("translate.timeout_secs")?);
    Ok(match cfg.get("translate.mode") {
        "identity" => TranslationProvider::identity(),
        "cache" => {
            let path = cache.ok_or_else(|| Invalid("translate.mode = cache needs translate.cache".into()))?;
            TranslationProvider::file_cache(path)?
        }
        "http" => {
            let url = cfg.get("translate.url");
            if url.is_empty() {
                return Err(Invalid("translate.mode = http needs translate.url".into()).into());
            }
            TranslationProvider::http(url, cache)?.with_timeout(timeout)
        }
        other => return Err(Invalid(format!("translate.mode {other:?} is not identity, cache or http")).into()),
    })
}

fn train_cmd(ctx: &mut Ctx, args: TrainArgs) -> Result<Option<String>> {
    let overrides = [
        ("seeds", &args.seeds),
        ("lr.c", &args.c),
        ("nb.alpha", &args.alpha),
        ("knn.k", &args.k),
        ("forest.n_trees", &args.n_trees),
        ("dc.epochs", &args.epochs),
        ("dc.batch_size", &args.batch_size),
        ("dc.learning_rate", &args.learning_rate),
        ("dc.dim", &args.dim),
        ("translate.url", &args.translate_url),
    ];
    for (key, v) in overrides {
        if let Some(v) = v {
            ctx.cfg.set(key, v.clone())?;
        }
    }
    if args.translate_url.is_some() {
        ctx.cfg.set("translate.mode", "http".into())?;
    }
    if let Some(cache) = &args.translation_cache {
        ctx.cfg.set("translate.cache", cache.to_string_lossy().into_owned())?;
        if ctx.cfg.get("translate.mode") == "identity" {
            ctx.cfg.set("translate.mode", "cache".into())?;
        }
    }

    let seeds = ctx.cfg.seeds(ctx.seed)?;
    let clean = ctx.cleaning()?;
    let emoji = EmojiMap::default();
    let prepare = |d: Dataset| if clean { clean_dataset(&d, &emoji) } else { Ok(d) };
    let train_set = prepare(ctx.load(&args.train)?)?;
    let code = kind_code(args.kind);

    if args.kind == ModelKind::Dc {
        let dev_set = match &args.dev {
            Some(p) => Some(prepare(ctx.load(p)?)?),
            None => None,
        };
        let model_cfg = ctx.cfg.dc_model()?;
        if ctx.cfg.get("translate.mode") == "cache" {
            let cache = PathBuf::from(ctx.cfg.get("translate.cache"));
            ctx.input(&cache)?;
        }
        let mut provider = translation_provider(&ctx.cfg)?;
        let tok = model_cfg.tokenizer();
        let (train_ex, _) = encode_dataset(&train_set, &tok, &mut provider)?;
        let dev_ex: Vec<Example> = match &dev_set {
            Some(d) => encode_dataset(d, &tok, &mut provider)?.0,
            None => Vec::new(),
        };
        for &seed in &seeds {
            let tc = ctx.cfg.dc_train(seed)?;
            let init = DualChannelModel::init(model_cfg, seed)?;
            let out = train(init, &train_ex, &dev_ex, &tc)?;
            ctx.write(format!("reports/dc-seed{seed}-history.csv"), history_csv(&out.history))?;
            let artifact = ModelArtifact {
                version: ARTIFACT_VERSION,
                kind: code.into(),
                display_name: DC_DISPLAY_NAME.into(),
                seed,
                clean,
                features: None,
                classifier: None,
                dual_channel: Some(out.model),
            };
            let path = ctx.write(format!("models/dc-seed{seed}.json"), serde_json::to_string(&artifact)?)?;
            println!("seed {seed}: best epoch {} -> {}", out.best_epoch, path.display());
        }
        return Ok(Some("train-dc".into()));
    }

    let kind: BaselineKind = code.parse()?;
    let tfidf = match &args.features {
        Some(p) => {
            let p = ctx.input(p)?;
            TfidfModel::load(&p)?
        }
        None => fit_features(&train_set, &ctx.cfg.features()?)?,
    };
    let (x, y) = vectorize(&tfidf, &train_set)?;
    let params = ctx.cfg.baseline_params()?;
    let mut fitted: Option<ClassifierModel> = None;
    for &seed in &seeds {
        let model = match (&fitted, kind.is_randomized()) {
            (Some(m), false) => m.clone(),
            _ => fit_baseline(kind, &x, &y, tfidf.vocab_size(), &params, seed)?,
        };
        fitted = Some(model.clone());
        let artifact = ModelArtifact {
            version: ARTIFACT_VERSION,
            kind: code.into(),
            display_name: kind.display_name().into(),
            seed,
            clean,
            features: Some(tfidf.clone()),
            classifier: Some(model),
            dual_channel: None,
        };
        let path = ctx.write(format!("models/{code}-seed{seed}.json"), serde_json::to_string(&artifact)?)?;
        println!("seed {seed}: {} -> {}", kind.display_name(), path.display());
    }
    Ok(Some(format!("train-{code}")))
}

fn eval(ctx: &mut Ctx, models: &[PathBuf], test: &Path) -> Result<Option<String>> {
    let raw = ctx.load(test)?;
    let emoji = EmojiMap::default();
    let mut cleaned: Option<Dataset> = None;
    for path in models {
        let path = ctx.input(path)?;
        let a = ModelArtifact::load(&path)?;
        if a.clean && cleaned.is_none() {
            cleaned = Some(clean_dataset(&raw, &emoji)?);
        }
        let d = match (&cleaned, a.clean) {
            (Some(c), true) => c,
            _ => &raw,
        };
        let m: ConfusionMatrix = match (&a.features, &a.classifier, &a.dual_channel) {
            (Some(f), Some(c), None) => {
                let (x, y) = vectorize(f, d)?;
                if c.dim() != f.vocab_size() {
                    return Err(Invalid(format!("{}: classifier and features disagree", path.display())).into());
                }
                confusion_of(c, &x, &y)?
            }
            (None, None, Some(dc)) => {
                let mut provider = translation_provider(&ctx.cfg)?;
                let (ex, _) = encode_dataset(d, &dc.tokenizer(), &mut provider)?;
                let pred = predict_labels(dc, &ex)?;
                let truth: Vec<usize> = ex.iter().map(|e| e.label).collect();
                ConfusionMatrix::from_predictions(&truth, &pred, &Label::CLASS_NAMES)?
            }
            _ => return Err(Invalid(format!("{}: not a model file", path.display())).into()),
        };
        let report = EvalReport::from_matrix(&m, RunMeta::now(a.display_name.clone(), vec![a.seed]))?;
        ctx.write_json(format!("reports/eval-{}-seed{}.json", a.kind, a.seed), &report)?;
        println!(
            "{:<22} seed {:<4} accuracy {:.3}  weighted F1 {:.3}",
            a.display_name, a.seed, report.accuracy, report.weighted_avg.f1
        );
    }
    Ok(Some("eval".into()))
}

fn report(ctx: &mut Ctx, inputs: &[PathBuf]) -> Result<Option<String>> {
    let runs = inputs
        .iter()
        .map(|p| {
            let p = ctx.input(p)?;
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<EvalReport>(&text)
                .map_err(|e| Invalid(format!("{}: not an evaluation report: {e}", p.display())).into())
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, table) = metrics::report(&runs)?;
    ctx.write_json("reports/report.json", &rows)?;
    ctx.write("reports/report.txt", &table)?;
    print!("{table}");
    Ok(Some("report".into()))
}

#[derive(Serialize)]
struct GradcheckRow {
    model: usize,
    fusion: FusionMode,
    max_rel_error: f64,
    per_group: Vec<(String, f64)>,
    checked: usize,
}

const GRADCHECK_TOLERANCE: f64 = 1e-4;

fn gradcheck(ctx: &mut Ctx, dim: usize, vocab: usize, models: usize, epsilon: f64) -> Result<Option<String>> {
    if models == 0 {
        return Err(Invalid("--models must be positive".into()).into());
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Invalid("--epsilon must be positive".into()).into());
    }
    let mut rows = Vec::with_capacity(models);
    for i in 0..models {
        let seed = derive_indexed_seed(ctx.seed, "cli.gradcheck", i as u64);
        let fusion = if i % 2 == 0 { FusionMode::Scalar } else { FusionMode::PerDim };
        let cfg = ModelConfig {
            vocab_size: vocab,
            max_length: 16,
            dim,
            fusion,
            channels: Channels::Dual,
            dropout: 0.0,
        };
        cfg.validate().map_err(|e| Invalid(e.to_string()))?;
        let model = DualChannelModel::random(cfg, seed, 1.0)?;
        // a second draw gives the English channel different ids
        let other = separable_set(&cfg, 8, seed ^ 1);
        let batch: Vec<Example> = separable_set(&cfg, 8, seed)
            .into_iter()
            .zip(other)
            .map(|(a, b)| Example { ids_en: b.ids_cm, ..a })
            .collect();
        let r = grad_check(&model, &batch, epsilon)?;
        rows.push(GradcheckRow {
            model: i,
            fusion,
            max_rel_error: r.max_rel_error,
            per_group: r.per_group,
            checked: r.checked,
        });
    }
    let worst = rows.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    ctx.write_json(
        "reports/gradcheck.json",
        &serde_json::json!({ "max_rel_error": worst, "tolerance": GRADCHECK_TOLERANCE, "models": rows }),
    )?;
    println!("max relative error {worst:.3e} over {models} models");
    if worst.is_nan() || worst >= GRADCHECK_TOLERANCE {
        bail!("gradient check failed: {worst:.3e} >= {GRADCHECK_TOLERANCE:e}");
    }
    Ok(Some("gradcheck".into()))
}
