//! Command-line interface.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use emotrans_core::gradcheck::{gradient_check, GradCheckInstance, DEFAULT_STEP};
use emotrans_core::metrics::{prototype_similarity, weighted_prf};
use emotrans_core::trainer::{self, EpochStats, TrainData, ValidationData};
use emotrans_core::{
    oracle, AttentionMode, DescriptionMode, EmbeddingMatrix, LabelSet, Matrix, TrainConfig,
    TransferMode,
};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::corpus_file::{load_corpus, load_corpus_lenient, scan_labels};
use crate::descriptions::{encoder_inputs, load_descriptions};
use crate::predictions::{align, read_predictions, records_for, write_predictions};
use crate::report::{matrix_csv, report_json, report_text};
use crate::synthetic::{ToyConfig, ToyCorpus};
use crate::tensor_store::{write_manifest, EmbeddingStore};
use crate::workflow::{
    check_descriptions, encode_corpus, predict_corpus, prototype_matrix, unseen_labels,
};

pub const SEED_ENV: &str = "EMOTRANS_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "emotrans",
    version,
    about = "Zero-shot emotion recognition in conversation by transition transfer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train transitions and adapter on a seen-label corpus.
    Train(TrainArgs),
    /// Predict unseen labels for a corpus with a trained checkpoint.
    Predict(PredictArgs),
    /// Weighted precision/recall/F1 over unseen labels.
    Eval(EvalArgs),
    /// Compare analytic gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Export prototype similarities and enhanced utterance vectors.
    Inspect(InspectArgs),
    /// Check the CRF and Viterbi recursions against brute-force enumeration.
    Oracle(OracleArgs),
    /// Write assembled description texts (or generation prompts) for the encoder.
    Assemble(AssembleArgs),
    /// Generate a synthetic corpus, descriptions and embedding manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DescriptionArgs {
    /// Use dictionary descriptions without generated sentences.
    #[arg(long, conflicts_with = "desc_count")]
    pub no_led: bool,
    /// Number of generated sentences per description.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub desc_count: Option<u8>,
}

impl DescriptionArgs {
    pub fn mode(&self) -> DescriptionMode {
        if self.no_led {
            DescriptionMode::DictOnly
        } else {
            DescriptionMode::Full {
                count: self.desc_count.map_or(2, usize::from),
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training corpus (TSV) labelled with seen emotions.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Embedding manifest file or directory.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Emotion description file (JSONL).
    #[arg(long)]
    pub descriptions: PathBuf,
    /// Output directory for the checkpoint and train.log.
    #[arg(long)]
    pub out: PathBuf,
    /// Seen labels, comma separated; defaults to the labels in the corpus.
    #[arg(long, value_delimiter = ',')]
    pub seen: Vec<String>,
    /// Validation corpus labelled with unseen emotions; selects the best epoch.
    #[arg(long)]
    pub valid_corpus: Option<PathBuf>,
    /// Unseen labels, comma separated; defaults to described words outside the seen set.
    #[arg(long, value_delimiter = ',')]
    pub unseen: Vec<String>,
    /// Peak learning rate.
    #[arg(long, default_value_t = 2e-5)]
    pub lr: f64,
    /// Conversations per batch.
    #[arg(long, default_value_t = 4)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Linear warmup steps.
    #[arg(long, default_value_t = 100)]
    pub warmup: u64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Gaussian attention width; repeat to sweep, one sigma_<value>/ directory each.
    #[arg(long, default_values_t = [0.5])]
    pub sigma: Vec<f64>,
    /// Similarity temperature.
    #[arg(long, default_value_t = 0.02)]
    pub tau: f64,
    #[command(flatten)]
    pub description: DescriptionArgs,
    /// Disable utterance self-attention.
    #[arg(long, conflicts_with = "plain_sa")]
    pub no_gsa: bool,
    /// Self-attention without the Gaussian distance kernel.
    #[arg(long)]
    pub plain_sa: bool,
    /// Train per-utterance cross-entropy instead of the CRF.
    #[arg(long)]
    pub no_crf: bool,
    /// Freeze the adapter at the identity.
    #[arg(long)]
    pub no_adapter: bool,
    #[arg(long, default_value_t = 0.01)]
    pub weight_decay: f64,
    /// Clamp negative transfer scores to zero before normalizing.
    #[arg(long)]
    pub clamp_transfer: bool,
}

impl TrainArgs {
    pub fn config(&self, sigma: f64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            warmup_steps: self.warmup,
            seed: self.seed,
            sigma,
            tau: self.tau,
            led_mode: self.description.mode(),
            attention: if self.no_gsa {
                AttentionMode::Disabled
            } else if self.plain_sa {
                AttentionMode::Plain
            } else {
                AttentionMode::Gaussian
            },
            crf_enabled: !self.no_crf,
            adapter_enabled: !self.no_adapter,
            transfer: if self.clamp_transfer {
                TransferMode::Clamped
            } else {
                TransferMode::Raw
            },
            weight_decay: self.weight_decay,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct UnseenArgs {
    /// Unseen labels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub unseen: Vec<String>,
    /// Description file; unseen labels default to its words outside the seen set.
    #[arg(long)]
    pub descriptions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[command(flatten)]
    pub labels: UnseenArgs,
    /// Prediction records (JSONL).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Corpus with gold unseen labels; other labels are ignored.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub labels: UnseenArgs,
    /// Prediction records to score.
    #[arg(long, conflicts_with_all = ["checkpoint", "embeddings"])]
    pub predictions: Option<PathBuf>,
    /// Checkpoint to predict with when no prediction file is given.
    #[arg(long, requires = "embeddings")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Seen labels, needed with --predictions when unseen labels come from descriptions.
    #[arg(long, value_delimiter = ',')]
    pub seen: Vec<String>,
    /// Directory for report.txt and report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    pub instances: u64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    #[arg(long, default_value_t = 4)]
    pub max_labels: usize,
    #[arg(long, default_value_t = 8)]
    pub max_dim: usize,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    /// Maximum accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long)]
    pub no_adapter: bool,
    #[arg(long)]
    pub no_crf: bool,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[command(flatten)]
    pub labels: UnseenArgs,
    /// Corpus whose enhanced utterance vectors are exported.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 6)]
    pub max_n: usize,
    #[arg(long, default_value_t = 4)]
    pub max_labels: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[arg(long)]
    pub descriptions: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub description: DescriptionArgs,
    /// Emit `[CLS] word [SEP]` texts.
    #[arg(long, conflicts_with_all = ["no_led", "desc_count", "prompts"])]
    pub word_only: bool,
    /// Emit generation prompts instead of description texts.
    #[arg(long)]
    pub prompts: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub seen: usize,
    #[arg(long, default_value_t = 2)]
    pub unseen: usize,
    #[arg(long, default_value_t = 50)]
    pub train: usize,
    #[arg(long, default_value_t = 30)]
    pub test: usize,
    #[arg(long, default_value_t = 20)]
    pub valid: usize,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    /// Probability that an utterance keeps the previous label.
    #[arg(long, default_value_t = 0.8)]
    pub stay: f64,
}

/// Failure kinds mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad invocation, such as a missing input path; exit code 2.
    Usage(String),
    /// Anything else; exit code 1.
    Internal(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Internal(e.into())
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Internal(e) => write!(f, "{e:#}"),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn require(path: &Path, flag: &str) -> CmdResult {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "{flag}: no such file or directory: {}",
            path.display()
        )))
    }
}

fn require_opt(path: Option<&PathBuf>, flag: &str) -> CmdResult {
    path.map_or(Ok(()), |p| require(p, flag))
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Train(a) => train(&a),
        Command::Predict(a) => predict(&a),
        Command::Eval(a) => eval(&a),
        Command::Gradcheck(a) => gradcheck(&a),
        Command::Inspect(a) => inspect(&a),
        Command::Oracle(a) => run_oracle(&a),
        Command::Assemble(a) => assemble(&a),
        Command::Synth(a) => synth(&a),
    }
}

fn log_line(s: &EpochStats) -> String {
    let mut line = format!(
        "epoch {} loss {:.6} train_seen_wf1 {:.4}",
        s.epoch, s.mean_loss, s.train_seen_wf1
    );
    if let Some(v) = s.validation_wf1 {
        write!(line, " valid_unseen_wf1 {v:.4}").unwrap();
    }
    write!(line, " steps {}", s.steps).unwrap();
    line
}

fn train(a: &TrainArgs) -> CmdResult {
    require(&a.corpus, "--corpus")?;
    require(&a.embeddings, "--embeddings")?;
    require(&a.descriptions, "--descriptions")?;
    require_opt(a.valid_corpus.as_ref(), "--valid-corpus")?;
    if a.sigma.is_empty() {
        return Err(Failure::Usage("--sigma needs a value".into()));
    }

    let seen_words = if a.seen.is_empty() {
        scan_labels(&a.corpus)?
    } else {
        a.seen.clone()
    };
    let seen = LabelSet::seen(&seen_words)?;
    seen.check_usable()?;
    let protos = load_descriptions(&a.descriptions)?;
    let mode = a.description.mode();
    check_descriptions(&a.descriptions, &protos, &seen, mode)?;
    let corpus = load_corpus(&a.corpus, &seen)?;
    let store = EmbeddingStore::open(&a.embeddings)?;
    let train_set = encode_corpus(&store, &corpus)?;
    let seen_p = prototype_matrix(&store, mode, &seen)?;

    let validation = match &a.valid_corpus {
        Some(path) => {
            let unseen = unseen_labels(&a.unseen, Some(&protos), &seen)?;
            check_descriptions(&a.descriptions, &protos, &unseen, mode)?;
            let convs = load_corpus_lenient(path, &unseen)?;
            Some((
                encode_corpus(&store, &convs)?,
                prototype_matrix(&store, mode, &unseen)?,
            ))
        }
        None => None,
    };

    let sweep = a.sigma.len() > 1;
    for &sigma in &a.sigma {
        let cfg = a.config(sigma);
        let out = if sweep {
            a.out.join(format!("sigma_{sigma}"))
        } else {
            a.out.clone()
        };
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let data = TrainData {
            conversations: &train_set,
            seen_prototypes: &seen_p,
        };
        let valid = validation.as_ref().map(|(c, p)| ValidationData {
            conversations: c,
            unseen_prototypes: p,
        });
        let mut log = String::new();
        let outcome = trainer::train(&data, valid.as_ref(), &cfg, |s| {
            let line = log_line(s);
            println!(
                "{}{line}",
                if sweep {
                    format!("sigma {sigma} ")
                } else {
                    String::new()
                }
            );
            log.push_str(&line);
            log.push('\n');
        })?;
        let ck = &outcome.checkpoint;
        writeln!(
            log,
            "selected epoch {} score {:.6} ({:?})",
            ck.epoch, ck.score, ck.metric
        )
        .unwrap();
        save_checkpoint(&out, ck, &seen)?;
        write_file(&out.join("train.log"), &log)?;
        println!(
            "checkpoint written to {} (epoch {})",
            out.display(),
            ck.epoch
        );
    }
    Ok(())
}

fn resolve_unseen(labels: &UnseenArgs, seen: &LabelSet) -> anyhow::Result<LabelSet> {
    let protos = labels
        .descriptions
        .as_deref()
        .map(load_descriptions)
        .transpose()?;
    if labels.unseen.is_empty() && protos.is_none() {
        bail!("give --unseen or --descriptions");
    }
    Ok(unseen_labels(&labels.unseen, protos.as_deref(), seen)?)
}

fn predict(a: &PredictArgs) -> CmdResult {
    require(&a.checkpoint, "--checkpoint")?;
    require(&a.corpus, "--corpus")?;
    require(&a.embeddings, "--embeddings")?;
    require_opt(a.labels.descriptions.as_ref(), "--descriptions")?;
    let (ckpt, seen) = load_checkpoint(&a.checkpoint)?;
    let unseen = resolve_unseen(&a.labels, &seen)?;
    let corpus = load_corpus_lenient(&a.corpus, &unseen)?;
    let store = EmbeddingStore::open(&a.embeddings)?;
    let preds = predict_corpus(&ckpt, &seen, &unseen, &store, &corpus)?;
    let records: Vec<_> = corpus
        .iter()
        .zip(&preds)
        .flat_map(|(c, p)| records_for(c, p, &seen, &unseen))
        .collect();
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_predictions(&a.out, &records)?;
    println!(
        "{} predictions written to {}",
        records.len(),
        a.out.display()
    );
    Ok(())
}

fn eval(a: &EvalArgs) -> CmdResult {
    require(&a.corpus, "--corpus")?;
    require_opt(a.labels.descriptions.as_ref(), "--descriptions")?;
    require_opt(a.predictions.as_ref(), "--predictions")?;
    require_opt(a.checkpoint.as_ref(), "--checkpoint")?;
    require_opt(a.embeddings.as_ref(), "--embeddings")?;

    let (gold, pred, unseen) = match (&a.predictions, &a.checkpoint, &a.embeddings) {
        (Some(path), _, _) => {
            let seen = LabelSet::seen(&a.seen)?;
            let unseen = resolve_unseen(&a.labels, &seen)?;
            let corpus = load_corpus_lenient(&a.corpus, &unseen)?;
            let records = read_predictions(path)?;
            let (g, p) = align(&corpus, &records, &unseen, path)?;
            (g, p, unseen)
        }
        (None, Some(ck), Some(emb)) => {
            let (ckpt, seen) = load_checkpoint(ck)?;
            let unseen = resolve_unseen(&a.labels, &seen)?;
            let corpus = load_corpus_lenient(&a.corpus, &unseen)?;
            let store = EmbeddingStore::open(emb)?;
            let preds = predict_corpus(&ckpt, &seen, &unseen, &store, &corpus)?;
            let (mut g, mut p) = (Vec::new(), Vec::new());
            for (c, pr) in corpus.iter().zip(&preds) {
                for (u, &y) in c.utterances.iter().zip(&pr.unseen_pred) {
                    if let Some(gl) = u.gold_label {
                        g.push(gl);
                        p.push(y);
                    }
                }
            }
            (g, p, unseen)
        }
        _ => {
            return Err(Failure::Usage(
                "give --predictions or --checkpoint with --embeddings".into(),
            ))
        }
    };
    let report = weighted_prf(&gold, &pred, unseen.len())?;
    let text = report_text(&report, &unseen);
    print!("{text}");
    if let Some(out) = &a.out {
        write_file(&out.join("report.txt"), &text)?;
        write_file(&out.join("report.json"), &report_json(&report, &unseen))?;
    }
    Ok(())
}

fn gradcheck(a: &GradcheckArgs) -> CmdResult {
    let mut worst = 0.0f64;
    for k in 0..a.instances {
        let seed = a.seed.wrapping_add(k);
        let mut inst =
            GradCheckInstance::random(seed, a.max_len, a.max_labels, a.max_dim, !a.no_adapter);
        inst.config.crf_enabled = !a.no_crf;
        let report = gradient_check(&inst, a.step)?;
        let blocks: Vec<String> = report
            .blocks
            .iter()
            .map(|b| format!("{} {:.3e}", b.name, b.max_relative_error))
            .collect();
        println!(
            "instance {seed} (N={}, n={}, d={}): {}",
            inst.embeddings.rows(),
            inst.seen_prototypes.rows(),
            inst.embeddings.cols(),
            blocks.join(", ")
        );
        worst = worst.max(report.max_relative_error());
    }
    println!(
        "max relative error {worst:.3e} (tolerance {:.1e})",
        a.tolerance
    );
    if worst > a.tolerance {
        return Err(anyhow::anyhow!("gradient check failed").into());
    }
    Ok(())
}

fn inspect(a: &InspectArgs) -> CmdResult {
    require(&a.checkpoint, "--checkpoint")?;
    require(&a.embeddings, "--embeddings")?;
    require_opt(a.labels.descriptions.as_ref(), "--descriptions")?;
    require_opt(a.corpus.as_ref(), "--corpus")?;
    let (ckpt, seen) = load_checkpoint(&a.checkpoint)?;
    let store = EmbeddingStore::open(&a.embeddings)?;
    let mode = ckpt.config.led_mode;
    let have_unseen = !a.labels.unseen.is_empty() || a.labels.descriptions.is_some();
    let unseen = if have_unseen {
        Some(resolve_unseen(&a.labels, &seen)?)
    } else {
        None
    };

    let mut words: Vec<String> = seen.words().to_vec();
    let seen_p = prototype_matrix(&store, mode, &seen)?;
    let mut rows: Vec<&[f64]> = seen_p.iter_rows().collect();
    let unseen_p = unseen
        .as_ref()
        .map(|u| prototype_matrix(&store, mode, u))
        .transpose()?;
    if let (Some(u), Some(p)) = (&unseen, &unseen_p) {
        words.extend(u.words().iter().cloned());
        rows.extend(p.iter_rows());
    }
    let raw = Matrix::from_rows(&rows)?;
    let encoded = ckpt.model.encode_prototypes(&raw)?;
    let sim = prototype_similarity(&encoded)?;
    write_file(&a.out.join("prototypes.csv"), &matrix_csv(&words, &sim))?;
    let mut tensors = vec![EmbeddingMatrix::from_matrix(
        "prototypes.encoded",
        &encoded,
        words,
    )?];

    if let Some(path) = &a.corpus {
        let Some(unseen) = &unseen else {
            return Err(Failure::Usage(
                "--corpus needs --unseen or --descriptions".into(),
            ));
        };
        let corpus = load_corpus_lenient(path, unseen)?;
        let preds = predict_corpus(&ckpt, &seen, unseen, &store, &corpus)?;
        let total: usize = corpus.iter().map(|c| c.len()).sum();
        let mut h = Matrix::zeros(total, ckpt.model.dim());
        let mut keys = Vec::with_capacity(total);
        let mut r = 0;
        for (c, p) in corpus.iter().zip(&preds) {
            for (i, row) in p.representations.iter_rows().enumerate() {
                h.row_mut(r).copy_from_slice(row);
                keys.push(c.utterance_key(i));
                r += 1;
            }
        }
        tensors.push(EmbeddingMatrix::from_matrix("h_prime", &h, keys)?);
    }
    write_manifest(&tensors, &a.out.join("vectors"))?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn run_oracle(a: &OracleArgs) -> CmdResult {
    let started = Instant::now();
    let report = oracle::run_suite(a.trials, a.max_n, a.max_labels, a.seed, a.tolerance)?;
    println!(
        "trials {} (N <= {}, n <= {}) in {:.2}s",
        report.trials,
        a.max_n,
        a.max_labels,
        started.elapsed().as_secs_f64()
    );
    println!("max log-partition error {:.3e}", report.max_partition_error);
    println!("max marginal error      {:.3e}", report.max_marginal_error);
    println!("max best-path error     {:.3e}", report.max_best_path_error);
    println!("max prefix-max error    {:.3e}", report.max_prefix_error);
    if report.passed() {
        println!("all trials passed");
        Ok(())
    } else {
        Err(anyhow::anyhow!("{} of {} trials failed", report.failures, report.trials).into())
    }
}

fn assemble(a: &AssembleArgs) -> CmdResult {
    require(&a.descriptions, "--descriptions")?;
    let protos = load_descriptions(&a.descriptions)?;
    let mut out = String::new();
    if a.prompts {
        for p in &protos {
            let line = serde_json::json!({
                "word": p.word,
                "prompt": emotrans_core::led::build_prompt(&p.word)?,
            });
            writeln!(out, "{line}").unwrap();
        }
    } else {
        let mode = if a.word_only {
            DescriptionMode::WordOnly
        } else {
            a.description.mode()
        };
        for input in encoder_inputs(&protos, mode)? {
            writeln!(out, "{}", serde_json::to_string(&input)?).unwrap();
        }
    }
    write_file(&a.out, &out)?;
    Ok(())
}

fn synth(a: &SynthArgs) -> CmdResult {
    let cfg = ToyConfig {
        dim: a.dim,
        seen: a.seen,
        unseen: a.unseen,
        train_conversations: a.train,
        valid_conversations: a.valid,
        test_conversations: a.test,
        noise: a.noise,
        stay: a.stay,
        seed: a.seed,
        ..ToyConfig::default()
    };
    let files = ToyCorpus::generate(&cfg)?.write_to(&a.out)?;
    println!("train corpus  {}", files.train_corpus.display());
    println!("valid corpus  {}", files.valid_corpus.display());
    println!("test corpus   {}", files.test_corpus.display());
    println!("descriptions  {}", files.descriptions.display());
    println!("embeddings    {}", files.embeddings.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn train_defaults_match_core_defaults() {
        let cli = Cli::parse_from([
            "emotrans",
            "train",
            "--corpus",
            "c",
            "--embeddings",
            "e",
            "--descriptions",
            "d",
            "--out",
            "o",
        ]);
        let Command::Train(a) = cli.command else {
            panic!("not train")
        };
        if std::env::var_os(SEED_ENV).is_none() {
            assert_eq!(a.config(0.5), TrainConfig::default());
        }
        assert_eq!(a.sigma, vec![0.5]);
    }

    #[test]
    fn ablation_flags_map_to_config() {
        let cli = Cli::parse_from([
            "emotrans",
            "train",
            "--corpus",
            "c",
            "--embeddings",
            "e",
            "--descriptions",
            "d",
            "--out",
            "o",
            "--no-led",
            "--plain-sa",
            "--no-crf",
            "--no-adapter",
            "--clamp-transfer",
            "--sigma",
            "0.1",
            "--sigma",
            "2",
        ]);
        let Command::Train(a) = cli.command else {
            panic!("not train")
        };
        let c = a.config(2.0);
        assert_eq!(c.led_mode, DescriptionMode::DictOnly);
        assert_eq!(c.attention, AttentionMode::Plain);
        assert!(!c.crf_enabled && !c.adapter_enabled);
        assert_eq!(c.transfer, TransferMode::Clamped);
        assert_eq!(a.sigma, vec![0.1, 2.0]);
    }

    #[test]
    fn desc_count_is_bounded() {
        let base = [
            "emotrans",
            "train",
            "--corpus",
            "c",
            "--embeddings",
            "e",
            "--descriptions",
            "d",
            "--out",
            "o",
        ];
        for (v, ok) in [("1", true), ("3", true), ("0", false), ("4", false)] {
            let args: Vec<&str> = base.iter().copied().chain(["--desc-count", v]).collect();
            assert_eq!(Cli::try_parse_from(args).is_ok(), ok, "{v}");
        }
        let args: Vec<&str> = base
            .iter()
            .copied()
            .chain(["--no-led", "--desc-count", "2"])
            .collect();
        assert!(Cli::try_parse_from(args).is_err());
    }
}
