//! Synthetic corpora with known structure, for tests and demos.
//!
//! Prototypes are random unit vectors. Each unseen prototype is a seen
//! prototype pushed along a random direction, so unseen emotions resemble
//! seen ones. Labels follow a sticky Markov chain and every utterance
//! embedding is its label's prototype plus Gaussian noise.

use std::fs;
use std::path::{Path, PathBuf};

use emotrans_core::{
    Conversation, DescriptionMode, EmbeddingMatrix, EmotionPrototype, EncodedConversation,
    LabelSet, Matrix, Utterance,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus_file::write_corpus;
use crate::descriptions::write_descriptions;
use crate::error::{Error, Result};
use crate::tensor_store::write_manifest;

const SEEN_WORDS: [&str; 7] = [
    "joy", "sadness", "anger", "fear", "disgust", "surprise", "neutral",
];
const UNSEEN_WORDS: [&str; 5] = ["powerful", "peaceful", "scared", "mad", "excited"];

/// Tensor holding every utterance row in a written toy manifest.
pub const UTTERANCE_TENSOR: &str = "utterances";

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub dim: usize,
    pub seen: usize,
    pub unseen: usize,
    pub train_conversations: usize,
    pub valid_conversations: usize,
    pub test_conversations: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that the next utterance keeps the current label.
    pub stay: f64,
    /// Per-coordinate standard deviation of utterance noise.
    pub noise: f64,
    /// Length of the push from a seen prototype to its unseen relative.
    pub unseen_offset: f64,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            dim: 16,
            seen: 3,
            unseen: 2,
            train_conversations: 50,
            valid_conversations: 20,
            test_conversations: 30,
            min_len: 3,
            max_len: 8,
            stay: 0.8,
            noise: 0.3,
            unseen_offset: 0.6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ToyCorpus {
    pub seen: LabelSet,
    pub unseen: LabelSet,
    pub seen_prototypes: Matrix,
    pub unseen_prototypes: Matrix,
    /// Labelled with seen ids.
    pub train: Vec<Conversation>,
    /// Labelled with unseen ids, for checkpoint selection.
    pub valid: Vec<Conversation>,
    /// Labelled with unseen ids.
    pub test: Vec<Conversation>,
    pub train_embeddings: Vec<Matrix>,
    pub valid_embeddings: Vec<Matrix>,
    pub test_embeddings: Vec<Matrix>,
}

/// Paths written by [`ToyCorpus::write_to`].
#[derive(Debug, Clone)]
pub struct ToyFiles {
    pub train_corpus: PathBuf,
    pub valid_corpus: PathBuf,
    pub test_corpus: PathBuf,
    pub descriptions: PathBuf,
    pub embeddings: PathBuf,
}

fn words(pool: &[&str], prefix: &str, count: usize) -> Vec<String> {
    (0..count)
        .map(|i| {
            pool.get(i)
                .map_or_else(|| format!("{prefix}{i}"), |w| w.to_string())
        })
        .collect()
}

fn unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn conversations<R: Rng>(
    rng: &mut R,
    cfg: &ToyConfig,
    count: usize,
    prefix: &str,
    prototypes: &Matrix,
) -> (Vec<Conversation>, Vec<Matrix>) {
    let labels = prototypes.rows();
    let mut convs = Vec::with_capacity(count);
    let mut embs = Vec::with_capacity(count);
    for c in 0..count {
        let len = rng.gen_range(cfg.min_len..=cfg.max_len);
        let mut label = rng.gen_range(0..labels);
        let mut emb = Matrix::zeros(len, cfg.dim);
        let mut utterances = Vec::with_capacity(len);
        for i in 0..len {
            if i > 0 && !rng.gen_bool(cfg.stay) {
                label = (label + rng.gen_range(1..labels.max(2))) % labels;
            }
            for k in 0..cfg.dim {
                let z: f64 = StandardNormal.sample(rng);
                emb[(i, k)] = prototypes[(label, k)] + cfg.noise * z;
            }
            utterances.push(Utterance {
                text: format!("utterance {i} of {prefix}{c}"),
                speaker_id: if i % 2 == 0 { "A" } else { "B" }.to_string(),
                gold_label: Some(label),
            });
        }
        convs.push(Conversation {
            id: format!("{prefix}{c}"),
            utterances,
        });
        embs.push(emb);
    }
    (convs, embs)
}

impl ToyCorpus {
    pub fn generate(cfg: &ToyConfig) -> Result<Self> {
        if cfg.seen < 2
            || cfg.unseen < 1
            || cfg.dim < 2
            || cfg.min_len < 1
            || cfg.min_len > cfg.max_len
            || !(0.0..=1.0).contains(&cfg.stay)
            || cfg.noise.is_nan()
            || cfg.noise < 0.0
        {
            return Err(
                emotrans_core::Error::Argument("invalid toy corpus configuration".into()).into(),
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut seen_p = Matrix::zeros(cfg.seen, cfg.dim);
        for i in 0..cfg.seen {
            seen_p.row_mut(i).copy_from_slice(&unit(&mut rng, cfg.dim));
        }
        let mut unseen_p = Matrix::zeros(cfg.unseen, cfg.dim);
        for j in 0..cfg.unseen {
            let push = unit(&mut rng, cfg.dim);
            let base = seen_p.row(j % cfg.seen);
            let v: Vec<f64> = base
                .iter()
                .zip(&push)
                .map(|(b, p)| b + cfg.unseen_offset * p)
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (dst, x) in unseen_p.row_mut(j).iter_mut().zip(v) {
                *dst = x / norm;
            }
        }
        let (train, mut train_embeddings) =
            conversations(&mut rng, cfg, cfg.train_conversations, "train", &seen_p);
        let (valid, mut valid_embeddings) =
            conversations(&mut rng, cfg, cfg.valid_conversations, "valid", &unseen_p);
        let (test, mut test_embeddings) =
            conversations(&mut rng, cfg, cfg.test_conversations, "test", &unseen_p);
        // Stored manifests hold f32; keep the in-memory copy identical.
        for m in [&mut seen_p, &mut unseen_p]
            .into_iter()
            .chain(train_embeddings.iter_mut())
            .chain(valid_embeddings.iter_mut())
            .chain(test_embeddings.iter_mut())
        {
            *m = Matrix::from_f32(
                m.rows(),
                m.cols(),
                &m.as_slice().iter().map(|&x| x as f32).collect::<Vec<_>>(),
            )?;
        }
        Ok(ToyCorpus {
            seen: LabelSet::seen(&words(&SEEN_WORDS, "seen", cfg.seen))?,
            unseen: LabelSet::unseen(&words(&UNSEEN_WORDS, "unseen", cfg.unseen))?,
            seen_prototypes: seen_p,
            unseen_prototypes: unseen_p,
            train,
            valid,
            test,
            train_embeddings,
            valid_embeddings,
            test_embeddings,
        })
    }

    fn encode(convs: &[Conversation], embs: &[Matrix]) -> Vec<EncodedConversation> {
        convs
            .iter()
            .zip(embs)
            .map(|(c, e)| EncodedConversation {
                id: c.id.clone(),
                embeddings: e.clone(),
                labels: c.utterances.iter().map(|u| u.gold_label).collect(),
            })
            .collect()
    }

    pub fn encoded_train(&self) -> Vec<EncodedConversation> {
        Self::encode(&self.train, &self.train_embeddings)
    }

    pub fn encoded_valid(&self) -> Vec<EncodedConversation> {
        Self::encode(&self.valid, &self.valid_embeddings)
    }

    pub fn encoded_test(&self) -> Vec<EncodedConversation> {
        Self::encode(&self.test, &self.test_embeddings)
    }

    /// Placeholder descriptions with three generated sentences per word.
    pub fn descriptions(&self) -> Vec<EmotionPrototype> {
        self.seen
            .words()
            .iter()
            .chain(self.unseen.words())
            .map(|w| EmotionPrototype {
                word: w.clone(),
                dict_description: Some(format!("the feeling called {w}")),
                llm_sentences: (1..=3)
                    .map(|k| format!("Sentence {k} expressing {w}."))
                    .collect(),
                embedding: None,
            })
            .collect()
    }

    /// Prototype and utterance tensors, with the same prototype vectors
    /// under every description mode.
    pub fn tensors(&self) -> Result<Vec<EmbeddingMatrix>> {
        let mut protos = Matrix::zeros(
            self.seen.len() + self.unseen.len(),
            self.seen_prototypes.cols(),
        );
        for (i, row) in self
            .seen_prototypes
            .iter_rows()
            .chain(self.unseen_prototypes.iter_rows())
            .enumerate()
        {
            protos.row_mut(i).copy_from_slice(row);
        }
        let proto_keys: Vec<String> = self
            .seen
            .words()
            .iter()
            .chain(self.unseen.words())
            .cloned()
            .collect();
        let modes = [
            DescriptionMode::Full { count: 1 },
            DescriptionMode::Full { count: 2 },
            DescriptionMode::Full { count: 3 },
            DescriptionMode::DictOnly,
            DescriptionMode::WordOnly,
        ];
        let mut out = Vec::new();
        for m in modes {
            out.push(EmbeddingMatrix::from_matrix(
                m.tensor_name(),
                &protos,
                proto_keys.clone(),
            )?);
        }
        let convs = self.train.iter().chain(&self.valid).chain(&self.test);
        let embs = self
            .train_embeddings
            .iter()
            .chain(&self.valid_embeddings)
            .chain(&self.test_embeddings);
        let total: usize = self
            .train
            .iter()
            .chain(&self.valid)
            .chain(&self.test)
            .map(Conversation::len)
            .sum();
        let mut all = Matrix::zeros(total, self.seen_prototypes.cols());
        let mut keys = Vec::with_capacity(total);
        let mut r = 0;
        for (c, e) in convs.zip(embs) {
            for (i, row) in e.iter_rows().enumerate() {
                all.row_mut(r).copy_from_slice(row);
                keys.push(c.utterance_key(i));
                r += 1;
            }
        }
        out.push(EmbeddingMatrix::from_matrix(UTTERANCE_TENSOR, &all, keys)?);
        Ok(out)
    }

    /// Writes `train.tsv`, `valid.tsv`, `test.tsv`, `descriptions.jsonl` and an
    /// `embeddings/` manifest into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<ToyFiles> {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
        let files = ToyFiles {
            train_corpus: dir.join("train.tsv"),
            valid_corpus: dir.join("valid.tsv"),
            test_corpus: dir.join("test.tsv"),
            descriptions: dir.join("descriptions.jsonl"),
            embeddings: dir.join("embeddings"),
        };
        let write = |path: &Path, text: String| fs::write(path, text).map_err(Error::io(path));
        write(&files.train_corpus, write_corpus(&self.train, &self.seen)?)?;
        write(
            &files.valid_corpus,
            write_corpus(&self.valid, &self.unseen)?,
        )?;
        write(&files.test_corpus, write_corpus(&self.test, &self.unseen)?)?;
        write(
            &files.descriptions,
            write_descriptions(&self.descriptions()),
        )?;
        write_manifest(&self.tensors()?, &files.embeddings)?;
        Ok(files)
    }
}
