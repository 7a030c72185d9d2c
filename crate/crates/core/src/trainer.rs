//! Mini-batch training of the transition matrix and adapter against the
//! summed per-conversation loss, with best-epoch checkpoint selection.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::avd::TransferMode;
use crate::error::{Error, Result};
use crate::gsa::{AttentionMode, GsaConfig, DEFAULT_SIGMA};
use crate::led::DescriptionMode;
use crate::matrix::Matrix;
use crate::metrics::weighted_prf;
use crate::optim::{AdamW, AdamWConfig, ParamBlock};
use crate::pipeline::{Gradients, Model, PipelineConfig};
use crate::similarity::{SimConfig, DEFAULT_TAU};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_steps: u64,
    pub seed: u64,
    pub sigma: f64,
    pub tau: f64,
    pub led_mode: DescriptionMode,
    pub attention: AttentionMode,
    pub crf_enabled: bool,
    pub adapter_enabled: bool,
    pub transfer: TransferMode,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamWConfig::default();
        TrainConfig {
            learning_rate: adam.learning_rate,
            batch_size: 4,
            epochs: 10,
            warmup_steps: adam.warmup_steps,
            seed: 0,
            sigma: DEFAULT_SIGMA,
            tau: DEFAULT_TAU,
            led_mode: DescriptionMode::default(),
            attention: AttentionMode::Gaussian,
            crf_enabled: true,
            adapter_enabled: true,
            transfer: TransferMode::Raw,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            weight_decay: adam.weight_decay,
        }
    }
}

impl TrainConfig {
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            gsa: GsaConfig {
                sigma: self.sigma,
                mode: self.attention,
            },
            sim: SimConfig { tau: self.tau },
            crf_enabled: self.crf_enabled,
            transfer: self.transfer,
        }
    }

    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            weight_decay: self.weight_decay,
            warmup_steps: self.warmup_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::argument(alloc::format!("{name} must be positive")))
            }
        };
        positive(self.learning_rate, "learning rate")?;
        positive(self.sigma, "sigma")?;
        positive(self.tau, "tau")?;
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::argument("batch size and epochs must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::argument("betas must lie in [0, 1)"));
        }
        if self.weight_decay < 0.0 || self.epsilon <= 0.0 {
            return Err(Error::argument("weight decay must be >= 0 and epsilon > 0"));
        }
        if let DescriptionMode::Full { count } = self.led_mode {
            if !(1..=3).contains(&count) {
                return Err(Error::argument("description count must be 1, 2 or 3"));
            }
        }
        Ok(())
    }
}

/// Embeddings of one conversation with per-utterance gold label ids.
///
/// `labels` is either empty (unlabelled) or has one entry per row; `None`
/// entries are utterances excluded from scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedConversation {
    pub id: String,
    pub embeddings: Matrix,
    pub labels: Vec<Option<usize>>,
}

impl EncodedConversation {
    /// Fully labelled conversation.
    pub fn labelled(id: impl Into<String>, embeddings: Matrix, labels: &[usize]) -> Self {
        EncodedConversation {
            id: id.into(),
            embeddings,
            labels: labels.iter().map(|&l| Some(l)).collect(),
        }
    }

    fn check_labels(&self) -> Result<()> {
        if self.labels.len() != self.embeddings.rows() {
            return Err(Error::argument(alloc::format!(
                "conversation '{}' has {} labels for {} utterances",
                self.id,
                self.labels.len(),
                self.embeddings.rows()
            )));
        }
        Ok(())
    }

    /// Gold sequence; every utterance must be labelled.
    pub fn gold(&self) -> Result<Vec<usize>> {
        self.check_labels()?;
        self.labels
            .iter()
            .map(|l| {
                l.ok_or_else(|| {
                    Error::argument(alloc::format!(
                        "conversation '{}' has unlabelled utterances",
                        self.id
                    ))
                })
            })
            .collect()
    }
}

pub struct TrainData<'a> {
    pub conversations: &'a [EncodedConversation],
    pub seen_prototypes: &'a Matrix,
}

/// Held-out conversations labelled with unseen emotions.
pub struct ValidationData<'a> {
    pub conversations: &'a [EncodedConversation],
    pub unseen_prototypes: &'a Matrix,
}

/// Which score picked the retained checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Weighted F1 over unseen labels on the validation set.
    ValidationUnseen,
    /// Weighted F1 over seen labels on the training set.
    TrainingSeen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_seen_wf1: f64,
    pub validation_wf1: Option<f64>,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub config: TrainConfig,
    /// 1-based epoch the parameters were taken from.
    pub epoch: usize,
    pub score: f64,
    pub metric: SelectionMetric,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochStats>,
}

/// Weighted F1 of seen-label decoding against gold on `conversations`.
pub fn seen_wf1(
    model: &Model,
    conversations: &[EncodedConversation],
    seen: &Matrix,
    cfg: &PipelineConfig,
) -> Result<f64> {
    let (mut gold, mut pred) = (Vec::new(), Vec::new());
    for c in conversations {
        gold.extend(c.gold()?);
        pred.extend(model.predict_seen(&c.embeddings, seen, cfg)?);
    }
    Ok(weighted_prf(&gold, &pred, model.num_labels())?.weighted_f1)
}

/// Weighted F1 of zero-shot unseen-label prediction over labelled
/// utterances.
pub fn unseen_wf1(
    model: &Model,
    conversations: &[EncodedConversation],
    seen: &Matrix,
    unseen: &Matrix,
    cfg: &PipelineConfig,
) -> Result<f64> {
    let (mut gold, mut pred) = (Vec::new(), Vec::new());
    for c in conversations {
        c.check_labels()?;
        let p = model.predict(&c.embeddings, seen, unseen, cfg)?.unseen_pred;
        for (g, p) in c.labels.iter().zip(p) {
            if let Some(g) = g {
                gold.push(*g);
                pred.push(p);
            }
        }
    }
    Ok(weighted_prf(&gold, &pred, unseen.rows())?.weighted_f1)
}

fn check_inputs(data: &TrainData<'_>, valid: Option<&ValidationData<'_>>) -> Result<usize> {
    if data.conversations.is_empty() {
        return Err(Error::argument("training set is empty"));
    }
    let n = data.seen_prototypes.rows();
    if n < 2 {
        return Err(Error::argument("training needs at least two seen labels"));
    }
    let d = data.seen_prototypes.cols();
    for c in data.conversations {
        Error::check_dim("utterance embedding width", d, c.embeddings.cols())?;
        if c.embeddings.rows() == 0 {
            return Err(Error::argument(alloc::format!(
                "conversation '{}' is empty",
                c.id
            )));
        }
        c.gold()?;
    }
    if let Some(v) = valid {
        Error::check_dim("unseen prototype width", d, v.unseen_prototypes.cols())?;
        for c in v.conversations {
            Error::check_dim("utterance embedding width", d, c.embeddings.cols())?;
            c.check_labels()?;
        }
    }
    Ok(d)
}

/// Trains and returns the best checkpoint plus per-epoch statistics.
///
/// `on_epoch` sees each epoch's statistics as soon as they are computed.
pub fn train(
    data: &TrainData<'_>,
    valid: Option<&ValidationData<'_>>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let dim = check_inputs(data, valid)?;
    let pipeline = cfg.pipeline();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = data.seen_prototypes.rows();
    let mut model = Model::new(n, dim, cfg.adapter_enabled, &mut rng)?;
    let mask = model.transitions.mask();
    let mut grads = Gradients::zeros_like(&model);
    let block_sizes = [
        grads.transitions.as_slice().len(),
        grads.adapter_weight.as_slice().len(),
        grads.adapter_bias.len(),
    ];
    let mut opt = AdamW::new(cfg.optimizer(), &block_sizes);
    let metric = if valid.is_some() {
        SelectionMetric::ValidationUnseen
    } else {
        SelectionMetric::TrainingSeen
    };

    let mut order: Vec<usize> = (0..data.conversations.len()).collect();
    let mut best: Option<Checkpoint> = None;
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            grads.clear();
            let mut batch_loss = 0.0;
            for &ci in batch {
                let conv = &data.conversations[ci];
                batch_loss += model.loss_and_grad(
                    &conv.embeddings,
                    &conv.gold()?,
                    data.seen_prototypes,
                    &pipeline,
                    &mut grads,
                )?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += batch_loss;
            apply_update(&mut opt, &mut model, &grads, &mask, cfg);
            if !model.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_idx,
                });
            }
        }

        let snapshot = model.rounded_to_f32();
        let train_seen = seen_wf1(
            &snapshot,
            data.conversations,
            data.seen_prototypes,
            &pipeline,
        )?;
        let validation = valid
            .map(|v| {
                unseen_wf1(
                    &snapshot,
                    v.conversations,
                    data.seen_prototypes,
                    v.unseen_prototypes,
                    &pipeline,
                )
            })
            .transpose()?;
        let stats = EpochStats {
            epoch,
            mean_loss: epoch_loss / data.conversations.len() as f64,
            train_seen_wf1: train_seen,
            validation_wf1: validation,
            steps: opt.steps(),
        };
        on_epoch(&stats);
        history.push(stats);

        let score = validation.unwrap_or(train_seen);
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(Checkpoint {
                model: snapshot,
                config: cfg.clone(),
                epoch,
                score,
                metric,
            });
        }
    }
    Ok(TrainOutcome {
        checkpoint: best.expect("at least one epoch"),
        history,
    })
}

fn apply_update(
    opt: &mut AdamW,
    model: &mut Model,
    grads: &Gradients,
    mask: &[bool],
    cfg: &TrainConfig,
) {
    // Frozen blocks are passed with an all-true mask so moment buffers keep
    // their layout.
    let frozen_t: Vec<bool>;
    let t_mask = if cfg.crf_enabled {
        mask
    } else {
        frozen_t = alloc::vec![true; mask.len()];
        &frozen_t
    };
    let adapter_on = model.adapter.enabled;
    let w_frozen = alloc::vec![!adapter_on; grads.adapter_weight.as_slice().len()];
    let b_frozen = alloc::vec![!adapter_on; grads.adapter_bias.len()];
    let mut blocks = [
        ParamBlock {
            params: model.transitions.scores_mut().as_mut_slice(),
            grads: grads.transitions.as_slice(),
            frozen: Some(t_mask),
        },
        ParamBlock {
            params: model.adapter.weight.as_mut_slice(),
            grads: grads.adapter_weight.as_slice(),
            frozen: Some(&w_frozen),
        },
        ParamBlock {
            params: &mut model.adapter.bias,
            grads: &grads.adapter_bias,
            frozen: Some(&b_frozen),
        },
    ];
    opt.step(&mut blocks);
}
