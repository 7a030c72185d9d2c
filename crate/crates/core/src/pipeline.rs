//! The trainable chain `adapter → attention → similarity → CRF` and the
//! matching decode path.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adapter::AdapterParams;
use crate::avd::{self, DecodeResult, TransferMode};
use crate::crf::{self, TransitionModel};
use crate::error::{Error, Result};
use crate::gsa::{self, GsaConfig};
use crate::math;
use crate::matrix::Matrix;
use crate::similarity::{self, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub gsa: GsaConfig,
    pub sim: SimConfig,
    /// When off, training uses per-utterance cross-entropy on `S` and
    /// prediction skips decoding entirely.
    pub crf_enabled: bool,
    pub transfer: TransferMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            gsa: GsaConfig::default(),
            sim: SimConfig::default(),
            crf_enabled: true,
            transfer: TransferMode::Raw,
        }
    }
}

/// Trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub transitions: TransitionModel,
    pub adapter: AdapterParams,
}

/// Gradient buffers matching [`Model`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub transitions: Matrix,
    pub adapter_weight: Matrix,
    pub adapter_bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        let states = model.transitions.num_states();
        let d = model.adapter.dim();
        Gradients {
            transitions: Matrix::zeros(states, states),
            adapter_weight: Matrix::zeros(d, d),
            adapter_bias: vec![0.0; d],
        }
    }

    pub fn clear(&mut self) {
        self.transitions.as_mut_slice().fill(0.0);
        self.adapter_weight.as_mut_slice().fill(0.0);
        self.adapter_bias.fill(0.0);
    }
}

/// Output of [`Model::predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `S^see` for the conversation.
    pub emissions: Matrix,
    /// Present when the CRF is enabled.
    pub decode: Option<DecodeResult>,
    /// Seen-label sequence: the best path, or row-wise argmax of `S`
    /// without the CRF.
    pub seen_labels: Vec<usize>,
    /// Vectors compared against unseen prototypes (`h'` or `h^utte`).
    pub representations: Matrix,
    pub unseen_cosines: Matrix,
    pub unseen_pred: Vec<usize>,
}

impl Model {
    pub fn new<R: Rng + ?Sized>(
        labels: usize,
        dim: usize,
        adapter: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let transitions = TransitionModel::random(labels, rng)?;
        let adapter = if adapter {
            AdapterParams::random(dim, rng)
        } else {
            AdapterParams::disabled(dim)
        };
        Ok(Model {
            transitions,
            adapter,
        })
    }

    pub fn num_labels(&self) -> usize {
        self.transitions.num_labels()
    }

    pub fn dim(&self) -> usize {
        self.adapter.dim()
    }

    pub fn is_finite(&self) -> bool {
        self.adapter.is_finite()
            && self
                .transitions
                .scores()
                .as_slice()
                .iter()
                .all(|x| x.is_finite())
    }

    /// Copy with every parameter rounded to the nearest `f32`, so the model
    /// survives a round trip through 32-bit storage unchanged.
    pub fn rounded_to_f32(&self) -> Model {
        let mut m = self.clone();
        let round = |x: &mut f64| *x = f64::from(*x as f32);
        m.transitions
            .scores_mut()
            .as_mut_slice()
            .iter_mut()
            .for_each(round);
        m.adapter.weight.as_mut_slice().iter_mut().for_each(round);
        m.adapter.bias.iter_mut().for_each(round);
        m
    }

    /// `H^utte` for one conversation.
    pub fn encode_utterances(&self, h: &Matrix, cfg: &PipelineConfig) -> Result<Matrix> {
        let adapted = self.adapter.apply(h)?;
        gsa::gsa_update(&adapted, &cfg.gsa)
    }

    pub fn encode_prototypes(&self, prototypes: &Matrix) -> Result<Matrix> {
        self.adapter.apply(prototypes)
    }

    pub fn emissions(&self, h: &Matrix, seen: &Matrix, cfg: &PipelineConfig) -> Result<Matrix> {
        let u = self.encode_utterances(h, cfg)?;
        let p = self.encode_prototypes(seen)?;
        similarity::contrastive_similarity(&u, &p, &cfg.sim)
    }

    fn check_gold(&self, h: &Matrix, gold: &[usize]) -> Result<()> {
        Error::check_dim("gold label count", h.rows(), gold.len())?;
        if gold.iter().any(|&g| g >= self.num_labels()) {
            return Err(Error::argument("gold label outside the seen label set"));
        }
        Ok(())
    }

    /// Training loss for one conversation.
    pub fn loss(
        &self,
        h: &Matrix,
        gold: &[usize],
        seen: &Matrix,
        cfg: &PipelineConfig,
    ) -> Result<f64> {
        self.check_gold(h, gold)?;
        let s = self.emissions(h, seen, cfg)?;
        if cfg.crf_enabled {
            crf::nll_loss(&s, &self.transitions, gold)
        } else {
            Ok(cross_entropy(&s, gold))
        }
    }

    /// Loss for one conversation; gradients are added into `grads`.
    pub fn loss_and_grad(
        &self,
        h: &Matrix,
        gold: &[usize],
        seen: &Matrix,
        cfg: &PipelineConfig,
        grads: &mut Gradients,
    ) -> Result<f64> {
        self.check_gold(h, gold)?;
        let adapted = self.adapter.apply(h)?;
        let (utte, gsa_cache) = gsa::gsa_forward(&adapted, &cfg.gsa)?;
        let protos = self.adapter.apply(seen)?;
        let (s, sim_cache) = similarity::similarity_forward(&utte, &protos, &cfg.sim)?;

        let (loss, grad_logits) = if cfg.crf_enabled {
            let g = crf::crf_gradients(&s, &self.transitions, gold)?;
            grads.transitions.add_assign(&g.transitions);
            (g.loss, similarity::softmax_logit_grad(&s, &g.emissions))
        } else {
            // d(-log softmax)/d logits = S - onehot
            let mut gl = s.clone();
            for (i, &g) in gold.iter().enumerate() {
                gl[(i, g)] -= 1.0;
            }
            (cross_entropy(&s, gold), gl)
        };

        if self.adapter.enabled {
            let (d_utte, d_protos) = similarity::similarity_backward_from_logits(
                &utte,
                &protos,
                &sim_cache,
                &grad_logits,
                &cfg.sim,
            );
            let d_adapted = gsa::gsa_backward(&adapted, gsa_cache.as_ref(), &d_utte);
            self.adapter.accumulate_grad(
                h,
                &d_adapted,
                &mut grads.adapter_weight,
                &mut grads.adapter_bias,
            );
            self.adapter.accumulate_grad(
                seen,
                &d_protos,
                &mut grads.adapter_weight,
                &mut grads.adapter_bias,
            );
        }
        Ok(loss)
    }

    /// Seen-label sequence only, without unseen prototypes.
    pub fn predict_seen(
        &self,
        h: &Matrix,
        seen: &Matrix,
        cfg: &PipelineConfig,
    ) -> Result<Vec<usize>> {
        let s = self.emissions(h, seen, cfg)?;
        if cfg.crf_enabled {
            let table = avd::viterbi_scores(&s, &self.transitions)?;
            Ok(avd::best_path(&table, &self.transitions))
        } else {
            Ok(row_argmax(&s))
        }
    }

    /// Zero-shot prediction of unseen labels for one conversation.
    pub fn predict(
        &self,
        h: &Matrix,
        seen: &Matrix,
        unseen: &Matrix,
        cfg: &PipelineConfig,
    ) -> Result<Prediction> {
        let utte = self.encode_utterances(h, cfg)?;
        let seen_p = self.encode_prototypes(seen)?;
        let unseen_p = self.encode_prototypes(unseen)?;
        let s = similarity::contrastive_similarity(&utte, &seen_p, &cfg.sim)?;
        if cfg.crf_enabled {
            let d = avd::decode(
                &s,
                &self.transitions,
                &utte,
                &seen_p,
                &unseen_p,
                cfg.transfer,
            )?;
            Ok(Prediction {
                emissions: s,
                seen_labels: d.best_path.clone(),
                representations: d.h_prime.clone(),
                unseen_cosines: d.unseen_cosines.clone(),
                unseen_pred: d.unseen_pred.clone(),
                decode: Some(d),
            })
        } else {
            let (cos, pred) = avd::nearest_prototypes(&utte, "utterances", &unseen_p)?;
            Ok(Prediction {
                seen_labels: row_argmax(&s),
                emissions: s,
                decode: None,
                representations: utte,
                unseen_cosines: cos,
                unseen_pred: pred,
            })
        }
    }
}

fn cross_entropy(s: &Matrix, gold: &[usize]) -> f64 {
    gold.iter()
        .enumerate()
        .map(|(i, &g)| -math::ln(s[(i, g)].max(f64::MIN_POSITIVE)))
        .sum()
}

fn row_argmax(m: &Matrix) -> Vec<usize> {
    m.iter_rows()
        .map(|r| math::argmax(r).unwrap_or(0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance() -> (Model, Matrix, Matrix, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = Model::new(2, 3, true, &mut rng).unwrap();
        let h = Matrix::from_rows(&[[1.0, 0.2, 0.0], [0.1, 1.0, 0.3], [0.9, 0.0, 0.4]]).unwrap();
        let seen = Matrix::from_rows(&[[1.0, 0.0, 0.1], [0.0, 1.0, 0.0]]).unwrap();
        (model, h, seen, vec![0, 1, 0])
    }

    #[test]
    fn loss_and_grad_agrees_with_loss() {
        let (model, h, seen, gold) = instance();
        let cfg = PipelineConfig::default();
        let mut g = Gradients::zeros_like(&model);
        let a = model.loss_and_grad(&h, &gold, &seen, &cfg, &mut g).unwrap();
        let b = model.loss(&h, &gold, &seen, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn crf_off_leaves_transition_gradient_zero() {
        let (model, h, seen, gold) = instance();
        let cfg = PipelineConfig {
            crf_enabled: false,
            ..PipelineConfig::default()
        };
        let mut g = Gradients::zeros_like(&model);
        model.loss_and_grad(&h, &gold, &seen, &cfg, &mut g).unwrap();
        assert_eq!(g.transitions.max_abs(), 0.0);
        assert!(g.adapter_weight.max_abs() > 0.0);
    }

    #[test]
    fn rounding_is_idempotent() {
        let (model, ..) = instance();
        let r = model.rounded_to_f32();
        assert_eq!(r.rounded_to_f32(), r);
    }

    #[test]
    fn gold_outside_label_set_rejected() {
        let (model, h, seen, _) = instance();
        assert!(model
            .loss(&h, &[0, 2, 0], &seen, &PipelineConfig::default())
            .is_err());
    }
}
