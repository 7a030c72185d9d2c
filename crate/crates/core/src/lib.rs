//! Zero-shot emotion recognition in conversation by transferring learned
//! emotion-transition structure to labels never seen during training.
//!
//! Utterance embeddings pass through a shared affine [`adapter`], are mixed
//! with their neighbours by a parameter-free Gaussian self-attention
//! ([`gsa`]), and are scored against seen-emotion prototypes with a
//! temperature-scaled cosine softmax ([`similarity`]). A linear-chain
//! [`crf`] over those scores is trained with its negative log-likelihood
//! ([`trainer`]). At inference, attention Viterbi decoding ([`avd`]) turns
//! the max-score table into per-utterance weights over seen prototypes,
//! mixes the prototypes into each utterance, and labels it with its nearest
//! unseen prototype.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the
//! command-line driver live in the companion `emotrans` crate.
#![no_std]

extern crate alloc;

pub mod adapter;
pub mod avd;
pub mod corpus;
pub mod crf;
pub mod embedding;
pub mod error;
pub mod gradcheck;
pub mod gsa;
pub mod led;
pub mod math;
pub mod matrix;
pub mod metrics;
pub mod optim;
pub mod oracle;
pub mod pipeline;
pub mod similarity;
pub mod trainer;

pub use adapter::AdapterParams;
pub use avd::{DecodeResult, TransferMode};
pub use corpus::{Conversation, LabelRole, LabelSet, SplitReport, Utterance};
pub use crf::TransitionModel;
pub use embedding::EmbeddingMatrix;
pub use error::{Error, Result};
pub use gsa::{AttentionMode, GsaConfig};
pub use led::{DescriptionMode, EmotionPrototype};
pub use matrix::Matrix;
pub use metrics::EvalReport;
pub use pipeline::{Model, PipelineConfig, Prediction};
pub use similarity::SimConfig;
pub use trainer::{Checkpoint, EncodedConversation, TrainConfig};
