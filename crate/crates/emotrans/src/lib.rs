//! File formats, embedding store and command-line driver for
//! [`emotrans_core`].
//!
//! Inputs produced by an external encoder are a tensor manifest
//! ([`tensor_store`]), a tab-separated corpus ([`corpus_file`]) and a
//! description file ([`descriptions`]). Training writes a checkpoint
//! directory ([`checkpoint`]); prediction writes JSON lines
//! ([`predictions`]).

pub mod checkpoint;
pub mod cli;
pub mod corpus_file;
pub mod descriptions;
pub mod error;
pub mod predictions;
pub mod report;
pub mod synthetic;
pub mod tensor_store;
pub mod workflow;

pub use error::{Error, Result};
