//! Graph-constrained few-shot alignment of embedding spaces.
//!
//! Languages are nodes of a similarity graph built by thresholding a distance
//! matrix. Each node owns a small set of paired embeddings and estimates a
//! linear map from the victim space into the attack space. Neighbouring nodes
//! share information either through hard entry-wise bounds on the difference
//! of their maps ([`pdmm`]) or through a total-variation penalty ([`tv`]).
//! Setting the coupling to zero recovers independent ridge regression
//! ([`align::ridge_align`]).
//!
//! The crate is `no_std` and needs only `alloc`. File formats, threading and
//! the command line live in the companion `lago` crate.

#![no_std]
// `!(x >= 0.0)` style checks are there to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod align;
pub mod error;
pub mod exec;
pub mod graph;
pub mod matrix;
pub mod metrics;
pub mod noise;
pub mod oracle;
pub mod pdmm;
pub mod rng;
pub mod synth;
pub mod tv;

pub use align::{AlignmentMap, NodeData};
pub use error::{Error, Result};
pub use exec::{RoundExecutor, Sequential};
pub use graph::{DistanceMatrix, LanguageGraph};
pub use matrix::Matrix;
