//! Non-neural building blocks of a two-stage temporal action detection pipeline.
//!
//! The crate consumes what a detector network produces (boundary-matching
//! confidence maps, video-level class probabilities, scored segments) and
//! implements everything around it:
//!
//! - [`temporal`]: segment geometry (tIoU, clamping) and fake-proposal augmentation.
//! - [`annotations`]: ground-truth / prediction JSON files and background-class
//!   label-space expansion.
//! - [`confidence_map`]: binary map format, weighted map fusion, top-K proposal extraction.
//! - [`losses`]: triplet, circle and cross-entropy losses with analytic gradients,
//!   pair mining and the P×K batch sampler.
//! - [`ensemble`]: per-category soft-NMS, detection merging, classifier ensembling,
//!   top-k accuracy.
//! - [`evaluation`]: average precision over a sweep of tIoU thresholds.
//!
//! Batch operations take an [`Execution`] argument. With the default `parallel`
//! feature they fan out over rayon; without it every mode runs sequentially.
//! Results are identical either way.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annotations;
pub mod confidence_map;
pub mod ensemble;
mod error;
pub mod evaluation;
mod exec;
pub mod losses;
pub mod temporal;

pub use annotations::{
    Detection, GroundTruthDataset, GtInstance, LabelSpace, PredictionSet, VideoAnnotation,
    VideoClassScores,
};
pub use confidence_map::{ConfidenceMap, FusionSpec, Proposal};
pub use error::{Error, Result};
pub use exec::Execution;
pub use temporal::{FakeProposal, Segment};
