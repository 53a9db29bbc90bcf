//! Coding sparse cell-center dot labels into dense training targets, and
//! back.
//!
//! - [`geometry`]: center sets, fields, exact nearest / second-nearest
//!   distance fields and disk dilation.
//! - [`encoders`]: dot, Gaussian, rectangle, proximity and repel codings.
//! - [`metrics`]: entropy, reversibility (raw and dilated masks) and L2.
//! - [`decoder`]: local-maximum detection and integration counting.
//! - [`evaluator`]: greedy closest-pair matching and F1.
//! - [`synth`]: seeded synthetic scenes and prediction-error emulation.
//! - [`bench`]: the end-to-end sweep behind the `bench` subcommand.
//! - [`io`]: center CSV, `SFLD` fields and 16-bit PNG export.

pub mod bench;
pub mod decoder;
pub mod encoders;
mod error;
pub mod evaluator;
pub mod filter;
pub mod geometry;
pub mod io;
pub mod manifest;
pub mod metrics;
pub mod synth;

pub use decoder::{count_by_integration, detect_local_maxima, DecodeSpec, ThresholdMode};
pub use encoders::{encode, CodingSpec, Normalization, Scheme};
pub use error::{Error, Result};
pub use evaluator::{greedy_match, score, Dataset, MatchReport, MatchedPair};
pub use geometry::{dilate_disk, distance_fields, BinaryMask, CenterSet, DistanceFields, Point, ScalarField};
pub use metrics::{coding_entropy, l2_distance, reversibility, reversibility_dilated, CodingQuality};
pub use synth::{generate_scene, perturb, PerturbSpec, SceneSpec};
