//! Administration and scoring for the Stereotype Identification Test (SIT):
//! randomized sessions, IAT and SIT scores, questionnaire indices,
//! reliability resampling, regression tables, text metrics and a synthetic
//! cohort generator.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod iat;
pub mod psychometrics;
pub mod rng;
pub mod scores;
pub mod sit;
pub mod stats;
pub mod survey;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
