//! Sexual-explicitness scoring, threshold calibration and adult-ad
//! classification, plus per-language moderation rates.

mod calibrate;
mod classify;
mod score;

pub use calibrate::{
    calibrate_threshold, stratified_sample, CalibrationBin, CalibrationReport, ThresholdCandidate,
};
pub use classify::{
    apply_fp_removal, classify_adult, language_disparity, AdultSplit, LanguageDisparityRow,
    DEFAULT_EXPLICIT_THRESHOLD,
};
pub use score::{score_texts, ExplicitScore, ScoringFailure, ScoringOptions, ScoringOutcome};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExplicitError {
    #[error("{service} quota exceeded; scoring aborted")]
    QuotaExceeded { service: String },
    #[error("no labels supplied")]
    NoLabels,
    #[error("labeled tweet {0} has no score")]
    MissingScore(String),
    #[error("bin width {0} does not divide [0, 1] evenly")]
    InvalidBinWidth(f64),
    #[error("per-bin sample size must be at least 1")]
    InvalidSampleSize,
    #[error("threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("false-positive ids not among adult ads: {0:?}")]
    UnknownFalsePositive(Vec<String>),
}
