//! Human annotation sessions and inter-annotator agreement.
//!
//! Sessions are stored on disk: `<root>/<session_id>/session.json` holds the
//! task list and per-annotator orders, and `labels.jsonl` is an append-only
//! log of submitted labels. Model-assigned cluster labels for blind
//! validation never enter a session; they are passed to [`blind_accuracy`]
//! after the fact.

mod agreement;
mod session;

pub use agreement::{agreement_from_labels, fleiss_kappa, AgreementReport};
pub use session::{
    blind_accuracy, Ack, AnnotatorProgress, LabelEvent, Progress, SessionSpec, SessionStatus,
    SessionStore, TaskItem, TaskView,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::urlaudit::LandingCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    AdultBinary,
    ClusterBlind,
    FpReview,
    LandingCategory,
}

impl AnnotationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationKind::AdultBinary => "adult_binary",
            AnnotationKind::ClusterBlind => "cluster_blind",
            AnnotationKind::FpReview => "fp_review",
            AnnotationKind::LandingCategory => "landing_category",
        }
    }

    /// Fixed choices for kinds that have them. Blind cluster sessions take
    /// the run's label list instead.
    pub fn default_choice_set(self, extra_landing: &[String]) -> Vec<String> {
        match self {
            AnnotationKind::AdultBinary => vec![ADULT.into(), NOT_ADULT.into()],
            AnnotationKind::FpReview => vec![FALSE_POSITIVE.into(), TRUE_POSITIVE.into()],
            AnnotationKind::LandingCategory => LandingCategory::choice_set(extra_landing),
            AnnotationKind::ClusterBlind => Vec::new(),
        }
    }
}

pub const ADULT: &str = "adult";
pub const NOT_ADULT: &str = "not_adult";
pub const FALSE_POSITIVE: &str = "false_positive";
pub const TRUE_POSITIVE: &str = "true_positive";

/// A unit of annotation work as shown to annotators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub kind: AnnotationKind,
    pub tweet_id: String,
    pub presented_text: String,
    pub choice_set: Vec<String>,
    pub assigned_annotators: Vec<String>,
}

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("session {0} already exists")]
    DuplicateSession(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("a session needs at least one annotator")]
    NoAnnotators,
    #[error("session has an empty choice set")]
    EmptyChoiceSet,
    #[error("invalid session id {0:?}")]
    InvalidSessionId(String),
    #[error("annotator {annotator} is not assigned to session {session}")]
    UnknownAnnotator { session: String, annotator: String },
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("{annotator} already labeled {task_id}")]
    AlreadyLabeled { annotator: String, task_id: String },
    #[error("label {label:?} is not one of the task's choices")]
    LabelNotInChoiceSet { label: String },
    #[error("{missing} labels still outstanding")]
    Incomplete { missing: usize },
    #[error("kappa undefined: {0}")]
    KappaUndefined(String),
    #[error("session kind is {actual}, expected {expected}")]
    WrongKind { expected: String, actual: String },
    #[error("no hidden label for task {0}")]
    MissingHiddenLabel(String),
    #[error("corrupt session store: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
