//! External service clients with offline cassette replay.
//!
//! Every client talks to its service through a [`Transport`]. Three transports
//! exist: [`HttpTransport`] for live calls, [`CassetteTransport`] for offline
//! replay and [`RecordingTransport`] which calls a live transport and writes
//! each response into a cassette.
//!
//! A cassette is a directory with one subdirectory per service. Each recorded
//! exchange is a file `<service>/<sha256(key)>.json` holding
//! `{"key": <key>, "response": <json>}`, where the key is a client-defined
//! canonical string (the text for scoring, translation and embedding; the
//! canonical URL for reputation and fetching).

mod cassette;
mod embedding;
mod fetch;
mod perspective;
mod reputation;
mod translate;
mod transport;

pub use cassette::{Cassette, CassetteEntry};
pub use embedding::{EmbeddingClient, EmbeddingService};
pub use fetch::{CassetteFetcher, FetchError, FetchResponse, HttpFetcher, IsolatedFetcher, RecordingFetcher};
pub use perspective::{ExplicitnessClient, PerspectiveClient, SEXUALLY_EXPLICIT};
pub use reputation::{Reputation, ReputationClient, VirusTotalClient};
pub use translate::{TranslateClient, TranslationClient};
pub use transport::{
    AuthStyle, CassetteTransport, HttpTransport, Method, RecordingTransport, RetryPolicy,
    ServiceRequest, Transport,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    /// Transient failure; retried within the retry budget.
    #[error("{service} unavailable: {reason}")]
    Unavailable { service: String, reason: String },
    #[error("{service} quota exceeded")]
    QuotaExceeded { service: String },
    #[error("{service} has no record for `{key}`")]
    NotFound { service: String, key: String },
    #[error("cassette miss for {service} key `{key}`")]
    CassetteMiss { service: String, key: String },
    #[error("{service} returned HTTP {status}: {body}")]
    Http {
        service: String,
        status: u16,
        body: String,
    },
    #[error("{service} response could not be decoded: {reason}")]
    Decode { service: String, reason: String },
    #[error("cassette i/o: {0}")]
    Io(String),
}

impl ServiceError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ServiceError::Unavailable { .. })
    }

    pub(crate) fn decode(service: &str, reason: impl Into<String>) -> Self {
        ServiceError::Decode {
            service: service.to_string(),
            reason: reason.into(),
        }
    }
}
