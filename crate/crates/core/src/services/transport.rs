use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use url::Url;

use super::{Cassette, ServiceError};

/// Marker stored in a cassette when the live service answered "not found".
const NOT_FOUND_MARKER: &str = "$not_found";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceRequest {
    pub service: String,
    pub method: Method,
    /// Path (and query) relative to the service base URL.
    pub path: String,
    pub body: Option<Value>,
    /// Canonical cassette key for this request.
    pub key: String,
}

pub trait Transport: Send + Sync {
    fn call(&self, request: &ServiceRequest) -> Result<Value, ServiceError>;
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn call(&self, request: &ServiceRequest) -> Result<Value, ServiceError> {
        (**self).call(request)
    }
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn call(&self, request: &ServiceRequest) -> Result<Value, ServiceError> {
        (**self).call(request)
    }
}

/// Exponential backoff for retryable failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self {
            max_attempts: 1,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or the
    /// attempt budget is spent.
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            match op() {
                Err(e) if e.is_retryable() && attempt < self.max_attempts.max(1) => {
                    let factor = 2u32.saturating_pow(attempt - 1);
                    let delay = self.base_delay.saturating_mul(factor).min(self.max_delay);
                    log::debug!("retrying after {delay:?}: {e}");
                    thread::sleep(delay);
                }
                other => return other,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthStyle {
    None,
    /// API key appended as a query parameter with this name.
    QueryParam(String),
    /// API key sent in a header with this name.
    Header(String),
    Bearer,
}

/// Live HTTP transport with retry and a minimum spacing between requests.
pub struct HttpTransport {
    base_url: Url,
    client: reqwest::blocking::Client,
    auth: AuthStyle,
    api_key: Option<String>,
    retry: RetryPolicy,
    min_interval: Duration,
    last_request: Mutex<Option<Instant>>,
}

impl HttpTransport {
    pub fn new(base_url: Url, auth: AuthStyle, api_key: Option<String>) -> Result<Self, ServiceError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| ServiceError::Io(e.to_string()))?;
        Ok(Self {
            base_url,
            client,
            auth,
            api_key,
            retry: RetryPolicy::default(),
            min_interval: Duration::ZERO,
            last_request: Mutex::new(None),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Client-side rate limit: at most one request per `interval`.
    pub fn with_min_interval(mut self, interval: Duration) -> Self {
        self.min_interval = interval;
        self
    }

    fn pace(&self) {
        let mut last = self.last_request.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.min_interval {
                thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn once(&self, request: &ServiceRequest) -> Result<Value, ServiceError> {
        let service = request.service.as_str();
        let mut url = self
            .base_url
            .join(&request.path)
            .map_err(|e| ServiceError::decode(service, format!("bad path: {e}")))?;
        if let (AuthStyle::QueryParam(name), Some(key)) = (&self.auth, &self.api_key) {
            url.query_pairs_mut().append_pair(name, key);
        }
        let mut builder = match request.method {
            Method::Get => self.client.get(url),
            Method::Post => self.client.post(url),
        };
        match (&self.auth, &self.api_key) {
            (AuthStyle::Header(name), Some(key)) => builder = builder.header(name.as_str(), key),
            (AuthStyle::Bearer, Some(key)) => builder = builder.bearer_auth(key),
            _ => {}
        }
        if let Some(body) = &request.body {
            builder = builder.json(body);
        }
        self.pace();
        let response = builder.send().map_err(|e| ServiceError::Unavailable {
            service: service.to_string(),
            reason: e.to_string(),
        })?;
        let status = response.status().as_u16();
        let text = response.text().unwrap_or_default();
        match status {
            200..=299 => serde_json::from_str(&text)
                .map_err(|e| ServiceError::decode(service, e.to_string())),
            404 => Err(ServiceError::NotFound {
                service: service.to_string(),
                key: request.key.clone(),
            }),
            429 => Err(ServiceError::QuotaExceeded {
                service: service.to_string(),
            }),
            408 | 500..=599 => Err(ServiceError::Unavailable {
                service: service.to_string(),
                reason: format!("HTTP {status}"),
            }),
            _ => Err(ServiceError::Http {
                service: service.to_string(),
                status,
                body: text.chars().take(500).collect(),
            }),
        }
    }
}

impl Transport for HttpTransport {
    fn call(&self, request: &ServiceRequest) -> Result<Value, ServiceError> {
        self.retry.run(|| self.once(request))
    }
}

/// Offline replay. Never touches the network.
pub struct CassetteTransport {
    cassette: Cassette,
}

impl CassetteTransport {
    pub fn new(cassette: Cassette) -> Self {
        Self { cassette }
    }
}

impl Transport for CassetteTransport {
    fn call(&self, request: &ServiceRequest) -> Result<Value, ServiceError> {
        match self.cassette.get(&request.service, &request.key)? {
            Some(value) if value.get(NOT_FOUND_MARKER).is_some() => Err(ServiceError::NotFound {
                service: request.service.clone(),
                key: request.key.clone(),
            }),
            Some(value) => Ok(value),
            None => Err(ServiceError::CassetteMiss {
                service: request.service.clone(),
                key: request.key.clone(),
            }),
        }
    }
}

/// Replays when possible, otherwise calls `inner` and records the answer.
pub struct RecordingTransport<T> {
    inner: T,
    cassette: Cassette,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, cassette: Cassette) -> Self {
        Self { inner, cassette }
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn call(&self, request: &ServiceRequest) -> Result<Value, ServiceError> {
        if self.cassette.get(&request.service, &request.key)?.is_some() {
            return CassetteTransport::new(self.cassette.clone()).call(request);
        }
        match self.inner.call(request) {
            Ok(value) => {
                self.cassette.put(&request.service, &request.key, &value)?;
                Ok(value)
            }
            Err(ServiceError::NotFound { service, key }) => {
                self.cassette
                    .put(&request.service, &request.key, &json!({ NOT_FOUND_MARKER: true }))?;
                Err(ServiceError::NotFound { service, key })
            }
            Err(e) => Err(e),
        }
    }
}
