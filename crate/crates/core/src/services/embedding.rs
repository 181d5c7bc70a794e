use serde_json::{json, Value};

use super::{Method, ServiceError, ServiceRequest, Transport};

/// Produces one dense vector per text.
pub trait EmbeddingClient: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ServiceError>;
}

/// Client for a sentence-embedding service: `POST embed` with `{"text": ..}`
/// answering `{"embedding": [f64, ..]}`.
pub struct EmbeddingService<T> {
    transport: T,
}

impl<T: Transport> EmbeddingService<T> {
    pub const SERVICE: &'static str = "embed";

    pub fn new(transport: T) -> Self {
        Self { transport }
    }

    pub fn request(text: &str) -> ServiceRequest {
        ServiceRequest {
            service: Self::SERVICE.to_string(),
            method: Method::Post,
            path: "embed".to_string(),
            body: Some(json!({ "text": text })),
            key: text.to_string(),
        }
    }

    pub fn response_body(vector: &[f64]) -> Value {
        json!({ "embedding": vector })
    }
}

impl<T: Transport> EmbeddingClient for EmbeddingService<T> {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ServiceError> {
        let response = self.transport.call(&Self::request(text))?;
        let values = response
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ServiceError::decode(Self::SERVICE, "missing embedding"))?;
        values
            .iter()
            .map(|v| {
                v.as_f64()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| ServiceError::decode(Self::SERVICE, "non-finite component"))
            })
            .collect()
    }
}
