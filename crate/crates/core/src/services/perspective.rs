use serde_json::{json, Value};

use super::{ServiceError, ServiceRequest, Transport, Method};

/// Attribute name for sexual explicitness.
pub const SEXUALLY_EXPLICIT: &str = "SEXUALLY_EXPLICIT";

/// Scores text for one abuse attribute, returning a probability in `[0, 1]`.
pub trait ExplicitnessClient: Send + Sync {
    fn score(&self, text: &str) -> Result<f64, ServiceError>;
}

/// Client for a comment-analyzer style scoring API.
///
/// Request: `POST v1alpha1/comments:analyze` with
/// `{"comment":{"text":..},"requestedAttributes":{ATTR:{}},"doNotStore":true}`.
/// The score is read from `attributeScores.ATTR.summaryScore.value`.
pub struct PerspectiveClient<T> {
    transport: T,
    attribute: String,
}

impl<T: Transport> PerspectiveClient<T> {
    pub fn new(transport: T) -> Self {
        Self::with_attribute(transport, SEXUALLY_EXPLICIT)
    }

    pub fn with_attribute(transport: T, attribute: impl Into<String>) -> Self {
        Self {
            transport,
            attribute: attribute.into(),
        }
    }

    pub const SERVICE: &'static str = "perspective";

    pub fn request(&self, text: &str) -> ServiceRequest {
        ServiceRequest {
            service: Self::SERVICE.to_string(),
            method: Method::Post,
            path: "v1alpha1/comments:analyze".to_string(),
            body: Some(json!({
                "comment": { "text": text },
                "requestedAttributes": { self.attribute.as_str(): {} },
                "doNotStore": true,
            })),
            key: format!("{}\n{}", self.attribute, text),
        }
    }

    pub fn parse(&self, response: &Value) -> Result<f64, ServiceError> {
        let score = response
            .pointer(&format!("/attributeScores/{}/summaryScore/value", self.attribute))
            .and_then(Value::as_f64)
            .ok_or_else(|| ServiceError::decode(Self::SERVICE, "missing summaryScore.value"))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(ServiceError::decode(
                Self::SERVICE,
                format!("score {score} outside [0, 1]"),
            ));
        }
        Ok(score)
    }

    /// Response body shape, for building cassettes.
    pub fn response_body(attribute: &str, score: f64) -> Value {
        json!({
            "attributeScores": {
                attribute: { "summaryScore": { "value": score, "type": "PROBABILITY" } }
            }
        })
    }
}

impl<T: Transport> ExplicitnessClient for PerspectiveClient<T> {
    fn score(&self, text: &str) -> Result<f64, ServiceError> {
        let response = self.transport.call(&self.request(text))?;
        self.parse(&response)
    }
}
