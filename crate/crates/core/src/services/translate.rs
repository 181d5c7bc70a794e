use serde_json::{json, Value};

use super::{Method, ServiceError, ServiceRequest, Transport};

/// Translates text into English.
pub trait TranslationClient: Send + Sync {
    fn translate(&self, text: &str, source_lang: &str) -> Result<String, ServiceError>;
}

/// Client for a translate-v2 style API (`POST language/translate/v2`).
pub struct TranslateClient<T> {
    transport: T,
}

impl<T: Transport> TranslateClient<T> {
    pub const SERVICE: &'static str = "translate";

    pub fn new(transport: T) -> Self {
        Self { transport }
    }

    pub fn request(text: &str, source_lang: &str) -> ServiceRequest {
        let mut body = json!({ "q": text, "target": "en", "format": "text" });
        // "und" means the platform could not detect a language; let the
        // service detect it.
        if source_lang != "und" {
            body["source"] = json!(source_lang);
        }
        ServiceRequest {
            service: Self::SERVICE.to_string(),
            method: Method::Post,
            path: "language/translate/v2".to_string(),
            body: Some(body),
            key: format!("{source_lang}\n{text}"),
        }
    }

    pub fn response_body(translated: &str) -> Value {
        json!({ "data": { "translations": [ { "translatedText": translated } ] } })
    }
}

impl<T: Transport> TranslationClient for TranslateClient<T> {
    fn translate(&self, text: &str, source_lang: &str) -> Result<String, ServiceError> {
        let response = self.transport.call(&Self::request(text, source_lang))?;
        response
            .pointer("/data/translations/0/translatedText")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ServiceError::decode(Self::SERVICE, "missing translatedText"))
    }
}
