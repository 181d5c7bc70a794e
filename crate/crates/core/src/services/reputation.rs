use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Method, ServiceError, ServiceRequest, Transport};
use crate::urlaudit::canonical_url;

/// Aggregate verdict counts for one URL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reputation {
    pub malicious: u32,
    pub suspicious: u32,
    /// False when the service has never analysed the URL. Such URLs count
    /// as (0, 0) for scoring but must not be reported as safe.
    pub scanned: bool,
}

impl Reputation {
    pub fn not_scanned() -> Self {
        Self {
            malicious: 0,
            suspicious: 0,
            scanned: false,
        }
    }
}

pub trait ReputationClient: Send + Sync {
    fn lookup(&self, url: &str) -> Result<Reputation, ServiceError>;
}

/// Client for a multi-engine URL scanning API (`GET api/v3/urls/{id}` with
/// `id` the unpadded URL-safe base64 of the URL). Counts come from
/// `data.attributes.last_analysis_stats`.
pub struct VirusTotalClient<T> {
    transport: T,
}

impl<T: Transport> VirusTotalClient<T> {
    pub const SERVICE: &'static str = "reputation";

    pub fn new(transport: T) -> Self {
        Self { transport }
    }

    pub fn request(url: &str) -> ServiceRequest {
        let canonical = canonical_url(url).unwrap_or_else(|| url.to_string());
        ServiceRequest {
            service: Self::SERVICE.to_string(),
            method: Method::Get,
            path: format!("api/v3/urls/{}", URL_SAFE_NO_PAD.encode(canonical.as_bytes())),
            body: None,
            key: canonical,
        }
    }

    pub fn response_body(malicious: u32, suspicious: u32) -> Value {
        json!({
            "data": {
                "type": "url",
                "attributes": {
                    "last_analysis_stats": {
                        "malicious": malicious,
                        "suspicious": suspicious,
                        "harmless": 0,
                        "undetected": 0,
                    }
                }
            }
        })
    }
}

impl<T: Transport> ReputationClient for VirusTotalClient<T> {
    fn lookup(&self, url: &str) -> Result<Reputation, ServiceError> {
        let response = match self.transport.call(&Self::request(url)) {
            Ok(r) => r,
            Err(ServiceError::NotFound { .. }) => return Ok(Reputation::not_scanned()),
            Err(e) => return Err(e),
        };
        let stats = response
            .pointer("/data/attributes/last_analysis_stats")
            .ok_or_else(|| ServiceError::decode(Self::SERVICE, "missing last_analysis_stats"))?;
        let count = |name: &str| -> Result<u32, ServiceError> {
            stats
                .get(name)
                .and_then(Value::as_u64)
                .and_then(|v| u32::try_from(v).ok())
                .ok_or_else(|| ServiceError::decode(Self::SERVICE, format!("bad `{name}` count")))
        };
        Ok(Reputation {
            malicious: count("malicious")?,
            suspicious: count("suspicious")?,
            scanned: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::services::{Cassette, CassetteTransport};

    #[test]
    fn cassette_lookup_paths() {
        let dir = tempfile::tempdir().unwrap();
        let cassette = Cassette::new(dir.path());
        let bad = "https://Bad.example/landing?uid=42";
        let benign = "https://ok.example/";
        type C = VirusTotalClient<CassetteTransport>;
        cassette
            .put(C::SERVICE, &C::request(bad).key, &C::response_body(5, 2))
            .unwrap();
        cassette
            .put(C::SERVICE, &C::request(benign).key, &C::response_body(0, 0))
            .unwrap();
        let client = VirusTotalClient::new(CassetteTransport::new(cassette));
        let r = client.lookup(bad).unwrap();
        assert_eq!((r.malicious, r.suspicious, r.scanned), (5, 2, true));
        // host case is canonicalised, query preserved
        let r = client.lookup("https://bad.example/landing?uid=42").unwrap();
        assert_eq!((r.malicious, r.suspicious), (5, 2));
        let r = client.lookup(benign).unwrap();
        assert_eq!((r.malicious, r.suspicious), (0, 0));
        assert!(matches!(
            client.lookup("https://unknown.example/"),
            Err(ServiceError::CassetteMiss { .. })
        ));
    }

    #[test]
    fn url_id_is_unpadded_base64() {
        let req = VirusTotalClient::<CassetteTransport>::request("http://a.b/");
        assert_eq!(req.path, format!("api/v3/urls/{}", URL_SAFE_NO_PAD.encode("http://a.b/")));
        assert!(!req.path.ends_with('='));
    }
}
