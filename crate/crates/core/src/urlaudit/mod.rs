//! Embedded and landing URL risk.
//!
//! Each embedded URL is followed through its redirect chain to a landing
//! page, both ends are looked up in a reputation service, and the tweet is
//! scored by the worse of the two `(malicious + suspicious)` totals.

mod audit;
mod datasets;
mod extract;
pub mod fixture_server;
mod redirect;
mod score;

pub use audit::{audit_urls, UrlAuditConfig, UrlAuditOutcome, UrlLookup};
pub use datasets::{
    url_risk_datasets, DailyUrlRisk, PartitionSummary, ScatterPartition, ScatterRow, UrlRiskDatasets,
};
pub use extract::{canonical_url, extract_embedded_urls};
pub use redirect::{resolve_redirects, Hop, RedirectChain, Termination, DEFAULT_MAX_HOPS, DEFAULT_TIMEOUT};
pub use score::{
    count_problematic, score_tweet_urls, threshold_sensitivity, url_score, UrlCounts, UrlVerdict,
    DEFAULT_URL_THRESHOLD,
};

/// Manual landing-page categories used when annotating unsafe landing pages.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandingCategory {
    PornSite,
    FakeRecaptchaOrConsent,
    InfectedWarning,
    AntivirusDownloadPrompt,
    OnlineGame,
    SexBaity,
    ChannelPromotion,
    Trading,
    Betting,
    Other(String),
}

impl LandingCategory {
    pub const BUILTIN: [LandingCategory; 9] = [
        LandingCategory::PornSite,
        LandingCategory::FakeRecaptchaOrConsent,
        LandingCategory::InfectedWarning,
        LandingCategory::AntivirusDownloadPrompt,
        LandingCategory::OnlineGame,
        LandingCategory::SexBaity,
        LandingCategory::ChannelPromotion,
        LandingCategory::Trading,
        LandingCategory::Betting,
    ];

    pub fn as_label(&self) -> String {
        match self {
            LandingCategory::Other(name) => name.clone(),
            builtin => serde_json::to_value(builtin)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        }
    }

    /// Built-in labels followed by any extra labels from configuration.
    pub fn choice_set(extra: &[String]) -> Vec<String> {
        Self::BUILTIN
            .iter()
            .map(LandingCategory::as_label)
            .chain(extra.iter().cloned())
            .collect()
    }
}
