//! Service clients assembled from configuration.
//!
//! With a cassette directory and `record = false` everything is replayed
//! offline; with `record = true` cassette misses go to the live service and
//! are stored. Without a cassette every call is live.

use std::sync::Arc;
use std::time::Duration;

use adaudit_core::config::{AuditConfig, Endpoint};
use adaudit_core::services::{
    AuthStyle, Cassette, CassetteFetcher, CassetteTransport, EmbeddingClient, EmbeddingService,
    ExplicitnessClient, HttpFetcher, HttpTransport, IsolatedFetcher, PerspectiveClient, RecordingFetcher,
    RecordingTransport, ReputationClient, TranslateClient, TranslationClient, Transport, VirusTotalClient,
};
use anyhow::Context;
use url::Url;

use crate::rundir::CliError;

type DynTransport = Arc<dyn Transport>;

pub struct Clients {
    cfg: AuditConfig,
}

impl Clients {
    pub fn new(cfg: &AuditConfig) -> Self {
        Self { cfg: cfg.clone() }
    }

    fn politeness(&self) -> Duration {
        Duration::from_millis(self.cfg.services.politeness_ms)
    }

    fn cassette(&self) -> Option<Cassette> {
        self.cfg.services.cassette_dir.as_ref().map(Cassette::new)
    }

    fn transport(&self, name: &str, endpoint: &Endpoint, auth: AuthStyle) -> anyhow::Result<DynTransport> {
        let live = || -> anyhow::Result<HttpTransport> {
            let url = Url::parse(&endpoint.url)
                .map_err(|e| CliError::ConfigInvalid(format!("services.{name}.url: {e}")))?;
            let key = endpoint.key_env.as_ref().and_then(|var| std::env::var(var).ok());
            if key.is_none() {
                if let Some(var) = &endpoint.key_env {
                    log::warn!("{var} is not set; calling {name} without a key");
                }
            }
            Ok(HttpTransport::new(url, auth.clone(), key)
                .with_context(|| format!("building {name} client"))?
                .with_min_interval(self.politeness()))
        };
        Ok(match (self.cassette(), self.cfg.services.record) {
            (Some(c), false) => Arc::new(CassetteTransport::new(c)),
            (Some(c), true) => Arc::new(RecordingTransport::new(live()?, c)),
            (None, _) => Arc::new(live()?),
        })
    }

    pub fn scorer(&self) -> anyhow::Result<Box<dyn ExplicitnessClient>> {
        let s = &self.cfg.services;
        let t = self.transport("perspective", &s.perspective, AuthStyle::QueryParam("key".into()))?;
        Ok(Box::new(PerspectiveClient::with_attribute(t, self.cfg.explicit.attribute.clone())))
    }

    pub fn translator(&self) -> anyhow::Result<Box<dyn TranslationClient>> {
        let s = &self.cfg.services;
        let t = self.transport("translate", &s.translate, AuthStyle::QueryParam("key".into()))?;
        Ok(Box::new(TranslateClient::new(t)))
    }

    pub fn embedder(&self) -> anyhow::Result<Box<dyn EmbeddingClient>> {
        let t = self.transport("embed", &self.cfg.services.embed, AuthStyle::None)?;
        Ok(Box::new(EmbeddingService::new(t)))
    }

    pub fn reputation(&self) -> anyhow::Result<Box<dyn ReputationClient>> {
        let s = &self.cfg.services;
        let t = self.transport("reputation", &s.reputation, AuthStyle::Header("x-apikey".into()))?;
        Ok(Box::new(VirusTotalClient::new(t)))
    }

    pub fn fetcher(&self) -> Box<dyn IsolatedFetcher> {
        match (self.cassette(), self.cfg.services.record) {
            (Some(c), false) => Box::new(CassetteFetcher::new(c)),
            (Some(c), true) => Box::new(RecordingFetcher::new(HttpFetcher::new(self.politeness()), c)),
            (None, _) => Box::new(HttpFetcher::new(self.politeness())),
        }
    }
}
