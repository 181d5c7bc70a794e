use serde::{Deserialize, Serialize};

use super::ReportError;

/// A fraction kept with its numerator and denominator. An empty denominator
/// gives 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
    pub value: f64,
}

impl Ratio {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        let value = if denominator == 0 {
            0.0
        } else {
            numerator as f64 / denominator as f64
        };
        Self {
            numerator,
            denominator,
            value,
        }
    }
}

/// Raw counts gathered from the pipeline stages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceCounts {
    pub total_ads: u64,
    pub rehydrated_ads: u64,
    /// Ads absent from the rehydrated snapshot.
    pub removed_observed: u64,
    /// Removals confirmed after the rehydration snapshot, added on top of the
    /// observed diff when reporting.
    pub late_removal_adjustment: u64,
    /// Ads over the explicitness threshold across the whole corpus.
    pub flagged_all: u64,
    /// Manually confirmed false positives among `flagged_all`.
    pub flagged_all_fp: u64,
    /// Violating ads among removed ads.
    pub adult_moderated: u64,
    /// Ads over the threshold among rehydrated ads.
    pub adult_unmoderated_flagged: u64,
    /// Manually confirmed false positives among `adult_unmoderated_flagged`.
    pub adult_unmoderated_fp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceSummary {
    pub total_ads: u64,
    pub rehydrated_ads: u64,
    pub removed_observed: u64,
    pub removed_ads: u64,
    pub flagged_all: u64,
    pub flagged_all_after_fp: u64,
    pub violating_total: u64,
    pub violating_moderated: u64,
    pub violating_unmoderated: u64,
    /// Flagged ads over all ads.
    pub flagged_fraction: Ratio,
    pub removed_fraction: Ratio,
    /// Moderated violating ads over all violating ads.
    pub moderated_fraction: Ratio,
    /// Moderated violating ads over all removed ads.
    pub removed_adult_fraction: Ratio,
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), ReportError> {
    if ok {
        Ok(())
    } else {
        Err(ReportError::InconsistentCounts(what()))
    }
}

/// Derives every headline figure from raw counts, checking the identities
/// that tie the stages together.
pub fn compliance_summary(c: &ComplianceCounts) -> Result<ComplianceSummary, ReportError> {
    check(c.rehydrated_ads + c.removed_observed == c.total_ads, || {
        format!(
            "rehydrated {} + removed {} != total {}",
            c.rehydrated_ads, c.removed_observed, c.total_ads
        )
    })?;
    check(c.flagged_all_fp <= c.flagged_all, || {
        format!("{} false positives among {} flagged", c.flagged_all_fp, c.flagged_all)
    })?;
    check(c.adult_unmoderated_fp <= c.adult_unmoderated_flagged, || {
        format!(
            "{} false positives among {} unmoderated flagged",
            c.adult_unmoderated_fp, c.adult_unmoderated_flagged
        )
    })?;
    check(c.adult_unmoderated_flagged <= c.rehydrated_ads, || {
        format!(
            "{} unmoderated adult ads exceed {} rehydrated",
            c.adult_unmoderated_flagged, c.rehydrated_ads
        )
    })?;
    check(c.flagged_all <= c.total_ads, || {
        format!("{} flagged exceed {} ads", c.flagged_all, c.total_ads)
    })?;
    let removed_ads = c.removed_observed + c.late_removal_adjustment;
    check(c.adult_moderated <= removed_ads, || {
        format!("{} moderated adult ads exceed {} removed", c.adult_moderated, removed_ads)
    })?;

    let violating_unmoderated = c.adult_unmoderated_flagged - c.adult_unmoderated_fp;
    let violating_total = c.adult_moderated + violating_unmoderated;
    Ok(ComplianceSummary {
        total_ads: c.total_ads,
        rehydrated_ads: c.rehydrated_ads,
        removed_observed: c.removed_observed,
        removed_ads,
        flagged_all: c.flagged_all,
        flagged_all_after_fp: c.flagged_all - c.flagged_all_fp,
        violating_total,
        violating_moderated: c.adult_moderated,
        violating_unmoderated,
        flagged_fraction: Ratio::new(c.flagged_all, c.total_ads),
        removed_fraction: Ratio::new(removed_ads, c.total_ads),
        moderated_fraction: Ratio::new(c.adult_moderated, violating_total),
        removed_adult_fraction: Ratio::new(c.adult_moderated, removed_ads),
    })
}
