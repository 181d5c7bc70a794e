//! Headline compliance arithmetic and the datasets behind each figure, with
//! CSV-friendly rows and static SVG charts.

mod chart;
mod compliance;
mod series;

pub use chart::{bar_chart_svg, line_chart_svg, scatter_svg, Series};
pub use compliance::{compliance_summary, ComplianceCounts, ComplianceSummary, Ratio};
pub use series::{
    daily_violating_series, language_distribution, score_cdf, weekday_trend, DailyViolating,
    LanguageShare, ScoreCdfPoint, WeekdayRow,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),
    #[error("grid step {0} outside (0, 1)")]
    InvalidGridStep(f64),
}
