//! Headline compliance figures plus CSV and SVG pairs for each figure.

use std::collections::{BTreeSet, HashMap};
use std::fs;

use adaudit_core::explicit::{ExplicitScore, LanguageDisparityRow};
use adaudit_core::moderation::{DailyRemoval, RehydrationStatus};
use adaudit_core::report::{
    bar_chart_svg, compliance_summary, daily_violating_series, language_distribution, line_chart_svg,
    scatter_svg, score_cdf, weekday_trend, ComplianceCounts, Ratio, Series,
};
use adaudit_core::urlaudit::{url_risk_datasets, ScatterPartition, UrlVerdict};
use chrono::NaiveDate;
use serde::Serialize;
use serde_json::{json, Value};

use super::urls::{SensitivityRow, SENSITIVITY_FILE, VERDICTS_FILE};
use super::{load_adult, load_ads, load_pairs, load_scores, Ctx, Rows};
use crate::output::{read_csv, read_json, write_csv, write_json};
use crate::rundir::Stage;

#[derive(Serialize)]
struct RatioRow<'a> {
    name: &'a str,
    numerator: u64,
    denominator: u64,
    value: f64,
}

#[derive(Serialize)]
struct CdfRow {
    series: &'static str,
    score: f64,
    count_at_or_below: usize,
    total: usize,
    cumulative_fraction: f64,
}

fn day_axis(dates: impl Iterator<Item = NaiveDate>) -> impl Fn(NaiveDate) -> f64 {
    let first = dates.min().unwrap_or_default();
    move |d| (d - first).num_days() as f64
}

fn svg(ctx: &Ctx, name: &str, body: String) -> anyhow::Result<()> {
    fs::write(ctx.dir.join(name), body)?;
    Ok(())
}

fn optional_json(path: std::path::PathBuf) -> anyhow::Result<Value> {
    if path.exists() {
        read_json(&path)
    } else {
        Ok(Value::Null)
    }
}

pub fn run(ctx: &Ctx) -> anyhow::Result<Rows> {
    let (initial, _) = load_ads(ctx.run)?;
    let pairs = load_pairs(ctx.run)?;
    let scores = load_scores(ctx.run)?;
    let adult = load_adult(ctx.run)?;
    let status: HashMap<&str, RehydrationStatus> = pairs.iter().map(|p| (p.tweet_id.as_str(), p.status)).collect();

    let removed = |s: RehydrationStatus| s == RehydrationStatus::Removed;
    let count = |f: &dyn Fn(&super::AdultRow) -> bool| adult.iter().filter(|r| f(r)).count() as u64;
    let counts = ComplianceCounts {
        total_ads: pairs.len() as u64,
        rehydrated_ads: pairs.iter().filter(|p| !removed(p.status)).count() as u64,
        removed_observed: pairs.iter().filter(|p| removed(p.status)).count() as u64,
        late_removal_adjustment: ctx.cfg.moderation.late_removal_adjustment,
        flagged_all: adult.len() as u64,
        flagged_all_fp: count(&|r| r.false_positive),
        adult_moderated: count(&|r| r.violating && removed(r.status)),
        adult_unmoderated_flagged: count(&|r| !removed(r.status)),
        adult_unmoderated_fp: count(&|r| r.false_positive && !removed(r.status)),
    };
    let summary = compliance_summary(&counts)?;
    let ratios: [(&str, Ratio); 4] = [
        ("flagged_fraction", summary.flagged_fraction),
        ("removed_fraction", summary.removed_fraction),
        ("moderated_fraction", summary.moderated_fraction),
        ("removed_adult_fraction", summary.removed_adult_fraction),
    ];
    let ratio_rows: Vec<RatioRow> = ratios
        .iter()
        .map(|(name, r)| RatioRow {
            name,
            numerator: r.numerator,
            denominator: r.denominator,
            value: r.value,
        })
        .collect();
    write_csv(&ctx.dir.join("compliance.csv"), &ratio_rows)?;

    // Score CDFs over all ads and over the ads still online.
    let step = ctx.cfg.explicit.cdf_step;
    let retained: Vec<ExplicitScore> = scores
        .iter()
        .filter(|s| status.get(s.tweet_id.as_str()).is_some_and(|&st| !removed(st)))
        .cloned()
        .collect();
    let mut cdf_rows = Vec::new();
    let mut cdf_series = Vec::new();
    for (name, set) in [("all", &scores), ("rehydrated", &retained)] {
        let cdf = score_cdf(set, step)?;
        cdf_series.push(Series {
            name: name.into(),
            points: cdf.iter().map(|p| (p.score, p.cumulative_fraction)).collect(),
        });
        cdf_rows.extend(cdf.into_iter().map(|p| CdfRow {
            series: name,
            score: p.score,
            count_at_or_below: p.count_at_or_below,
            total: p.total,
            cumulative_fraction: p.cumulative_fraction,
        }));
    }
    write_csv(&ctx.dir.join("score_cdf.csv"), &cdf_rows)?;
    svg(ctx, "score_cdf.svg", line_chart_svg("Explicitness score CDF", "score", "cumulative fraction", &cdf_series))?;

    let removal: Vec<DailyRemoval> = read_csv(&ctx.upstream(Stage::Rehydrate).join("daily_removal.csv"))?;
    let violating: BTreeSet<String> = adult.iter().filter(|r| r.violating).map(|r| r.tweet_id.clone()).collect();
    let daily_violating = daily_violating_series(&initial, &violating);
    write_csv(&ctx.dir.join("daily_violating.csv"), &daily_violating)?;
    let x = day_axis(removal.iter().map(|d| d.date).chain(daily_violating.iter().map(|d| d.date)));
    svg(
        ctx,
        "daily.svg",
        line_chart_svg(
            "Daily removal and violating fractions",
            "day of collection",
            "fraction of ads",
            &[
                Series {
                    name: "removed".into(),
                    points: removal.iter().map(|d| (x(d.date), d.removal_fraction)).collect(),
                },
                Series {
                    name: "violating".into(),
                    points: daily_violating.iter().map(|d| (x(d.date), d.fraction)).collect(),
                },
            ],
        ),
    )?;

    let weekdays = weekday_trend(&initial);
    write_csv(&ctx.dir.join("weekday.csv"), &weekdays)?;
    let bars: Vec<(String, f64)> = weekdays.iter().map(|w| (w.weekday.clone(), w.mean_ads)).collect();
    svg(ctx, "weekday.svg", bar_chart_svg("Mean ads per weekday", "ads", &bars))?;

    let languages = language_distribution(&initial);
    write_csv(&ctx.dir.join("languages.csv"), &languages)?;
    let bars: Vec<(String, f64)> = languages.iter().take(12).map(|l| (l.lang.clone(), l.fraction)).collect();
    svg(ctx, "languages.svg", bar_chart_svg("Ad languages", "fraction of ads", &bars))?;

    let disparity: Vec<LanguageDisparityRow> =
        read_csv(&ctx.upstream(Stage::Calibrate).join("language_disparity.csv"))?;
    let bars: Vec<(String, f64)> = disparity.iter().take(12).map(|l| (l.lang.clone(), l.moderation_rate)).collect();
    svg(
        ctx,
        "language_disparity.svg",
        bar_chart_svg("Moderated share of violating ads", "moderation rate", &bars),
    )?;

    let verdicts: Vec<UrlVerdict> = read_csv(&ctx.upstream(Stage::Urls).join(VERDICTS_FILE))?;
    let risk = url_risk_datasets(
        &initial,
        &verdicts,
        &scores,
        ctx.cfg.explicit.threshold,
        ctx.cfg.urls.threshold,
    );
    write_csv(&ctx.dir.join("url_daily.csv"), &risk.daily)?;
    write_csv(&ctx.dir.join("url_scatter.csv"), &risk.scatter)?;
    let x = day_axis(risk.daily.iter().map(|d| d.date));
    svg(
        ctx,
        "url_daily.svg",
        line_chart_svg(
            "Daily share of ads with unsafe URLs",
            "day of collection",
            "fraction of ads",
            &[Series {
                name: "problematic".into(),
                points: risk.daily.iter().map(|d| (x(d.date), d.fraction)).collect(),
            }],
        ),
    )?;
    let scatter: Vec<Series> = [(ScatterPartition::Adult, "adult"), (ScatterPartition::NonAdult, "non-adult")]
        .into_iter()
        .map(|(part, name)| Series {
            name: name.into(),
            points: risk
                .scatter
                .iter()
                .filter(|r| r.partition == part)
                .map(|r| (f64::from(r.embedded_total), f64::from(r.landing_total)))
                .collect(),
        })
        .collect();
    svg(
        ctx,
        "url_scatter.svg",
        scatter_svg("Embedded vs landing detections", "embedded URL detections", "landing URL detections", &scatter),
    )?;
    let sensitivity: Vec<SensitivityRow> = read_csv(&ctx.upstream(Stage::Urls).join(SENSITIVITY_FILE))?;
    svg(
        ctx,
        "url_sensitivity.svg",
        line_chart_svg(
            "Problematic ads by URL threshold",
            "threshold",
            "problematic ads",
            &[Series {
                name: "problematic".into(),
                points: sensitivity.iter().map(|s| (f64::from(s.threshold), s.problematic as f64)).collect(),
            }],
        ),
    )?;

    let calibrate_dir = ctx.upstream(Stage::Calibrate);
    let calibration = optional_json(calibrate_dir.join("calibration.json"))?;
    write_json(
        &ctx.dir.join("summary.json"),
        &json!({
            "counts": counts,
            "compliance": summary,
            "calibration": {
                "configured_threshold": ctx.cfg.explicit.threshold,
                "chosen_threshold": calibration.pointer("/report/chosen_threshold"),
                "labeled_items": calibration.get("labeled_items"),
            },
            "agreement": optional_json(calibrate_dir.join("agreement.json"))?,
            "clusters": optional_json(ctx.upstream(Stage::Cluster).join("summary.json"))?,
            "urls": {
                "summary": optional_json(ctx.upstream(Stage::Urls).join("summary.json"))?,
                "mean_daily_fraction": risk.mean_daily_fraction(),
                "adult": risk.adult,
                "non_adult": risk.non_adult,
            },
        }),
    )?;
    Ok(Rows::from([
        ("total_ads".into(), summary.total_ads as usize),
        ("violating_total".into(), summary.violating_total as usize),
    ]))
}
