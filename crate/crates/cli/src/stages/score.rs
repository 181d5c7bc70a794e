//! Translate where needed and score every ad for sexual explicitness.

use adaudit_core::explicit::{score_texts, ScoringOptions};
use serde_json::json;

use super::{load_ads, Ctx, Rows};
use crate::output::{write_csv, write_json};

pub const SCORES_FILE: &str = "scores.csv";

pub fn run(ctx: &Ctx) -> anyhow::Result<Rows> {
    let (initial, _) = load_ads(ctx.run)?;
    let options = ScoringOptions {
        untranslated_langs: ctx.cfg.explicit.untranslated_langs.clone(),
    };
    let translator = ctx.clients.translator()?;
    let scorer = ctx.clients.scorer()?;
    let outcome = score_texts(&initial, translator.as_ref(), scorer.as_ref(), &options)?;
    if !outcome.failures.is_empty() {
        log::warn!("{} ads could not be scored; see failures.csv", outcome.failures.len());
    }
    let mut scores = outcome.scores;
    scores.sort_by(|a, b| a.tweet_id.cmp(&b.tweet_id));
    write_csv(&ctx.dir.join(SCORES_FILE), &scores)?;
    write_csv(&ctx.dir.join("failures.csv"), &outcome.failures)?;
    let translated = scores.iter().filter(|s| s.translated).count();
    write_json(
        &ctx.dir.join("summary.json"),
        &json!({
            "ads": initial.len(),
            "scored": scores.len(),
            "translated": translated,
            "failed": outcome.failures.len(),
            "attribute": ctx.cfg.explicit.attribute,
        }),
    )?;
    Ok(Rows::from([
        ("scored".into(), scores.len()),
        ("failed".into(), outcome.failures.len()),
    ]))
}
