//! Deterministic desk-scale fixture: captures, labels and a full cassette,
//! so the whole pipeline runs offline.
//!
//! The corpus has four weeks of ads with a Friday peak. A third of the ads
//! are adult, posted by CamelCase-named advertisers, and most adult texts
//! follow the ". word word" template. Adult ads are removed far more often
//! than the rest, and many adult URLs redirect through trackers to unsafe
//! landing pages.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use adaudit_core::corpus::{write_tweet_stream, MediaKind, TweetRecord};
use adaudit_core::services::{
    Cassette, CassetteFetcher, CassetteTransport, EmbeddingService, FetchError, FetchResponse, PerspectiveClient,
    TranslateClient, VirusTotalClient, SEXUALLY_EXPLICIT,
};
use adaudit_core::sha256_hex;
use anyhow::Context;
use chrono::{DateTime, Datelike, Duration, TimeZone, Utc, Weekday};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use url::Url;

pub const CONFIG_FILE: &str = "audit.toml";
const SEED: u64 = 20221107;
const DAYS: i64 = 28;
const BASE_ADS_PER_DAY: f64 = 40.0;
const NON_AD_RECORDS: usize = 200;
const EMBED_DIM: usize = 16;
const ANNOTATORS: [&str; 4] = ["a1", "a2", "a3", "a4"];
const LABEL_FLIP: f64 = 0.03;
const ADULT_REMOVAL: f64 = 0.63;
const OTHER_REMOVAL: f64 = 0.12;

const LANGS: [(&str, f64); 7] = [
    ("en", 0.60),
    ("ja", 0.13),
    ("ar", 0.09),
    ("es", 0.08),
    ("fr", 0.04),
    ("tr", 0.03),
    ("th", 0.03),
];

/// Adult topics, each with lexicon words so template texts are detectable.
const ADULT_TOPICS: [&[&str]; 4] = [
    &["dating", "flirt", "hookup", "lonely", "desire", "girls", "babes", "cuties"],
    &["cam", "camgirl", "cams", "live", "chat", "naughty", "kinky", "lewd"],
    &["leaked", "nude", "naked", "nsfw", "explicit", "erotic", "busty", "boobs"],
    &["escort", "escorts", "milf", "lingerie", "bikini", "booty", "dirty", "fetish"],
];

const OTHER_TOPICS: [(&str, &[&str]); 5] = [
    ("shoes", &["sneakers", "boots", "sandals", "trainers"]),
    ("games", &["quest", "arena", "puzzle", "racing"]),
    ("finance", &["savings", "loans", "cards", "trading"]),
    ("travel", &["flights", "hotels", "cruises", "rail passes"]),
    ("food", &["pizza", "noodles", "burgers", "salads"]),
];

const FIRST_NAMES: [&str; 12] = [
    "Jessica", "Anna", "Maria", "Sofia", "Emily", "Laura", "Chloe", "Nina", "Olivia", "Sarah", "Yuki", "Lena",
];
const LAST_NAMES: [&str; 10] = [
    "Miller", "Smith", "Garcia", "Rossi", "Tanaka", "Novak", "Brown", "Silva", "Weber", "Dubois",
];
const AD_SOURCES: [&str; 3] = ["Twitter for Advertisers", "Twitter Ads", "advertiser-interface"];

#[derive(Debug, Clone, Default, Serialize)]
pub struct FixtureSummary {
    pub ads: usize,
    pub adult_ads: usize,
    pub removed_ads: usize,
    pub non_ads: usize,
    pub false_positives: usize,
    pub distinct_urls: usize,
    pub cassette_entries: usize,
}

struct Advertiser {
    author_id: String,
    username: String,
    adult: bool,
    topic: usize,
    account_created_at: DateTime<Utc>,
    urls: Vec<String>,
}

/// Where a URL leads and how the reputation service rates each step.
struct UrlPlan {
    /// `(url, response)` pairs in fetch order.
    fetches: Vec<(String, Result<FetchResponse, FetchError>)>,
    /// `(url, malicious, suspicious)` for the embedded and landing URL.
    verdicts: Vec<(String, u32, u32)>,
}

fn ok(status: u16, location: Option<&str>) -> Result<FetchResponse, FetchError> {
    Ok(FetchResponse {
        status,
        location: location.map(String::from),
        body: None,
    })
}

fn pick_lang(rng: &mut ChaCha8Rng) -> &'static str {
    let mut x: f64 = rng.random();
    for (lang, p) in LANGS {
        if x < p {
            return lang;
        }
        x -= p;
    }
    "en"
}

fn token(rng: &mut ChaCha8Rng, len: usize) -> String {
    const ALPHABET: &[u8] = b"abcdefghijkmnopqrstuvwxyzABCDEFGHJKLMNPQRSTUVWXYZ23456789";
    (0..len).map(|_| *ALPHABET.choose(rng).unwrap() as char).collect()
}

fn plan_url(rng: &mut ChaCha8Rng, adult: bool, k: usize) -> (String, UrlPlan) {
    let roll: f64 = rng.random();
    if adult && roll < 0.55 {
        // Shortener, tracker, unsafe landing page.
        let short = format!("https://bit.ly/{}", token(rng, 7));
        let tracker = format!("https://trk{k}.example/r?cid={}", rng.random_range(1000..9999));
        let landing = format!("https://meet{k}.example/join");
        let (mal, sus) = if rng.random_bool(0.8) {
            (rng.random_range(2..=6), rng.random_range(0..=2))
        } else {
            (rng.random_range(0..=1), rng.random_range(0..=1))
        };
        let plan = UrlPlan {
            fetches: vec![
                (short.clone(), ok(301, Some(&tracker))),
                (tracker.clone(), ok(302, Some(&landing))),
                (landing.clone(), ok(200, None)),
            ],
            verdicts: vec![(short.clone(), 0, 0), (landing, mal, sus)],
        };
        return (short, plan);
    }
    if roll < 0.05 {
        let url = format!("https://slow{k}.example/");
        let plan = UrlPlan {
            fetches: vec![(url.clone(), Err(FetchError::Timeout))],
            verdicts: vec![(url.clone(), 0, 0)],
        };
        return (url, plan);
    }
    if roll < 0.45 {
        let short = format!("https://t.co/{}", token(rng, 8));
        let landing = format!("https://shop{k}.example/offer?utm_campaign=week{}", rng.random_range(1..5));
        let (mal, sus) = if !adult && rng.random_bool(0.03) { (3, 1) } else { (0, 0) };
        let plan = UrlPlan {
            fetches: vec![(short.clone(), ok(301, Some(&landing))), (landing.clone(), ok(200, None))],
            verdicts: vec![(short.clone(), 0, 0), (landing, mal, sus)],
        };
        return (short, plan);
    }
    let url = format!("https://brand{k}.example/");
    let (mal, sus) = if rng.random_bool(if adult { 0.2 } else { 0.02 }) {
        (rng.random_range(3..=5), 0)
    } else {
        (0, rng.random_range(0..=1))
    };
    let plan = UrlPlan {
        fetches: vec![(url.clone(), ok(200, None))],
        verdicts: vec![(url.clone(), mal, sus)],
    };
    (url, plan)
}

fn embedding(topic: usize, text: &str) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from_str_radix(&sha256_hex(text)[..16], 16).unwrap_or(0));
    let noise = Normal::new(0.0, 0.08).expect("valid sigma");
    (0..EMBED_DIM)
        .map(|d| {
            let centre = if d == topic % EMBED_DIM { 1.0 } else { 0.0 };
            centre + noise.sample(&mut rng)
        })
        .collect()
}

fn adult_text(rng: &mut ChaCha8Rng, topic: usize) -> String {
    let words = ADULT_TOPICS[topic];
    let n = rng.random_range(3..=4);
    let picked: Vec<&str> = (0..n).map(|_| *words.choose(rng).unwrap()).collect();
    if rng.random_bool(0.7) {
        format!(". {}", picked.join(" "))
    } else {
        format!("Meet {} tonight, {} only on our app", picked[0], picked[1..].join(" "))
    }
}

fn other_text(rng: &mut ChaCha8Rng, topic: usize, brand: &str) -> String {
    let (name, products) = OTHER_TOPICS[topic];
    let product = products.choose(rng).unwrap();
    format!(
        "{brand} {name} week: {}% off {product}, code {}",
        rng.random_range(10..60),
        rng.random_range(1000..99999)
    )
}

fn make_advertisers(rng: &mut ChaCha8Rng, start: DateTime<Utc>) -> Vec<Advertiser> {
    let mut out = Vec::new();
    let mut names = BTreeSet::new();
    for i in 0..240 {
        let adult = i < 80;
        let username = if adult {
            loop {
                let name = format!(
                    "{}{}{}",
                    FIRST_NAMES.choose(rng).unwrap(),
                    LAST_NAMES.choose(rng).unwrap(),
                    rng.random_range(70..100)
                );
                if names.insert(name.clone()) {
                    break name;
                }
            }
        } else {
            format!("brand_{i:03}")
        };
        let topic = if adult {
            rng.random_range(0..ADULT_TOPICS.len())
        } else {
            rng.random_range(0..OTHER_TOPICS.len())
        };
        // Adult accounts are mostly created just before or during collection.
        let age_days = if adult { rng.random_range(-20..40) } else { rng.random_range(60..2000) };
        out.push(Advertiser {
            author_id: format!("{}", 7_000_000 + i * 17),
            username,
            adult,
            topic,
            account_created_at: start - Duration::days(age_days),
            urls: Vec::new(),
        });
    }
    out
}

fn weekday_weight(day: Weekday) -> f64 {
    match day {
        Weekday::Fri => 1.6,
        Weekday::Sat | Weekday::Sun => 0.8,
        _ => 1.0,
    }
}

/// Writes the fixture into `dir` and returns what was generated.
pub fn generate(dir: &Path) -> anyhow::Result<FixtureSummary> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let cassette_dir = dir.join("cassettes");
    if cassette_dir.exists() {
        fs::remove_dir_all(&cassette_dir)?;
    }
    let cassette = Cassette::new(&cassette_dir);
    let fetch_cassette = CassetteFetcher::new(cassette.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let start = Utc.with_ymd_and_hms(2022, 11, 7, 0, 0, 0).single().expect("valid date");
    let mut advertisers = make_advertisers(&mut rng, start);

    let mut plans: BTreeMap<String, UrlPlan> = BTreeMap::new();
    for (k, adv) in advertisers.iter_mut().enumerate() {
        let n = if rng.random_bool(0.3) { 2 } else { 1 };
        for j in 0..n {
            let (url, plan) = plan_url(&mut rng, adv.adult, k * 2 + j);
            adv.urls.push(url.clone());
            plans.insert(url, plan);
        }
    }

    let mut summary = FixtureSummary::default();
    let mut initial = Vec::new();
    let mut rehydrated = Vec::new();
    let mut texts = BTreeSet::new();
    let mut fp_ids = Vec::new();
    let mut labels = Vec::new();
    let mut next_id: u64 = 1_590_000_000_000_000_000;
    for day in 0..DAYS {
        let date = start + Duration::days(day);
        let n = (BASE_ADS_PER_DAY * weekday_weight(date.weekday())) as usize + rng.random_range(0..6);
        for _ in 0..n {
            let adv = advertisers.choose(&mut rng).unwrap();
            let lang = pick_lang(&mut rng);
            let text = loop {
                let t = if adv.adult {
                    adult_text(&mut rng, adv.topic)
                } else {
                    other_text(&mut rng, adv.topic, &adv.username)
                };
                if texts.insert(t.clone()) {
                    break t;
                }
            };
            next_id += rng.random_range(1_000..50_000);
            let created = date + Duration::seconds(rng.random_range(0..86_400));
            let mut r = TweetRecord::new(
                next_id.to_string(),
                adv.author_id.clone(),
                created,
                *AD_SOURCES.choose(&mut rng).unwrap(),
                text.clone(),
            );
            r.username = adv.username.clone();
            r.lang = lang.to_string();
            r.captured_at = created + Duration::seconds(rng.random_range(1..120));
            r.account_created_at = Some(adv.account_created_at);
            r.follower_count = rng.random_range(0..50_000);
            r.following_count = rng.random_range(0..2_000);
            r.media_kinds = vec![if rng.random_bool(0.6) { MediaKind::Image } else { MediaKind::None }];
            if rng.random_bool(0.8) {
                r.embedded_urls.push(adv.urls.choose(&mut rng).unwrap().clone());
            }

            let score = if adv.adult {
                rng.random_range(0.32..0.99)
            } else if rng.random_bool(0.04) {
                fp_ids.push(r.tweet_id.clone());
                rng.random_range(0.31..0.6)
            } else if rng.random_bool(0.08) {
                rng.random_range(0.05..0.28)
            } else {
                rng.random_range(0.0..0.05)
            };
            let score = (score * 1e4_f64).round() / 1e4;
            record_text(&cassette, &r, score, adv.topic + if adv.adult { 0 } else { ADULT_TOPICS.len() })?;
            for a in ANNOTATORS {
                let truth = adv.adult;
                let said = if rng.random_bool(LABEL_FLIP) { !truth } else { truth };
                labels.push((r.tweet_id.clone(), a, if said { "adult" } else { "not_adult" }));
            }

            summary.ads += 1;
            summary.adult_ads += usize::from(adv.adult);
            let removed = rng.random_bool(if adv.adult { ADULT_REMOVAL } else { OTHER_REMOVAL });
            if removed {
                summary.removed_ads += 1;
            } else {
                let mut again = r.clone();
                again.captured_at = r.captured_at + Duration::days(14) + Duration::hours(2);
                again.follower_count += rng.random_range(0..100);
                rehydrated.push(again);
            }
            initial.push(r);
        }
    }
    for i in 0..NON_AD_RECORDS {
        next_id += 7;
        let created = start + Duration::seconds(rng.random_range(0..DAYS * 86_400));
        let mut r = TweetRecord::new(
            next_id.to_string(),
            format!("{}", 9_000_000 + i),
            created,
            "Twitter for iPhone",
            format!("just a regular post number {i}"),
        );
        r.lang = "en".into();
        initial.push(r);
    }
    summary.non_ads = NON_AD_RECORDS;
    initial.sort_by(|a, b| (a.captured_at, &a.tweet_id).cmp(&(b.captured_at, &b.tweet_id)));
    rehydrated.sort_by(|a, b| (a.captured_at, &a.tweet_id).cmp(&(b.captured_at, &b.tweet_id)));

    type V = VirusTotalClient<CassetteTransport>;
    for (url, plan) in &plans {
        for (u, response) in &plan.fetches {
            fetch_cassette.record(&Url::parse(u)?, response.clone())?;
        }
        for (u, mal, sus) in &plan.verdicts {
            cassette.put(V::SERVICE, &V::request(u).key, &V::response_body(*mal, *sus))?;
        }
        log::debug!("planned {url}");
    }
    summary.distinct_urls = plans.len();
    summary.false_positives = fp_ids.len();

    write_tweet_stream(&initial, BufWriter::new(File::create(dir.join("initial.jsonl"))?))?;
    write_tweet_stream(&rehydrated, BufWriter::new(File::create(dir.join("rehydrated.jsonl"))?))?;
    let mut fp = BufWriter::new(File::create(dir.join("false_positives.txt"))?);
    writeln!(fp, "# Flagged ads confirmed benign on manual review.")?;
    for id in &fp_ids {
        writeln!(fp, "{id}")?;
    }
    fp.flush()?;
    let mut w = csv::Writer::from_path(dir.join("calibration_labels.csv"))?;
    w.write_record(["tweet_id", "annotator", "label"])?;
    for (id, a, label) in &labels {
        w.write_record([id.as_str(), a, label])?;
    }
    w.flush()?;
    fs::write(dir.join(CONFIG_FILE), config_toml())?;
    summary.cassette_entries = walk_count(&cassette_dir)?;
    Ok(summary)
}

fn record_text(cassette: &Cassette, r: &TweetRecord, score: f64, topic: usize) -> anyhow::Result<()> {
    type P = PerspectiveClient<CassetteTransport>;
    type T = TranslateClient<CassetteTransport>;
    type E = EmbeddingService<CassetteTransport>;
    // The fixture's texts are already English, so translation is identity.
    if r.lang != "en" {
        cassette.put(T::SERVICE, &T::request(&r.text, &r.lang).key, &T::response_body(&r.text))?;
    }
    let scorer = P::new(CassetteTransport::new(cassette.clone()));
    cassette.put(P::SERVICE, &scorer.request(&r.text).key, &P::response_body(SEXUALLY_EXPLICIT, score))?;
    cassette.put(E::SERVICE, &E::request(&r.text).key, &E::response_body(&embedding(topic, &r.text)))?;
    Ok(())
}

fn walk_count(dir: &Path) -> std::io::Result<usize> {
    let mut n = 0;
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        n += if entry.file_type()?.is_dir() { walk_count(&entry.path())? } else { 1 };
    }
    Ok(n)
}

fn config_toml() -> String {
    r#"# Desk-scale fixture configuration. Paths are relative to this file.

[run]
out_dir = "runs"
seed = 7

[inputs]
initial = "initial.jsonl"
rehydrated = "rehydrated.jsonl"
calibration_labels = "calibration_labels.csv"
false_positives = "false_positives.txt"

[moderation]
collection_start = "2022-11-07T00:00:00Z"

[cluster]
reduced_dim = 8
blind_sample_size = 200

[urls]
timeout_secs = 5

[services]
cassette_dir = "cassettes"
politeness_ms = 0
"#
    .to_string()
}
