use serde::{Deserialize, Serialize};

/// A tweet is problematic when one of its URLs scores at least this much.
pub const DEFAULT_URL_THRESHOLD: u32 = 3;

/// Reputation counts for one embedded URL and its landing page.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UrlCounts {
    pub mal_e: u32,
    pub sus_e: u32,
    pub mal_l: u32,
    pub sus_l: u32,
}

impl UrlCounts {
    pub fn new(mal_e: u32, sus_e: u32, mal_l: u32, sus_l: u32) -> Self {
        Self {
            mal_e,
            sus_e,
            mal_l,
            sus_l,
        }
    }

    pub fn embedded_total(&self) -> u32 {
        self.mal_e + self.sus_e
    }

    pub fn landing_total(&self) -> u32 {
        self.mal_l + self.sus_l
    }
}

/// `max(mal_e + sus_e, mal_l + sus_l)`.
pub fn url_score(counts: &UrlCounts) -> u32 {
    counts.embedded_total().max(counts.landing_total())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlVerdict {
    pub tweet_id: String,
    pub mal_e: u32,
    pub sus_e: u32,
    pub mal_l: u32,
    pub sus_l: u32,
    pub score: u32,
    pub problematic: bool,
    /// Number of distinct embedded URLs scored.
    pub urls: usize,
}

impl UrlVerdict {
    pub fn counts(&self) -> UrlCounts {
        UrlCounts::new(self.mal_e, self.sus_e, self.mal_l, self.sus_l)
    }
}

/// Scores every URL of a tweet and keeps the components of the highest
/// scoring one (the first on ties). A tweet without URLs scores 0.
pub fn score_tweet_urls(tweet_id: &str, per_url: &[UrlCounts], threshold: u32) -> UrlVerdict {
    let best = per_url
        .iter()
        .copied()
        .fold(None::<UrlCounts>, |best, c| match best {
            Some(b) if url_score(&b) >= url_score(&c) => Some(b),
            _ => Some(c),
        })
        .unwrap_or_default();
    let score = url_score(&best);
    UrlVerdict {
        tweet_id: tweet_id.to_string(),
        mal_e: best.mal_e,
        sus_e: best.sus_e,
        mal_l: best.mal_l,
        sus_l: best.sus_l,
        score,
        problematic: !per_url.is_empty() && score >= threshold,
        urls: per_url.len(),
    }
}

/// Number of tweets with at least one URL scoring `>= threshold`.
pub fn count_problematic<'a, I>(per_tweet: I, threshold: u32) -> usize
where
    I: IntoIterator<Item = &'a [UrlCounts]>,
{
    per_tweet
        .into_iter()
        .filter(|urls| urls.iter().any(|c| url_score(c) >= threshold))
        .count()
}

/// Problematic-tweet count at each threshold.
pub fn threshold_sensitivity(per_tweet: &[Vec<UrlCounts>], thresholds: &[u32]) -> Vec<(u32, usize)> {
    thresholds
        .iter()
        .map(|&t| (t, count_problematic(per_tweet.iter().map(Vec::as_slice), t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formula_examples() {
        let v = score_tweet_urls("t", &[UrlCounts::new(0, 0, 2, 1)], 3);
        assert_eq!((v.score, v.problematic), (3, true));
        let v = score_tweet_urls("t", &[UrlCounts::new(1, 1, 0, 0)], 3);
        assert_eq!((v.score, v.problematic), (2, false));
        let v = score_tweet_urls("t", &[UrlCounts::new(4, 0, 1, 1)], 3);
        assert_eq!((v.score, v.problematic), (4, true));
    }

    #[test]
    fn keeps_max_url_components() {
        let v = score_tweet_urls(
            "t",
            &[UrlCounts::new(1, 0, 0, 0), UrlCounts::new(0, 0, 6, 1), UrlCounts::new(7, 0, 0, 0)],
            3,
        );
        assert_eq!(v.counts(), UrlCounts::new(0, 0, 6, 1));
        assert_eq!(v.urls, 3);
        let empty = score_tweet_urls("t", &[], 0);
        assert!(!empty.problematic);
        assert_eq!(empty.score, 0);
    }

    fn counts() -> impl Strategy<Value = UrlCounts> {
        (0u32..20, 0u32..20, 0u32..20, 0u32..20).prop_map(|(a, b, c, d)| UrlCounts::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn monotone_in_every_count(c in counts(), which in 0usize..4, bump in 1u32..5) {
            let mut up = c;
            match which {
                0 => up.mal_e += bump,
                1 => up.sus_e += bump,
                2 => up.mal_l += bump,
                _ => up.sus_l += bump,
            }
            prop_assert!(url_score(&up) >= url_score(&c));
        }

        #[test]
        fn symmetric_in_embedded_and_landing(c in counts()) {
            let swapped = UrlCounts::new(c.mal_l, c.sus_l, c.mal_e, c.sus_e);
            prop_assert_eq!(url_score(&swapped), url_score(&c));
        }

        #[test]
        fn threshold_monotone(tweets in proptest::collection::vec(proptest::collection::vec(counts(), 0..4), 0..30)) {
            let sens = threshold_sensitivity(&tweets, &[1, 2, 3, 4, 5, 6, 7, 8]);
            prop_assert!(sens.windows(2).all(|w| w[1].1 <= w[0].1));
        }

        #[test]
        fn all_zero_counts_never_problematic(n in 0usize..10, t in 1u32..10) {
            let tweets = vec![vec![UrlCounts::default(); n]; 5];
            prop_assert_eq!(count_problematic(tweets.iter().map(Vec::as_slice), t), 0);
        }
    }
}
