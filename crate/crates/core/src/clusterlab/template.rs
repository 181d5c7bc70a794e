use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::TweetRecord;

/// Lexicon bundled with the crate.
pub const DEFAULT_LEXICON: &str = include_str!("../../data/adult_lexicon.txt");

/// Share of tokens after the leading period that must be lexicon words.
const LEXICON_SHARE: f64 = 0.8;
const MIN_TOKENS: usize = 2;

static CAMEL_CASE_NAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-Z][a-z]+[A-Z][a-z]+[0-9]*$").expect("valid regex"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdultLexicon {
    words: HashSet<String>,
}

impl Default for AdultLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON)
    }
}

impl AdultLexicon {
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        let token = token.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
        self.words.contains(&token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Whether `text` is a period followed by whitespace-separated words that
    /// are mostly lexicon hits.
    pub fn matches_template(&self, text: &str) -> bool {
        let Some(rest) = text.trim().strip_prefix('.') else {
            return false;
        };
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        if tokens.len() < MIN_TOKENS {
            return false;
        }
        let hits = tokens.iter().filter(|t| self.contains(t)).count();
        hits as f64 >= LEXICON_SHARE * tokens.len() as f64
    }
}

pub fn is_camel_case_name(username: &str) -> bool {
    CAMEL_CASE_NAME.is_match(username)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateMatches {
    /// Ads whose text follows the ". word word ..." template.
    pub text_pattern: BTreeSet<String>,
    /// Ads posted from usernames shaped like FirstnameLastname.
    pub camel_case_usernames: BTreeSet<String>,
}

pub fn detect_template_pattern(records: &[TweetRecord], lexicon: &AdultLexicon) -> TemplateMatches {
    let mut out = TemplateMatches::default();
    for r in records {
        if lexicon.matches_template(&r.text) {
            out.text_pattern.insert(r.tweet_id.clone());
        }
        if is_camel_case_name(&r.username) {
            out.camel_case_usernames.insert(r.tweet_id.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_rules() {
        let lex = AdultLexicon::default();
        assert!(lex.matches_template(". hot singles nudes"));
        assert!(lex.matches_template(".sexy xxx"));
        assert!(lex.matches_template(". hot singles nudes   \n"));
        assert!(!lex.matches_template("Normal ad text."));
        assert!(!lex.matches_template(". hot"));
        assert!(!lex.matches_template(". summer sale on shoes now"));
        // Four of five tokens is exactly the required share.
        assert!(lex.matches_template(". hot sexy nude xxx shoes"));
        assert!(!lex.matches_template(". hot sexy shoes"));
    }

    #[test]
    fn camel_case() {
        assert!(is_camel_case_name("JessicaMiller"));
        assert!(is_camel_case_name("AnnaSmith1994"));
        assert!(!is_camel_case_name("jessicamiller"));
        assert!(!is_camel_case_name("JESSICAMiller"));
        assert!(!is_camel_case_name("Jessica_Miller"));
        assert!(!is_camel_case_name("AnnaMarieSmith"));
    }

    #[test]
    fn lexicon_file_parses() {
        let lex = AdultLexicon::default();
        assert!(lex.len() > 20);
        assert!(lex.contains("NSFW,"));
        assert!(!lex.contains("# Words"));
    }
}
