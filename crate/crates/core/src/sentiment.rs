//! Lexicon-and-rule sentiment labelling of individual interactions.
//!
//! Each interaction gets a `Positive`/`Neutral`/`Negative` label. Retweets
//! are always neutral: they were not authored by the ego and carry no
//! composed text. When a record carries a precomputed label it is passed
//! through unchanged; otherwise the text is scored against a valence
//! lexicon and the compound score is cut at the +-0.05 thresholds.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{InteractionRecord, Kind};

/// Compound score above which a text is labelled positive (negative below
/// the negated value).
pub const COMPOUND_THRESHOLD: f64 = 0.05;

/// Denominator constant of the compound-score normalisation
/// `s / sqrt(s^2 + ALPHA)`.
pub const NORMALIZATION_ALPHA: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neu")]
    Neutral,
    #[serde(rename = "neg")]
    Negative,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "pos",
            Polarity::Neutral => "neu",
            Polarity::Negative => "neg",
        }
    }
}

/// A sentiment label together with the compound score that produced it.
/// The score is 0 when the label was precomputed or forced by the retweet
/// rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentLabel {
    pub value: Polarity,
    pub score: f64,
}

impl SentimentLabel {
    fn forced(value: Polarity) -> Self {
        SentimentLabel { value, score: 0.0 }
    }
}

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("lexicon has no valence entries but scoring was required")]
    EmptyLexicon,
    #[error("malformed lexicon line {line}: {reason}")]
    MalformedLexicon { line: usize, reason: String },
    #[error("lexicon read error: {0}")]
    Io(#[from] std::io::Error),
}

/// Token valence lexicon with booster and negator word lists.
///
/// The file format is UTF-8 TSV, `token<TAB>valence` per line. Lines after
/// a `#boosters` header are read as booster increments and lines after a
/// `#negators` header as bare negator tokens. The SHA-256 of the file
/// content is recorded so reports can state exactly which lexicon ran.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
    boosters: HashMap<String, f64>,
    negators: HashSet<String>,
    sha256: String,
}

#[derive(PartialEq)]
enum Section {
    Entries,
    Boosters,
    Negators,
}

impl Lexicon {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, SentimentError> {
        let mut hasher = Sha256::new();
        let mut lex = Lexicon::default();
        let mut section = Section::Entries;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if trimmed == "#boosters" {
                section = Section::Boosters;
                continue;
            }
            if trimmed == "#negators" {
                section = Section::Negators;
                continue;
            }
            if trimmed.starts_with('#') {
                continue;
            }
            if section == Section::Negators {
                lex.negators.insert(trimmed.to_lowercase());
                continue;
            }
            let (token, valence) =
                trimmed
                    .split_once('\t')
                    .ok_or_else(|| SentimentError::MalformedLexicon {
                        line: idx + 1,
                        reason: "expected token<TAB>valence".into(),
                    })?;
            let valence: f64 =
                valence
                    .trim()
                    .parse()
                    .map_err(|_| SentimentError::MalformedLexicon {
                        line: idx + 1,
                        reason: format!("bad valence {valence:?}"),
                    })?;
            if !valence.is_finite() {
                return Err(SentimentError::MalformedLexicon {
                    line: idx + 1,
                    reason: "valence must be finite".into(),
                });
            }
            let token = token.to_lowercase();
            match section {
                Section::Entries => {
                    lex.entries.insert(token, valence);
                }
                Section::Boosters => {
                    lex.boosters.insert(token, valence);
                }
                Section::Negators => unreachable!(),
            }
        }
        lex.sha256 = format!("{:x}", hasher.finalize());
        Ok(lex)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, SentimentError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    /// Build a lexicon directly from entry/booster/negator lists. Used by
    /// tests; the hash is computed over a canonical serialisation.
    pub fn from_parts(
        entries: impl IntoIterator<Item = (String, f64)>,
        boosters: impl IntoIterator<Item = (String, f64)>,
        negators: impl IntoIterator<Item = String>,
    ) -> Self {
        let mut lex = Lexicon {
            entries: entries.into_iter().collect(),
            boosters: boosters.into_iter().collect(),
            negators: negators.into_iter().collect(),
            sha256: String::new(),
        };
        let mut canonical: Vec<String> = lex
            .entries
            .iter()
            .map(|(t, v)| format!("e\t{t}\t{v}"))
            .chain(lex.boosters.iter().map(|(t, v)| format!("b\t{t}\t{v}")))
            .chain(lex.negators.iter().map(|t| format!("n\t{t}")))
            .collect();
        canonical.sort();
        lex.sha256 = format!("{:x}", Sha256::digest(canonical.join("\n").as_bytes()));
        lex
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    /// Lexicon with every entry valence negated. Booster increments and
    /// negators are unchanged.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v = -*v;
        }
        out
    }

    fn knows(&self, token: &str) -> bool {
        self.entries.contains_key(token)
            || self.boosters.contains_key(token)
            || self.negators.contains(token)
    }

    /// Lowercase and split on whitespace; a whitespace-delimited token that
    /// appears verbatim in the lexicon (entries, boosters or negators) is
    /// kept whole, which preserves emoticons like `:)`. Anything else is
    /// further split on non-alphanumeric characters.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for raw in text.split_whitespace() {
            let lower = raw.to_lowercase();
            if self.knows(&lower) {
                out.push(lower);
                continue;
            }
            out.extend(
                lower
                    .split(|c: char| !c.is_alphanumeric())
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned),
            );
        }
        out
    }
}

/// Compound score of a text in [-1, 1].
///
/// The raw sum adds the valence of every lexicon token. A negator flips
/// the valence of the immediately following token (only when that token is
/// a lexicon entry); a booster adds its increment in the direction of the
/// following entry's valence. The raw sum `s` is normalised to
/// `s / sqrt(s^2 + 15)`.
pub fn score_text(text: &str, lexicon: &Lexicon) -> f64 {
    let tokens = lexicon.tokenize(text);
    let mut sum = 0.0;
    for (i, token) in tokens.iter().enumerate() {
        let Some(&valence) = lexicon.entries.get(token) else {
            continue;
        };
        let mut v = valence;
        if i > 0 {
            let prev = &tokens[i - 1];
            if lexicon.negators.contains(prev) {
                v = -v;
            } else if let Some(&inc) = lexicon.boosters.get(prev) {
                v += v.signum() * inc;
            }
        }
        sum += v;
    }
    normalize(sum)
}

fn normalize(raw: f64) -> f64 {
    (raw / (raw * raw + NORMALIZATION_ALPHA).sqrt()).clamp(-1.0, 1.0)
}

/// Map a compound score to a label through the +-0.05 thresholds.
pub fn label_from_score(score: f64) -> Polarity {
    if score > COMPOUND_THRESHOLD {
        Polarity::Positive
    } else if score < -COMPOUND_THRESHOLD {
        Polarity::Negative
    } else {
        Polarity::Neutral
    }
}

/// Label a single interaction.
///
/// Precedence: the retweet-neutral rule is unconditional and beats
/// everything; a precomputed label beats scoring; otherwise the text is
/// scored against the lexicon (a missing text scores 0, i.e. neutral).
pub fn classify_interaction(
    record: &InteractionRecord,
    lexicon: &Lexicon,
) -> Result<SentimentLabel, SentimentError> {
    if record.kind == Kind::Retweet {
        return Ok(SentimentLabel::forced(Polarity::Neutral));
    }
    if let Some(label) = record.label {
        return Ok(SentimentLabel::forced(label));
    }
    if lexicon.is_empty() {
        return Err(SentimentError::EmptyLexicon);
    }
    let score = record
        .text
        .as_deref()
        .map(|t| score_text(t, lexicon))
        .unwrap_or(0.0);
    Ok(SentimentLabel {
        value: label_from_score(score),
        score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{InteractionRecord, Kind};

    fn lex() -> Lexicon {
        Lexicon::from_parts(
            [
                ("good".into(), 1.9),
                ("great".into(), 3.1),
                ("terrible".into(), -2.1),
                ("awful".into(), -2.0),
                ("love".into(), 3.2),
                (":)".into(), 2.0),
            ],
            [("very".into(), 0.3)],
            ["not".into()],
        )
    }

    fn record(kind: Kind, text: Option<&str>, label: Option<Polarity>) -> InteractionRecord {
        InteractionRecord {
            ego_id: "e".into(),
            alter_id: "a".into(),
            kind,
            ts: 0,
            text: text.map(str::to_owned),
            label,
        }
    }

    #[test]
    fn retweet_is_always_neutral() {
        let r = record(Kind::Retweet, Some("terrible awful"), Some(Polarity::Negative));
        let l = classify_interaction(&r, &lex()).unwrap();
        assert_eq!(l.value, Polarity::Neutral);
        assert_eq!(l.score, 0.0);
    }

    #[test]
    fn empty_text_is_neutral() {
        let r = record(Kind::Reply, Some(""), None);
        let l = classify_interaction(&r, &lex()).unwrap();
        assert_eq!(l.value, Polarity::Neutral);
        assert_eq!(l.score, 0.0);
    }

    #[test]
    fn precomputed_label_passes_through() {
        let r = record(Kind::Mention, Some("great great great"), Some(Polarity::Negative));
        let l = classify_interaction(&r, &lex()).unwrap();
        assert_eq!(l.value, Polarity::Negative);
    }

    #[test]
    fn empty_lexicon_errors_when_scoring_required() {
        let r = record(Kind::Reply, Some("anything"), None);
        let empty = Lexicon::default();
        assert!(matches!(
            classify_interaction(&r, &empty),
            Err(SentimentError::EmptyLexicon)
        ));
    }

    #[test]
    fn positive_three_token_sentence_and_negated_flip() {
        // Hand computation: good + great + love = 1.9 + 3.1 + 3.2 = 8.2,
        // normalised 8.2 / sqrt(8.2^2 + 15) = 0.9043...
        let s = score_text("good great love", &lex());
        let expected = 8.2 / (8.2f64 * 8.2 + 15.0).sqrt();
        assert!((s - expected).abs() < 1e-12);
        assert!(s > 0.6);
        assert_eq!(label_from_score(s), Polarity::Positive);

        let s_neg = score_text("not good not great not love", &lex());
        assert!((s_neg + s).abs() < 1e-12);
        assert_eq!(label_from_score(s_neg), Polarity::Negative);
    }

    #[test]
    fn negator_flips_only_immediate_successor() {
        let plain = score_text("good", &lex());
        assert!((score_text("not good", &lex()) + plain).abs() < 1e-12);
        // Negator separated from the entry by a non-lexicon token: no flip.
        assert!((score_text("not really good", &lex()) - plain).abs() < 1e-12);
    }

    #[test]
    fn booster_increments_toward_valence_sign() {
        let boosted = score_text("very good", &lex());
        let plain = score_text("good", &lex());
        assert!(boosted > plain);
        let boosted_neg = score_text("very terrible", &lex());
        let plain_neg = score_text("terrible", &lex());
        assert!(boosted_neg < plain_neg);
    }

    #[test]
    fn cancelling_valences_score_zero() {
        // terrible (-2.1) + good (1.9) + small positive leftover is not 0,
        // so pick an exact cancellation: awful (-2.0) + :) (2.0).
        assert_eq!(score_text("awful :)", &lex()), 0.0);
    }

    #[test]
    fn emoticon_survives_tokenization() {
        assert_eq!(lex().tokenize("so :) yay!"), vec!["so", ":)", "yay"]);
    }

    #[test]
    fn score_is_antisymmetric_under_lexicon_negation() {
        let l = lex();
        let n = l.negated();
        for text in ["good great", "not terrible", "very good :)", "plain words"] {
            assert!((score_text(text, &l) + score_text(text, &n)).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_partition_is_exact() {
        assert_eq!(label_from_score(0.05), Polarity::Neutral);
        assert_eq!(label_from_score(-0.05), Polarity::Neutral);
        assert_eq!(label_from_score(0.050000001), Polarity::Positive);
        assert_eq!(label_from_score(-0.050000001), Polarity::Negative);
    }
}
