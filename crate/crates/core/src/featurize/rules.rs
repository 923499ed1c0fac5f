//! Indicator features: 0/1 explanatory variables built from labels or text.

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::LabeledDataset;

/// Line-start pattern counted as a list item: optional indent, then `- `,
/// `* `, or digits followed by `.` or `)` and a space.
pub const LIST_ITEM_PATTERN: &str = r"(?m)^[ \t]*(?:[-*]|[0-9]+[.)]) ";
pub const LIST_MIN_ITEMS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseRule {
    pub phrases: Vec<String>,
    pub min_hits: usize,
    #[serde(default)]
    pub case_sensitive: bool,
    #[serde(default)]
    pub count_lists_as_hit: bool,
}

impl PhraseRule {
    pub fn new(phrases: Vec<String>, min_hits: usize) -> Result<Self> {
        let r = PhraseRule {
            phrases,
            min_hits,
            case_sensitive: false,
            count_lists_as_hit: false,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.phrases.is_empty() {
            return Err(Error::invalid("phrase rule needs at least one phrase"));
        }
        if self.min_hits == 0 {
            return Err(Error::invalid("phrase rule min_hits must be at least 1"));
        }
        Ok(())
    }

    /// Distinct phrases present, plus one when list detection is enabled and fires.
    pub fn hits(&self, text: &str) -> usize {
        let haystack = if self.case_sensitive {
            text.to_string()
        } else {
            text.to_lowercase()
        };
        let mut hits = self
            .phrases
            .iter()
            .filter(|p| {
                if self.case_sensitive {
                    haystack.contains(p.as_str())
                } else {
                    haystack.contains(&p.to_lowercase())
                }
            })
            .count();
        if self.count_lists_as_hit && has_list(text) {
            hits += 1;
        }
        hits
    }
}

/// Serializable definition of an indicator, embedded in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndicatorRule {
    /// 1 when the sample's label is one of `targets`.
    Label { targets: Vec<String> },
    /// At least `min_hits` distinct phrases (substring match).
    Phrases(PhraseRule),
    /// Any listed word at word boundaries, case-insensitive.
    Words { words: Vec<String> },
    /// At least `min_count` boundary-matched occurrences across `words`.
    WordCount { words: Vec<String>, min_count: usize },
    /// Whitespace-normalized character count strictly below the threshold.
    Length { threshold_chars: usize },
    /// Share of characters outside letters, digits and space above the threshold.
    SpecialCharRatio { threshold_ratio: f64 },
    /// At least `min_items` lines matching `pattern`.
    Lists { pattern: String, min_items: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorFeature {
    pub name: String,
    pub values: Vec<u8>,
    pub definition: IndicatorRule,
}

impl IndicatorFeature {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }
}

fn word_regex(words: &[String]) -> Result<Regex> {
    if words.is_empty() {
        return Err(Error::invalid("word list is empty"));
    }
    let alts: Vec<String> = words.iter().map(|w| regex::escape(w)).collect();
    Regex::new(&format!(r"(?i)\b(?:{})\b", alts.join("|")))
        .map_err(|e| Error::invalid(format!("bad word list: {e}")))
}

fn list_regex() -> Regex {
    Regex::new(LIST_ITEM_PATTERN).expect("static pattern")
}

pub fn has_list(text: &str) -> bool {
    list_regex().find_iter(text).take(LIST_MIN_ITEMS).count() >= LIST_MIN_ITEMS
}

pub fn normalized_length(text: &str) -> usize {
    let mut count = 0;
    for (i, w) in text.split_whitespace().enumerate() {
        if i > 0 {
            count += 1;
        }
        count += w.chars().count();
    }
    count
}

pub fn special_char_ratio(text: &str) -> f64 {
    let total = text.chars().count();
    let special = text
        .chars()
        .filter(|&c| !(c.is_alphanumeric() || c == ' '))
        .count();
    special as f64 / total.max(1) as f64
}

fn bits<F: Fn(&str) -> bool + Sync + Send>(texts: &[String], f: F) -> Vec<u8> {
    crate::par::map_slice(texts, |t| u8::from(f(t)))
}

impl IndicatorRule {
    /// Evaluates a text-based rule. Label rules need the dataset instead.
    pub fn evaluate_texts(&self, texts: &[String]) -> Result<Vec<u8>> {
        match self {
            IndicatorRule::Label { .. } => Err(Error::invalid(
                "label indicators are built from dataset labels, not texts",
            )),
            IndicatorRule::Phrases(rule) => {
                rule.validate()?;
                Ok(bits(texts, |t| rule.hits(t) >= rule.min_hits))
            }
            IndicatorRule::Words { words } => {
                let re = word_regex(words)?;
                Ok(bits(texts, |t| re.is_match(t)))
            }
            IndicatorRule::WordCount { words, min_count } => {
                if *min_count == 0 {
                    return Err(Error::invalid("min_count must be at least 1"));
                }
                let re = word_regex(words)?;
                Ok(bits(texts, |t| re.find_iter(t).take(*min_count).count() >= *min_count))
            }
            IndicatorRule::Length { threshold_chars } => {
                if *threshold_chars == 0 {
                    return Err(Error::invalid("length threshold must be positive"));
                }
                Ok(bits(texts, |t| normalized_length(t) < *threshold_chars))
            }
            IndicatorRule::SpecialCharRatio { threshold_ratio } => {
                if !(*threshold_ratio > 0.0 && *threshold_ratio < 1.0) {
                    return Err(Error::invalid("special character threshold must lie in (0, 1)"));
                }
                Ok(bits(texts, |t| special_char_ratio(t) > *threshold_ratio))
            }
            IndicatorRule::Lists { pattern, min_items } => {
                let re = Regex::new(pattern)
                    .map_err(|e| Error::invalid(format!("bad list pattern: {e}")))?;
                let k = (*min_items).max(1);
                Ok(bits(texts, |t| re.find_iter(t).take(k).count() >= k))
            }
        }
    }

    /// Evaluates any rule against a dataset (labels or texts as needed).
    pub fn evaluate(&self, d: &LabeledDataset) -> Result<Vec<u8>> {
        match self {
            IndicatorRule::Label { targets } => {
                for t in targets {
                    if d.class_index(t).is_none() {
                        return Err(Error::UnknownLabel(t.clone()));
                    }
                }
                Ok(d
                    .samples()
                    .iter()
                    .map(|s| u8::from(targets.contains(&s.label)))
                    .collect())
            }
            _ => {
                let texts: Vec<String> = d.texts().into_iter().map(str::to_string).collect();
                self.evaluate_texts(&texts)
            }
        }
    }

    pub fn default_name(&self) -> String {
        match self {
            IndicatorRule::Label { targets } => format!("I_label={}", targets.join("|")),
            IndicatorRule::Phrases(_) => "I_phrases".into(),
            IndicatorRule::Words { .. } => "I_word_appearance".into(),
            IndicatorRule::WordCount { min_count, .. } => format!("I_word_count>={min_count}"),
            IndicatorRule::Length { threshold_chars } => format!("I_length<{threshold_chars}"),
            IndicatorRule::SpecialCharRatio { .. } => "I_special_char_ratio".into(),
            IndicatorRule::Lists { .. } => "I_lists".into(),
        }
    }

    pub fn build(&self, d: &LabeledDataset) -> Result<IndicatorFeature> {
        Ok(IndicatorFeature {
            name: self.default_name(),
            values: self.evaluate(d)?,
            definition: self.clone(),
        })
    }

    fn build_texts(self, texts: &[String]) -> Result<IndicatorFeature> {
        Ok(IndicatorFeature {
            name: self.default_name(),
            values: self.evaluate_texts(texts)?,
            definition: self,
        })
    }
}

pub fn label_indicator(d: &LabeledDataset, targets: &[&str]) -> Result<IndicatorFeature> {
    IndicatorRule::Label {
        targets: targets.iter().map(|s| s.to_string()).collect(),
    }
    .build(d)
}

pub fn phrase_indicator(texts: &[String], rule: &PhraseRule) -> Result<IndicatorFeature> {
    IndicatorRule::Phrases(rule.clone()).build_texts(texts)
}

pub fn word_indicator(texts: &[String], words: &[&str]) -> Result<IndicatorFeature> {
    IndicatorRule::Words {
        words: words.iter().map(|s| s.to_string()).collect(),
    }
    .build_texts(texts)
}

pub fn count_indicator(texts: &[String], words: &[&str], min_count: usize) -> Result<IndicatorFeature> {
    IndicatorRule::WordCount {
        words: words.iter().map(|s| s.to_string()).collect(),
        min_count,
    }
    .build_texts(texts)
}

pub fn length_indicator(texts: &[String], threshold_chars: usize) -> Result<IndicatorFeature> {
    IndicatorRule::Length { threshold_chars }.build_texts(texts)
}

pub fn special_char_ratio_indicator(texts: &[String], threshold_ratio: f64) -> Result<IndicatorFeature> {
    IndicatorRule::SpecialCharRatio { threshold_ratio }.build_texts(texts)
}

pub fn list_indicator(texts: &[String]) -> Result<IndicatorFeature> {
    IndicatorRule::Lists {
        pattern: LIST_ITEM_PATTERN.to_string(),
        min_items: LIST_MIN_ITEMS,
    }
    .build_texts(texts)
}
