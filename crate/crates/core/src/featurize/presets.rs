//! Rule parameterizations matching the published regression tables.

use super::rules::{IndicatorRule, PhraseRule};

/// Phrases flagged in synthetic StackExchange answers. A text fires when at
/// least two are present, with the appearance of a list counting as one.
pub const STACKEXCHANGE_PHRASES: [&str; 15] = [
    "alternatively",
    "example",
    "helps",
    "if you have any questions",
    "worth mentioning",
    "additionally",
    "note",
    "in this case",
    "apologize",
    "you are correct",
    "ultimately",
    "this shows",
    "in conclusion",
    ":\n",
    "AI language model",
];

pub const ARXIV_FIVE_WORDS: [&str; 8] = [
    "significant",
    "important",
    "contribution",
    "innovation",
    "valuable",
    "insight",
    "demonstrates",
    "understanding",
];

pub const ARXIV_ECON_WORDS: [&str; 6] = [
    "innovation",
    "valuable",
    "insight",
    "demonstrates",
    "understanding",
    "implication",
];

pub const FIRST_PERSON_WORDS: [&str; 2] = ["we", "our"];
pub const FIRST_PERSON_MIN_COUNT: usize = 5;
pub const SHORT_ABSTRACT_CHARS: usize = 1500;

fn owned(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

pub fn stackexchange_phrases() -> IndicatorRule {
    IndicatorRule::Phrases(PhraseRule {
        phrases: owned(&STACKEXCHANGE_PHRASES),
        min_hits: 2,
        case_sensitive: false,
        count_lists_as_hit: true,
    })
}

pub fn arxiv_five_words() -> IndicatorRule {
    IndicatorRule::Words {
        words: owned(&ARXIV_FIVE_WORDS),
    }
}

pub fn arxiv_econ_words() -> IndicatorRule {
    IndicatorRule::Words {
        words: owned(&ARXIV_ECON_WORDS),
    }
}

/// More than four occurrences of "we" or "our".
pub fn first_person_plural() -> IndicatorRule {
    IndicatorRule::WordCount {
        words: owned(&FIRST_PERSON_WORDS),
        min_count: FIRST_PERSON_MIN_COUNT,
    }
}

pub fn short_abstract() -> IndicatorRule {
    IndicatorRule::Length {
        threshold_chars: SHORT_ABSTRACT_CHARS,
    }
}

/// Looks a preset up by the name used on the command line.
pub fn preset(name: &str) -> Option<IndicatorRule> {
    match name {
        "stackexchange-phrases" => Some(stackexchange_phrases()),
        "arxiv-five-words" => Some(arxiv_five_words()),
        "arxiv-econ-words" => Some(arxiv_econ_words()),
        "we-our" => Some(first_person_plural()),
        "short-abstract" => Some(short_abstract()),
        "lists" => Some(IndicatorRule::Lists {
            pattern: super::rules::LIST_ITEM_PATTERN.to_string(),
            min_items: super::rules::LIST_MIN_ITEMS,
        }),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 6] = [
    "stackexchange-phrases",
    "arxiv-five-words",
    "arxiv-econ-words",
    "we-our",
    "short-abstract",
    "lists",
];
