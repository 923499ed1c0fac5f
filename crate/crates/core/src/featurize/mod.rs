//! Interpretable 0/1 features computed from labels and raw text.

pub mod presets;
mod rules;

pub use rules::{
    count_indicator, has_list, label_indicator, length_indicator, list_indicator,
    normalized_length, phrase_indicator, special_char_ratio, special_char_ratio_indicator,
    word_indicator, IndicatorFeature, IndicatorRule, PhraseRule, LIST_ITEM_PATTERN,
    LIST_MIN_ITEMS,
};
