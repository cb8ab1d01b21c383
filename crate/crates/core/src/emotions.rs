//! The 26 discrete emotion categories of the EMOTIC annotation scheme.

pub const NUM_CATEGORIES: usize = 26;

pub const CATEGORIES: [&str; NUM_CATEGORIES] = [
    "Affection",
    "Anger",
    "Annoyance",
    "Anticipation",
    "Aversion",
    "Confidence",
    "Disapproval",
    "Disconnection",
    "Disquietment",
    "Doubt/Confusion",
    "Embarrassment",
    "Engagement",
    "Esteem",
    "Excitement",
    "Fatigue",
    "Fear",
    "Happiness",
    "Pain",
    "Peace",
    "Pleasure",
    "Sadness",
    "Sensitivity",
    "Suffering",
    "Surprise",
    "Sympathy",
    "Yearning",
];

pub fn category_index(name: &str) -> Option<usize> {
    CATEGORIES
        .iter()
        .position(|c| c.eq_ignore_ascii_case(name))
}

/// Lowercase label used when a category name is looked up in the
/// embedding table.
pub fn category_key(index: usize) -> String {
    CATEGORIES[index].to_lowercase()
}

pub fn default_names() -> Vec<String> {
    CATEGORIES.iter().map(|s| s.to_string()).collect()
}
