//! Topic tagging: hashtag extraction from free text and Jaccard overlap
//! between tag sets.

use std::collections::BTreeSet;

/// Hashtags are a `#` followed by one or more Unicode alphanumerics or
/// underscores. Tags are lowercased and deduplicated; a bare `#` is nothing.
pub fn extract_hashtags(text: &str) -> BTreeSet<String> {
    let mut tags = BTreeSet::new();
    let mut chars = text.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if c != '#' {
            continue;
        }
        let mut tag = String::new();
        while let Some(&(_, n)) = chars.peek() {
            if n.is_alphanumeric() || n == '_' {
                tag.push(n);
                chars.next();
            } else {
                break;
            }
        }
        if !tag.is_empty() {
            tags.insert(tag.to_lowercase());
        }
    }
    tags
}

/// Jaccard overlap of two tag sets; two empty sets share nothing (0).
pub fn semantic_similarity(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    let intersection = a.intersection(b).count();
    intersection as f64 / union as f64
}
