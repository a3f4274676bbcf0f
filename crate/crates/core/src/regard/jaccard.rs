use super::GeneratedSample;
use std::collections::BTreeSet;

/// Lowercased words with punctuation removed, split on whitespace.
pub fn word_set(text: &str) -> BTreeSet<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Word-set Jaccard similarity; 1.0 when both texts have no words.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let (a, b) = (word_set(a), word_set(b));
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Splits samples into `(kept, dropped)`; a sample is dropped when its
/// Jaccard score is at least `threshold`. Order is preserved on both sides.
pub fn filter_echoes(
    samples: Vec<GeneratedSample>,
    threshold: f64,
) -> (Vec<GeneratedSample>, Vec<GeneratedSample>) {
    samples.into_iter().partition(|s| s.jaccard < threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(jaccard("Alex is nonbinary and", "alex is NONBINARY and."), 1.0);
        assert_eq!(jaccard("one two", "three four"), 0.0);
        let j = jaccard("alex is genderfluid and", "alex is happy today");
        assert!((j - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(jaccard("", "  ... "), 1.0);
        assert_eq!(jaccard("word", ""), 0.0);
    }

    #[test]
    fn tokenization() {
        let w = word_set("Don't STOP, Jo-Ann!  Émile");
        let expected: BTreeSet<String> =
            ["dont", "stop", "joann", "émile"].iter().map(|s| s.to_string()).collect();
        assert_eq!(w, expected);
    }
}
