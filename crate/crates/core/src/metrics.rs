//! Automatic metrics: perplexity, emotion accuracy and corpus-level Dist-n.

use std::collections::HashSet;
use std::hash::Hash;

use crate::error::{Error, Result};

/// `exp(nll_sum / tokens)`.
pub fn perplexity(nll_sum: f64, tokens: usize) -> Result<f64> {
    if tokens == 0 {
        return Err(Error::Empty("perplexity over zero target tokens".into()));
    }
    Ok((nll_sum / tokens as f64).exp())
}

/// Perplexity from the probabilities assigned to each gold token.
pub fn perplexity_from_probs(gold_probs: &[f64]) -> Result<f64> {
    perplexity(gold_probs.iter().map(|p| -p.ln()).sum(), gold_probs.len())
}

/// Fraction of positions where `predicted` equals `gold`; 0 when empty.
pub fn emotion_accuracy(predicted: &[usize], gold: &[usize]) -> f64 {
    assert_eq!(predicted.len(), gold.len(), "prediction and gold counts differ");
    if gold.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    hits as f64 / gold.len() as f64
}

/// Distinct n-grams over total n-grams across every response.
/// Defined as 0 when there are no n-grams at all.
pub fn distinct_n<T: Eq + Hash>(responses: &[Vec<T>], n: usize) -> f64 {
    assert!(n >= 1, "n must be at least 1");
    let mut seen: HashSet<&[T]> = HashSet::new();
    let mut total = 0usize;
    for r in responses {
        for gram in r.windows(n) {
            seen.insert(gram);
            total += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        seen.len() as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(xs: &[&str]) -> Vec<Vec<String>> {
        xs.iter().map(|s| s.split_whitespace().map(String::from).collect()).collect()
    }

    #[test]
    fn distinct_hand_counts() {
        let c = split(&["a b a", "b c"]);
        assert_eq!(distinct_n(&c, 1), 0.6);
        assert_eq!(distinct_n(&c, 2), 1.0);
        assert_eq!(distinct_n(&split(&["a a a"]), 1), 1.0 / 3.0);
        assert_eq!(distinct_n(&split(&["a", "b"]), 2), 0.0);
        assert_eq!(distinct_n::<String>(&[], 1), 0.0);
    }

    #[test]
    fn perplexity_closed_forms() {
        assert!((perplexity_from_probs(&[0.1; 7]).unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(perplexity_from_probs(&[1.0, 1.0]).unwrap(), 1.0);
        assert!((perplexity_from_probs(&[0.5, 0.125]).unwrap() - 4.0).abs() < 1e-12);
        assert!(perplexity(0.0, 0).is_err());
    }

    #[test]
    fn accuracy_counts() {
        assert_eq!(emotion_accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]), 0.75);
        assert_eq!(emotion_accuracy(&[5], &[5]), 1.0);
    }
}
