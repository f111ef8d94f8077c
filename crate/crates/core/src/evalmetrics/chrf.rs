//! Character n-gram F-score.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Parameters for [`chrf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChrfConfig {
    /// Highest character n-gram order.
    pub n_max: usize,
    /// Recall weight of the F-score.
    pub beta: f64,
    /// Drop whitespace before extracting n-grams.
    pub remove_whitespace: bool,
    pub lowercase: bool,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        Self {
            n_max: 6,
            beta: 2.0,
            remove_whitespace: true,
            lowercase: true,
        }
    }
}

impl ChrfConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.n_max == 0 {
            return Err(MetricError::InvalidConfig(
                "n_max must be at least 1".into(),
            ));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(MetricError::InvalidConfig(format!(
                "beta must be a positive finite number, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Lowercases (optionally), collapses whitespace runs, and drops spaces when
/// `remove_whitespace` is set.
fn prepare(text: &str, cfg: &ChrfConfig) -> Vec<char> {
    let lowered;
    let text = if cfg.lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };
    let mut out = Vec::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() && !cfg.remove_whitespace {
            out.push(' ');
        }
        out.extend(word.chars());
    }
    out
}

fn ngram_counts(chars: &[char], n: usize) -> HashMap<&[char], u32> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for gram in chars.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// chrF score in `[0, 1]`.
///
/// Orders with no n-grams on either side are left out of the precision and
/// recall averages. An order present on only one side contributes zero to
/// both. An empty hypothesis scores 0; an empty reference is an error.
pub fn chrf(hypothesis: &str, reference: &str, cfg: &ChrfConfig) -> Result<f64, MetricError> {
    cfg.validate()?;
    let reference = prepare(reference, cfg);
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let hypothesis = prepare(hypothesis, cfg);
    if hypothesis.is_empty() {
        return Ok(0.0);
    }

    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=cfg.n_max {
        let hyp_total = (hypothesis.len() + 1).saturating_sub(n);
        let ref_total = (reference.len() + 1).saturating_sub(n);
        if hyp_total == 0 && ref_total == 0 {
            break;
        }
        orders += 1;
        if hyp_total == 0 || ref_total == 0 {
            continue;
        }
        let hyp_counts = ngram_counts(&hypothesis, n);
        let ref_counts = ngram_counts(&reference, n);
        let matched: u32 = hyp_counts
            .iter()
            .filter_map(|(gram, &h)| ref_counts.get(gram).map(|&r| h.min(r)))
            .sum();
        precision_sum += f64::from(matched) / hyp_total as f64;
        recall_sum += f64::from(matched) / ref_total as f64;
    }

    let precision = precision_sum / orders as f64;
    let recall = recall_sum / orders as f64;
    if precision * recall == 0.0 {
        return Ok(0.0);
    }
    let beta2 = cfg.beta * cfg.beta;
    Ok((1.0 + beta2) * precision * recall / (beta2 * precision + recall))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(h: &str, r: &str) -> f64 {
        chrf(h, r, &ChrfConfig::default()).unwrap()
    }

    #[test]
    fn identical_is_one() {
        assert_eq!(score("abc", "abc"), 1.0);
        assert_eq!(score("Blood Pressure", "blood pressure"), 1.0);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(score("xyz", "abc"), 0.0);
    }

    #[test]
    fn partial_prefix() {
        // P = 2/3, R = 7/18 over orders 1..3, orders 4..6 excluded.
        let p: f64 = 2.0 / 3.0;
        let r: f64 = 7.0 / 18.0;
        let expected = 5.0 * p * r / (4.0 * p + r);
        assert!((score("ab", "abc") - expected).abs() < 1e-12);
        assert!((score("ab", "abc") - 0.4242).abs() < 1e-4);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(score("", "abc"), 0.0);
        assert_eq!(score("   ", "abc"), 0.0);
        assert_eq!(
            chrf("abc", " \t ", &ChrfConfig::default()),
            Err(MetricError::EmptyReference)
        );
    }

    #[test]
    fn whitespace_kept_when_configured() {
        let cfg = ChrfConfig {
            remove_whitespace: false,
            ..ChrfConfig::default()
        };
        // "a b" vs "ab": the space-bearing bigrams no longer match.
        let kept = chrf("a b", "ab", &cfg).unwrap();
        let removed = chrf("a b", "ab", &ChrfConfig::default()).unwrap();
        assert_eq!(removed, 1.0);
        assert!(kept < 1.0);
    }

    #[test]
    fn beta_three_is_reachable() {
        let cfg = ChrfConfig {
            beta: 3.0,
            ..ChrfConfig::default()
        };
        let p: f64 = 2.0 / 3.0;
        let r: f64 = 7.0 / 18.0;
        let expected = 10.0 * p * r / (9.0 * p + r);
        assert!((chrf("ab", "abc", &cfg).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = ChrfConfig {
            beta: 0.0,
            ..ChrfConfig::default()
        };
        assert!(matches!(
            chrf("a", "a", &cfg),
            Err(MetricError::InvalidConfig(_))
        ));
        let cfg = ChrfConfig {
            n_max: 0,
            ..ChrfConfig::default()
        };
        assert!(matches!(
            chrf("a", "a", &cfg),
            Err(MetricError::InvalidConfig(_))
        ));
    }
}
