//! Exact-match METEOR.
//!
//! Unigrams are aligned one-to-one on exact (lowercased) token equality. Among
//! all maximum-cardinality alignments the one with the fewest chunks is
//! chosen, where a chunk is a maximal run of matches that are adjacent in
//! both the hypothesis and the reference.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Label used in reports for this variant (no stemming, no synonyms).
pub const METEOR_VARIANT: &str = "METEOR-exact";

/// Upper bound on complete alignments evaluated during chunk minimisation.
pub const ALIGNMENT_CAP: usize = 10_000;

/// Safety valve on search nodes; pruned branches can still be numerous.
const NODE_BUDGET: usize = 250_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeteorBreakdown {
    pub matches: usize,
    pub hypothesis_len: usize,
    pub reference_len: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_mean: f64,
    pub penalty: f64,
    pub score: f64,
}

/// Lowercase, split on Unicode whitespace, and detach every character that
/// is neither alphanumeric nor whitespace as a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.to_lowercase().split_whitespace() {
        let mut current = String::new();
        for ch in word.chars() {
            if ch.is_alphanumeric() {
                current.push(ch);
            } else {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// A one-to-one alignment, as `(hypothesis_pos, reference_pos)` pairs sorted
/// by hypothesis position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    pub pairs: Vec<(usize, usize)>,
    /// `false` when the search budget ran out and the result may not have
    /// the minimum chunk count.
    pub exhaustive: bool,
}

impl Alignment {
    pub fn chunks(&self) -> usize {
        count_chunks(&self.pairs)
    }
}

/// Chunks of an alignment given as pairs sorted by hypothesis position.
pub fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(h, r) in pairs {
        match prev {
            Some((ph, pr)) if ph + 1 == h && pr + 1 == r => {}
            _ => chunks += 1,
        }
        prev = Some((h, r));
    }
    chunks
}

struct Search {
    /// Reference positions holding the same token, per hypothesis position.
    candidates: Vec<Vec<usize>>,
    /// Token class of each hypothesis position.
    class: Vec<usize>,
    /// Remaining hypothesis occurrences per class that may stay unmatched.
    skips_left: Vec<usize>,
    used: Vec<bool>,
    assign: Vec<Option<usize>>,
    best: Option<(usize, Vec<Option<usize>>)>,
    leaves: usize,
    nodes: usize,
    aborted: bool,
}

impl Search {
    fn run(&mut self, h: usize, chunks: usize) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes > NODE_BUDGET {
            self.aborted = true;
            return;
        }
        if let Some((best, _)) = &self.best {
            if chunks >= *best {
                return;
            }
        }
        if h == self.assign.len() {
            self.leaves += 1;
            self.best = Some((chunks, self.assign.clone()));
            if self.leaves >= ALIGNMENT_CAP {
                self.aborted = true;
            }
            return;
        }

        let continuation = h.checked_sub(1).and_then(|p| self.assign[p]).map(|r| r + 1);
        // Continuing the current chunk first finds good bounds early.
        let mut order: Vec<usize> = Vec::with_capacity(self.candidates[h].len());
        if let Some(next) = continuation {
            if self.candidates[h].contains(&next) && !self.used[next] {
                order.push(next);
            }
        }
        order.extend(
            self.candidates[h]
                .iter()
                .copied()
                .filter(|&r| !self.used[r] && Some(r) != continuation),
        );

        for r in order {
            let extra = usize::from(continuation != Some(r));
            self.used[r] = true;
            self.assign[h] = Some(r);
            self.run(h + 1, chunks + extra);
            self.assign[h] = None;
            self.used[r] = false;
            if self.aborted {
                return;
            }
        }

        let class = self.class[h];
        if self.skips_left[class] > 0 {
            self.skips_left[class] -= 1;
            self.run(h + 1, chunks);
            self.skips_left[class] += 1;
        }
    }
}

fn to_pairs(assign: &[Option<usize>]) -> Vec<(usize, usize)> {
    assign
        .iter()
        .enumerate()
        .filter_map(|(h, r)| r.map(|r| (h, r)))
        .collect()
}

/// Leftmost-greedy maximum alignment: each hypothesis token takes the first
/// unused equal reference token.
pub fn greedy_alignment<S: AsRef<str>>(hypothesis: &[S], reference: &[S]) -> Vec<(usize, usize)> {
    let mut used = vec![false; reference.len()];
    let mut pairs = Vec::new();
    for (h, tok) in hypothesis.iter().enumerate() {
        if let Some(r) =
            (0..reference.len()).find(|&r| !used[r] && reference[r].as_ref() == tok.as_ref())
        {
            used[r] = true;
            pairs.push((h, r));
        }
    }
    pairs
}

/// Maximum-cardinality exact alignment with minimal chunk count.
pub fn align<S: AsRef<str>>(hypothesis: &[S], reference: &[S]) -> Alignment {
    let mut class_of: HashMap<&str, usize> = HashMap::new();
    for tok in hypothesis.iter().chain(reference) {
        let next = class_of.len();
        class_of.entry(tok.as_ref()).or_insert(next);
    }
    let classes = class_of.len();
    let mut ref_positions: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (r, tok) in reference.iter().enumerate() {
        ref_positions[class_of[tok.as_ref()]].push(r);
    }
    let mut hyp_count = vec![0usize; classes];
    let class: Vec<usize> = hypothesis
        .iter()
        .map(|tok| {
            let c = class_of[tok.as_ref()];
            hyp_count[c] += 1;
            c
        })
        .collect();
    let skips_left = (0..classes)
        .map(|c| hyp_count[c].saturating_sub(ref_positions[c].len()))
        .collect();

    let mut search = Search {
        candidates: class.iter().map(|&c| ref_positions[c].clone()).collect(),
        class,
        skips_left,
        used: vec![false; reference.len()],
        assign: vec![None; hypothesis.len()],
        best: None,
        leaves: 0,
        nodes: 0,
        aborted: false,
    };
    search.run(0, 0);

    let found = search.best.map(|(_, assign)| to_pairs(&assign));
    if !search.aborted {
        return Alignment {
            pairs: found.unwrap_or_default(),
            exhaustive: true,
        };
    }
    let greedy = greedy_alignment(hypothesis, reference);
    let pairs = match found {
        Some(found) if count_chunks(&found) < count_chunks(&greedy) => found,
        _ => greedy,
    };
    Alignment {
        pairs,
        exhaustive: false,
    }
}

/// Exact-match METEOR of `hypothesis` against `reference`.
pub fn meteor(hypothesis: &str, reference: &str) -> Result<MeteorBreakdown, MetricError> {
    let reference = tokenize(reference);
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let hypothesis = tokenize(hypothesis);
    let alignment = align(&hypothesis, &reference);
    Ok(breakdown(
        alignment.pairs.len(),
        hypothesis.len(),
        reference.len(),
        alignment.chunks(),
    ))
}

/// Assembles the score from alignment statistics.
pub fn breakdown(
    matches: usize,
    hypothesis_len: usize,
    reference_len: usize,
    chunks: usize,
) -> MeteorBreakdown {
    if matches == 0 {
        return MeteorBreakdown {
            matches,
            hypothesis_len,
            reference_len,
            chunks: 0,
            precision: 0.0,
            recall: 0.0,
            f_mean: 0.0,
            penalty: 0.0,
            score: 0.0,
        };
    }
    let m = matches as f64;
    let precision = m / hypothesis_len as f64;
    let recall = m / reference_len as f64;
    let f_mean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    MeteorBreakdown {
        matches,
        hypothesis_len,
        reference_len,
        chunks,
        precision,
        recall,
        f_mean,
        penalty,
        score: f_mean * (1.0 - penalty),
    }
}
