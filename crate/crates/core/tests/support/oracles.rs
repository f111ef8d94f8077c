//! Slow, direct reimplementations used as test oracles.

#![allow(dead_code)]

/// chrF by exhaustive n-gram pairing: every hypothesis n-gram is matched
/// against the first unused equal reference n-gram.
pub fn chrf_oracle(hyp: &str, reference: &str, n_max: usize, beta: f64) -> f64 {
    let prep = |s: &str| -> Vec<char> {
        s.to_lowercase()
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect()
    };
    let h = prep(hyp);
    let r = prep(reference);
    if h.is_empty() {
        return 0.0;
    }
    let mut p_sum = 0.0;
    let mut r_sum = 0.0;
    let mut orders = 0;
    for n in 1..=n_max {
        let hg: Vec<&[char]> = if h.len() >= n {
            (0..=h.len() - n).map(|i| &h[i..i + n]).collect()
        } else {
            vec![]
        };
        let rg: Vec<&[char]> = if r.len() >= n {
            (0..=r.len() - n).map(|i| &r[i..i + n]).collect()
        } else {
            vec![]
        };
        if hg.is_empty() && rg.is_empty() {
            continue;
        }
        orders += 1;
        if hg.is_empty() || rg.is_empty() {
            continue;
        }
        let mut used = vec![false; rg.len()];
        let mut matched = 0usize;
        for g in &hg {
            if let Some(j) = (0..rg.len()).find(|&j| !used[j] && rg[j] == *g) {
                used[j] = true;
                matched += 1;
            }
        }
        p_sum += matched as f64 / hg.len() as f64;
        r_sum += matched as f64 / rg.len() as f64;
    }
    let p = p_sum / orders as f64;
    let rc = r_sum / orders as f64;
    if p == 0.0 || rc == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) * p * rc / (b2 * p + rc)
}

/// Enumerates every one-to-one alignment of equal tokens and returns the
/// largest match count with the fewest chunks for that count.
pub fn meteor_alignment_oracle(hyp: &[String], reference: &[String]) -> (usize, usize) {
    fn chunks(pairs: &[(usize, usize)]) -> usize {
        let mut c = 0;
        for (i, &(h, r)) in pairs.iter().enumerate() {
            if i == 0 || pairs[i - 1].0 + 1 != h || pairs[i - 1].1 + 1 != r {
                c += 1;
            }
        }
        c
    }
    fn walk(
        i: usize,
        hyp: &[String],
        reference: &[String],
        used: &mut Vec<bool>,
        pairs: &mut Vec<(usize, usize)>,
        best: &mut (usize, usize),
    ) {
        if i == hyp.len() {
            let m = pairs.len();
            let c = chunks(pairs);
            if m > best.0 || (m == best.0 && c < best.1) {
                *best = (m, c);
            }
            return;
        }
        walk(i + 1, hyp, reference, used, pairs, best);
        for j in 0..reference.len() {
            if !used[j] && reference[j] == hyp[i] {
                used[j] = true;
                pairs.push((i, j));
                walk(i + 1, hyp, reference, used, pairs, best);
                pairs.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (0, 0);
    walk(
        0,
        hyp,
        reference,
        &mut vec![false; reference.len()],
        &mut Vec::new(),
        &mut best,
    );
    best
}

/// METEOR from its parts: harmonic mean weighted 9:1 towards recall, times
/// one minus the fragmentation penalty.
pub fn meteor_from_counts(m: usize, chunks: usize, hyp_len: usize, ref_len: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / hyp_len as f64;
    let r = m as f64 / ref_len as f64;
    let f = 10.0 * p * r / (r + 9.0 * p);
    let frag = chunks as f64 / m as f64;
    f * (1.0 - 0.5 * frag * frag * frag)
}

/// Ranks every stored vector by dot product with the query (f64
/// accumulation), descending, ties by ascending ordinal.
pub fn brute_force_ranking(vectors: &[Vec<f32>], query: &[f32]) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut dot = 0.0f64;
            for d in 0..v.len() {
                dot += f64::from(v[d]) * f64::from(query[d]);
            }
            (i, dot.clamp(-1.0, 1.0))
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all
}

/// Textbook cosine similarity, norms recomputed.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| f64::from(*x) * f64::from(*y))
        .sum();
    let na: f64 = a.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Checks the chunking invariants for a body of `len` characters and
/// returns a description of the first violation.
pub fn check_chunk_spans(
    spans: &[(usize, usize)],
    len: usize,
    size: usize,
    overlap: usize,
) -> Result<(), String> {
    if len == 0 {
        return if spans.is_empty() {
            Ok(())
        } else {
            Err("chunks for empty body".into())
        };
    }
    if spans.first().map(|s| s.0) != Some(0) {
        return Err("first chunk does not start at 0".into());
    }
    if spans.last().map(|s| s.1) != Some(len) {
        return Err("last chunk does not end at the body end".into());
    }
    for (i, &(s, e)) in spans.iter().enumerate() {
        if s >= e || e - s > size {
            return Err(format!("chunk {i} has bad span [{s},{e})"));
        }
        if i + 1 < spans.len() {
            if e - s != size {
                return Err(format!("non-final chunk {i} is shorter than {size}"));
            }
            let next = spans[i + 1];
            if next.0 != s + size - overlap {
                return Err(format!(
                    "chunk {} starts at {} instead of {}",
                    i + 1,
                    next.0,
                    s + size - overlap
                ));
            }
        }
    }
    // No position is left uncovered and no chunk is redundant.
    let mut covered = 0;
    for &(s, e) in spans {
        if s > covered {
            return Err(format!("gap at {covered}"));
        }
        if e <= covered {
            return Err(format!("chunk [{s},{e}) adds nothing"));
        }
        covered = e;
    }
    Ok(())
}
