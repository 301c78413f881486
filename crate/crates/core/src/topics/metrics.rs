//! Cluster quality and topic coherence measures.

use super::hdbscan::euclidean;
use std::collections::{BTreeMap, HashMap};

fn groups(labels: &[i32]) -> BTreeMap<i32, Vec<usize>> {
    let mut g: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate().filter(|(_, l)| **l >= 0) {
        g.entry(l).or_default().push(i);
    }
    g
}

/// Mean silhouette over non-noise points. `None` with fewer than two clusters.
/// Points in singleton clusters contribute 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[i32]) -> Option<f64> {
    let g = groups(labels);
    if g.len() < 2 {
        return None;
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (&own, members) in &g {
        for &i in members {
            count += 1;
            if members.len() == 1 {
                continue;
            }
            let mean_to = |set: &[usize]| {
                set.iter().filter(|&&j| j != i).map(|&j| euclidean(&points[i], &points[j])).sum::<f64>()
                    / (set.len() - usize::from(set.contains(&i))) as f64
            };
            let a = mean_to(members);
            let b = g.iter().filter(|(l, _)| **l != own).map(|(_, s)| mean_to(s)).fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            total += if m > 0.0 { (b - a) / m } else { 0.0 };
        }
    }
    Some(total / count as f64)
}

fn centroid(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; points[members[0]].len()];
    for &i in members {
        for (s, x) in c.iter_mut().zip(&points[i]) {
            *s += x;
        }
    }
    c.iter_mut().for_each(|s| *s /= members.len() as f64);
    c
}

/// Davies-Bouldin index over non-noise points, with dispersion taken as the
/// mean distance to the centroid. `None` with fewer than two clusters.
pub fn davies_bouldin(points: &[Vec<f64>], labels: &[i32]) -> Option<f64> {
    let g = groups(labels);
    if g.len() < 2 {
        return None;
    }
    let cents: Vec<Vec<f64>> = g.values().map(|m| centroid(points, m)).collect();
    let disp: Vec<f64> = g
        .values()
        .zip(&cents)
        .map(|(m, c)| m.iter().map(|&i| euclidean(&points[i], c)).sum::<f64>() / m.len() as f64)
        .collect();
    let k = cents.len();
    let mut sum = 0.0;
    for i in 0..k {
        let worst = (0..k)
            .filter(|&j| j != i)
            .map(|j| {
                let d = euclidean(&cents[i], &cents[j]);
                let s = disp[i] + disp[j];
                if d > 0.0 {
                    s / d
                } else if s == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        sum += worst;
    }
    Some(sum / k as f64)
}

/// Distinct tokens of the ranked phrases, in rank order, at most `limit`.
pub fn keyword_tokens<S: AsRef<str>>(phrases: &[S], limit: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for p in phrases {
        for t in p.as_ref().split_whitespace() {
            if out.len() < limit && !out.iter().any(|o| o == t) {
                out.push(t.to_string());
            }
        }
    }
    out
}

/// Mean NPMI over all pairs of `words`, counting co-occurrence in sliding
/// windows of `window` tokens. Documents shorter than the window count as one
/// window. Pairs that never co-occur score −1; returns 0 with fewer than two
/// words or no windows.
pub fn npmi_coherence(words: &[String], docs: &[Vec<String>], window: usize) -> f64 {
    let k = words.len();
    if k < 2 {
        return 0.0;
    }
    let index: HashMap<&str, usize> = words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let mut single = vec![0u64; k];
    let mut pair = vec![vec![0u64; k]; k];
    let mut windows = 0u64;
    let mut present = vec![0usize; k];
    for doc in docs {
        if doc.is_empty() {
            continue;
        }
        let ids: Vec<Option<usize>> = doc.iter().map(|t| index.get(t.as_str()).copied()).collect();
        let w = window.min(ids.len());
        present.iter_mut().for_each(|p| *p = 0);
        for id in ids[..w].iter().flatten() {
            present[*id] += 1;
        }
        for start in 0..=(ids.len() - w) {
            if start > 0 {
                if let Some(id) = ids[start - 1] {
                    present[id] -= 1;
                }
                if let Some(id) = ids[start + w - 1] {
                    present[id] += 1;
                }
            }
            windows += 1;
            let on: Vec<usize> = (0..k).filter(|&i| present[i] > 0).collect();
            for (x, &i) in on.iter().enumerate() {
                single[i] += 1;
                for &j in &on[x + 1..] {
                    pair[i][j] += 1;
                }
            }
        }
    }
    if windows == 0 {
        return 0.0;
    }
    let n = windows as f64;
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..k {
        for j in i + 1..k {
            pairs += 1;
            let p12 = pair[i][j] as f64 / n;
            total += if p12 == 0.0 {
                -1.0
            } else if p12 >= 1.0 {
                1.0
            } else {
                let p1 = single[i] as f64 / n;
                let p2 = single[j] as f64 / n;
                (p12 / (p1 * p2)).ln() / -p12.ln()
            };
        }
    }
    total / pairs as f64
}

pub fn sparse_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(t, x)| b.get(t).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Pairwise cosine between cluster keyword weight vectors.
pub fn inter_topic_similarity(scores: &[BTreeMap<String, f64>]) -> Vec<Vec<f64>> {
    scores.iter().map(|a| scores.iter().map(|b| sparse_cosine(a, b)).collect()).collect()
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings. Noise (−1) is treated as an
/// ordinary label.
pub fn adjusted_rand_index(a: &[i32], b: &[i32]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let mut table: HashMap<(i32, i32), u64> = HashMap::new();
    let mut ra: HashMap<i32, u64> = HashMap::new();
    let mut rb: HashMap<i32, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0) += 1;
        *ra.entry(x).or_insert(0) += 1;
        *rb.entry(y).or_insert(0) += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = ra.values().map(|&c| choose2(c)).sum();
    let sb: f64 = rb.values().map(|&c| choose2(c)).sum();
    let total = choose2(a.len() as u64);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = (sa + sb) / 2.0;
    if max == expected {
        1.0
    } else {
        (index - expected) / (max - expected)
    }
}
