//! Rank tests, quartiles and correlation.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Largest `n·m` for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("sample {0} is empty")]
    EmptySample(char),
    #[error("non-finite value in sample")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    ExactEnumeration,
    NormalApproxTieCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    /// U statistic of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub n: usize,
    pub m: usize,
}

/// Midranks (1-based) of `values`, plus the sizes of tied groups.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Number of arrangements of `n` + `m` distinct values giving each U in
/// `0..=n·m`: the coefficients of the Gaussian binomial `[n+m choose n]_q`.
pub fn u_distribution(n: usize, m: usize) -> Vec<BigUint> {
    let deg = n * m;
    let mut c: Vec<BigInt> = vec![BigInt::zero(); deg + 1];
    c[0] = BigInt::from(1);
    for i in 1..=n {
        // multiply by (1 - q^(m+i)), then divide by (1 - q^i)
        let a = m + i;
        for k in (a..=deg).rev() {
            let sub = c[k - a].clone();
            c[k] -= sub;
        }
        for k in i..=deg {
            let add = c[k - i].clone();
            c[k] += add;
        }
    }
    c.into_iter()
        .map(|x| {
            debug_assert!(x.sign() != Sign::Minus);
            x.to_biguint().expect("gaussian binomial coefficients are non-negative")
        })
        .collect()
}

/// `(extreme, total)` arrangement counts for a two-sided exact test:
/// arrangements with `|U − nm/2| ≥ |u − nm/2|`, over `C(n+m, n)`.
pub fn mann_whitney_exact_counts(n: usize, m: usize, u: u64) -> (BigUint, BigUint) {
    let dist = u_distribution(n, m);
    let nm = (n * m) as i64;
    let obs = (2 * u as i64 - nm).abs();
    let mut extreme = BigUint::zero();
    let mut total = BigUint::zero();
    for (k, c) in dist.iter().enumerate() {
        total += c;
        if (2 * k as i64 - nm).abs() >= obs {
            extreme += c;
        }
    }
    (extreme, total)
}

fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    match (a.to_f64(), b.to_f64()) {
        (Some(x), Some(y)) if y.is_finite() => x / y,
        _ => {
            let shift = b.bits().saturating_sub(1000);
            (a >> shift).to_f64().unwrap_or(0.0) / (b >> shift).to_f64().unwrap_or(1.0)
        }
    }
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<StatTestResult, StatsError> {
    if a.is_empty() {
        return Err(StatsError::EmptySample('a'));
    }
    if b.is_empty() {
        return Err(StatsError::EmptySample('b'));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (n, m) = (a.len(), b.len());
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&all);
    let ra: f64 = ranks[..n].iter().sum();
    let u = ra - (n * (n + 1)) as f64 / 2.0;
    if n * m <= EXACT_LIMIT && ties.is_empty() {
        let (ext, tot) = mann_whitney_exact_counts(n, m, u.round() as u64);
        return Ok(StatTestResult { u, p_value: ratio(&ext, &tot).min(1.0), method: TestMethod::ExactEnumeration, n, m });
    }
    let nn = (n + m) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (nn * (nn - 1.0));
    let var = (n * m) as f64 / 12.0 * ((nn + 1.0) - tie_term);
    let mu = (n * m) as f64 / 2.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * (1.0 - normal.cdf(z))).min(1.0)
    };
    Ok(StatTestResult { u, p_value: p, method: TestMethod::NormalApproxTieCorrected, n, m })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartileSummary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub max: f64,
}

/// Type-7 (linear interpolation) quantile of ascending `sorted` data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `None` for an empty sample.
pub fn quartiles(values: &[f64]) -> Option<QuartileSummary> {
    if values.is_empty() {
        return None;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Some(QuartileSummary {
        n: s.len(),
        min: s[0],
        q1: quantile_sorted(&s, 0.25),
        q2: quantile_sorted(&s, 0.5),
        q3: quantile_sorted(&s, 0.75),
        max: s[s.len() - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided t-test p-value; `None` when fewer than three pairs.
    pub p_value: Option<f64>,
    pub n: usize,
}

/// Pearson correlation. `None` if either series is constant or shorter than 2.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<Correlation> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x[..n].iter().zip(&y[..n]) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let p_value = (n >= 3).then(|| {
        let df = (n - 2) as f64;
        if 1.0 - r * r <= 0.0 {
            return 0.0;
        }
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    });
    Some(Correlation { r, p_value, n })
}

pub const CORRELATION_VARIABLES: [&str; 3] = ["views", "comments", "likes"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub variables: Vec<String>,
    /// `None` marks an undefined pair (constant column).
    pub cells: Vec<Vec<Option<Correlation>>>,
    pub n: usize,
}

/// Pairwise Pearson over per-video (views, comments, likes).
pub fn correlation_matrix(columns: [&[f64]; 3]) -> CorrelationMatrix {
    let cells = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    let c = pearson(columns[i], columns[j]);
                    if i == j {
                        c.map(|c| Correlation { r: 1.0, p_value: c.p_value.map(|_| 0.0), n: c.n })
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    CorrelationMatrix {
        variables: CORRELATION_VARIABLES.iter().map(|s| s.to_string()).collect(),
        cells,
        n: columns[0].len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mwu_small_examples() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!((r.p_value - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.method, TestMethod::ExactEnumeration);
        let r = mann_whitney_u(&[1.0, 3.0], &[2.0, 4.0]).unwrap();
        assert_eq!(r.u, 1.0);
        assert!((r.p_value - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn mwu_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.u, 8.0);
        assert!(r.p_value > 0.9);
        assert_eq!(r.method, TestMethod::NormalApproxTieCorrected);
    }

    #[test]
    fn mwu_empty_is_error() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn u_distribution_sums_to_binomial() {
        let d = u_distribution(3, 4);
        let total: BigUint = d.iter().sum();
        assert_eq!(total, BigUint::from(35u32));
        assert_eq!(d.first(), d.last());
    }

    #[test]
    fn quartile_examples() {
        let q = quartiles(&[1.0, 1.0, 2.0, 5.0]).unwrap();
        assert_eq!(q.q3, 2.75);
        let q = quartiles(&[1.0; 5]).unwrap();
        assert_eq!((q.q3, q.min, q.max), (1.0, 1.0, 1.0));
    }

    #[test]
    fn pearson_linear_and_constant() {
        let x = [1.0, 2.0, 3.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!((pearson(&x, &y).unwrap().r - 1.0).abs() < 1e-12);
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &z).unwrap().r + 1.0).abs() < 1e-12);
        assert!(pearson(&x, &[3.0; 4]).is_none());
        let m = correlation_matrix([&[5.0; 4], &x, &y]);
        assert!(m.cells[0][1].is_none() && m.cells[1][0].is_none() && m.cells[0][0].is_none());
        assert_eq!(m.cells[1][1].unwrap().r, 1.0);
    }

    proptest! {
        #[test]
        fn u_antisymmetry(a in proptest::collection::vec(-50i32..50, 1..15), b in proptest::collection::vec(-50i32..50, 1..15)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = mann_whitney_u(&a, &b).unwrap();
            let ba = mann_whitney_u(&b, &a).unwrap();
            prop_assert!((ab.u + ba.u - (a.len() * b.len()) as f64).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }

        #[test]
        fn pearson_affine_invariance(x in proptest::collection::vec(-100.0f64..100.0, 3..20), y in proptest::collection::vec(-100.0f64..100.0, 3..20), s in 0.1f64..10.0, t in -50.0f64..50.0) {
            let n = x.len().min(y.len());
            let (x, y) = (&x[..n], &y[..n]);
            if let Some(base) = pearson(x, y) {
                let xp: Vec<f64> = x.iter().map(|v| s * v + t).collect();
                let xn: Vec<f64> = x.iter().map(|v| -s * v + t).collect();
                prop_assert!((pearson(&xp, y).unwrap().r - base.r).abs() < 1e-9);
                prop_assert!((pearson(&xn, y).unwrap().r + base.r).abs() < 1e-9);
            }
        }
    }
}
