//! Goodness-of-fit statistics and the reference distributions of the limit laws.

use std::collections::BTreeMap;

use rand::RngCore;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Discrete, NegativeBinomial};

use crate::special::{gamma_p, gamma_q};

/// Default minimum expected count per pooled chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Kolmogorov–Smirnov distance between the empirical law of `sample` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // ties jump together
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let f = cdf(sorted[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Outcome of a chi-square test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    fn from_statistic(statistic: f64, cells: usize) -> Self {
        let dof = cells.saturating_sub(1);
        let p_value = if dof == 0 { 1.0 } else { gamma_q(dof as f64 / 2.0, statistic / 2.0) };
        ChiSquare { statistic, dof, p_value }
    }
}

/// Groups cell indices so each group's weight is at least `min`; heavy cells
/// stay alone and light cells are merged in order.
fn pool(weights: &[f64], min: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut open_weight = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if w >= min {
            groups.push(vec![i]);
            continue;
        }
        open.push(i);
        open_weight += w;
        if open_weight >= min {
            groups.push(std::mem::take(&mut open));
            open_weight = 0.0;
        }
    }
    if !open.is_empty() {
        // leftovers join the lightest group, or stand alone if nothing else exists
        match groups.iter_mut().min_by(|a, b| {
            let wa: f64 = a.iter().map(|&i| weights[i]).sum();
            let wb: f64 = b.iter().map(|&i| weights[i]).sum();
            wa.total_cmp(&wb)
        }) {
            Some(g) => g.extend(open),
            None => groups.push(open),
        }
    }
    groups
}

/// Pearson goodness of fit of observed counts against exact cell probabilities.
///
/// Observations outside the support of `pmf`, and any probability mass the
/// pmf leaves unassigned, form one extra cell.
pub fn goodness_of_fit<K: Ord>(observed: &BTreeMap<K, u64>, pmf: &BTreeMap<K, f64>, min_expected: f64) -> ChiSquare {
    let total: u64 = observed.values().sum();
    let n = total as f64;
    let mut obs = Vec::with_capacity(pmf.len() + 1);
    let mut exp = Vec::with_capacity(pmf.len() + 1);
    for (k, &p) in pmf {
        obs.push(observed.get(k).copied().unwrap_or(0) as f64);
        exp.push(p * n);
    }
    let outside = observed.iter().filter(|(k, _)| !pmf.contains_key(k)).map(|(_, &c)| c).sum::<u64>() as f64;
    let residual = (1.0 - pmf.values().sum::<f64>()).max(0.0) * n;
    if outside > 0.0 || residual > 1e-9 * n {
        obs.push(outside);
        exp.push(residual);
    }
    let groups = pool(&exp, min_expected);
    // an observation the null law deems impossible rejects outright
    if obs.iter().zip(&exp).any(|(&o, &e)| o > 0.0 && e <= 0.0) {
        return ChiSquare { statistic: f64::INFINITY, dof: groups.len().saturating_sub(1), p_value: 0.0 };
    }
    let mut statistic = 0.0;
    for g in &groups {
        let o: f64 = g.iter().map(|&i| obs[i]).sum();
        let e: f64 = g.iter().map(|&i| exp[i]).sum();
        if e > 0.0 {
            statistic += (o - e).powi(2) / e;
        }
    }
    ChiSquare::from_statistic(statistic, groups.len())
}

/// Two-sample chi-square homogeneity test on histograms with a common key space.
pub fn two_sample_chi_square<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>, min_count: f64) -> ChiSquare {
    let mut keys: Vec<K> = a.keys().cloned().collect();
    keys.extend(b.keys().filter(|k| !a.contains_key(*k)).cloned());
    keys.sort();
    let ca: Vec<f64> = keys.iter().map(|k| a.get(k).copied().unwrap_or(0) as f64).collect();
    let cb: Vec<f64> = keys.iter().map(|k| b.get(k).copied().unwrap_or(0) as f64).collect();
    let (na, nb) = (ca.iter().sum::<f64>(), cb.iter().sum::<f64>());
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let combined: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| x + y).collect();
    let groups = pool(&combined, min_count);
    let mut statistic = 0.0;
    for g in &groups {
        let x: f64 = g.iter().map(|&i| ca[i]).sum();
        let y: f64 = g.iter().map(|&i| cb[i]).sum();
        if x + y > 0.0 {
            statistic += (ka * x - kb * y).powi(2) / (x + y);
        }
    }
    ChiSquare::from_statistic(statistic, groups.len())
}

/// Histogram of a sample.
pub fn histogram<K: Ord, I: IntoIterator<Item = K>>(values: I) -> BTreeMap<K, u64> {
    let mut h = BTreeMap::new();
    for v in values {
        *h.entry(v).or_insert(0) += 1;
    }
    h
}

/// Kendall's τ_b between paired samples.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mut concordant, mut discordant, mut tied_x, mut tied_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i].total_cmp(&x[j]) as i64;
            let dy = y[i].total_cmp(&y[j]) as i64;
            match (dx, dy) {
                (0, 0) => {}
                (0, _) => tied_x += 1,
                (_, 0) => tied_y += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let s = (concordant - discordant) as f64;
    let denom = (((concordant + discordant + tied_x) * (concordant + discordant + tied_y)) as f64).sqrt();
    if denom == 0.0 { 0.0 } else { s / denom }
}

/// One-sided permutation test for an increasing trend of `y` in `x`:
/// returns `(τ_b, P(τ_b of a permuted y ≥ observed τ_b))`.
pub fn kendall_trend_test<R: RngCore + ?Sized>(x: &[f64], y: &[f64], permutations: usize, rng: &mut R) -> (f64, f64) {
    let tau = kendall_tau(x, y);
    let mut shuffled = y.to_vec();
    let mut at_least = 0usize;
    for _ in 0..permutations {
        shuffled.shuffle(rng);
        if kendall_tau(x, &shuffled) >= tau - 1e-12 {
            at_least += 1;
        }
    }
    (tau, (at_least + 1) as f64 / (permutations + 1) as f64)
}

/// Quantile of a sorted sample by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Interpolated median.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Interquartile range with interpolated quartiles.
pub fn iqr(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)
}

/// Least-squares line `y = slope x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fréchet distribution function `exp(-x^{-α})`.
pub fn frechet_cdf(x: f64, alpha: f64) -> f64 {
    if x <= 0.0 { 0.0 } else { (-x.powf(-alpha)).exp() }
}

/// Gamma distribution function with unit scale.
pub fn gamma_cdf(x: f64, shape: f64) -> f64 {
    if x <= 0.0 { 0.0 } else { gamma_p(shape, x) }
}

/// Probability of `k` failures before the `r`-th success, success probability `p`.
pub fn negative_binomial_pmf(k: u64, r: u64, p: f64) -> f64 {
    if p >= 1.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    NegativeBinomial::new(r as f64, p).expect("valid negative binomial").pmf(k)
}

/// Geometric law `P(L = k) = q^k (1 - q)`.
pub fn geometric_pmf(k: u64, q: f64) -> f64 {
    q.powi(k as i32) * (1.0 - q)
}
