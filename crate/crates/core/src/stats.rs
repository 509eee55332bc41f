//! Statistical kernel shared by the norm, affect and evaluation modules.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("degenerate distribution: sigma must be positive, got {0}")]
    DegenerateDistribution(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartileNorm {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub n_sessions: usize,
}

/// Sample quantile with linear interpolation between order statistics
/// (position `(n - 1) * q` on the sorted values, the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartile_norm(values: &[f64]) -> Result<QuartileNorm, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(QuartileNorm {
        median: quantile_sorted(&sorted, 0.5),
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
        n_sessions: values.len(),
    })
}

/// Upper tail of the standard normal, `1 - Phi(z)`, computed as
/// `erfc(z / sqrt 2) / 2` so the far tail keeps full relative precision.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn normal_cdf(z: f64) -> f64 {
    normal_sf(-z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTestResult {
    pub z: f64,
    /// Right-tail probability.
    pub p: f64,
    pub n: usize,
    pub mu: f64,
    pub sigma: f64,
}

/// Right-tailed one-sample Z-test of a sample mean against `N(mu, sigma)`.
pub fn z_right(sample_mean: f64, mu: f64, sigma: f64, n: usize) -> Result<ZTestResult, StatsError> {
    if n == 0 {
        return Err(StatsError::EmptyInput);
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(StatsError::DegenerateDistribution(sigma));
    }
    let z = (sample_mean - mu) / (sigma / (n as f64).sqrt());
    Ok(ZTestResult {
        z,
        p: normal_sf(z),
        n,
        mu,
        sigma,
    })
}

pub fn bonferroni(p: f64, m: usize) -> Result<f64, StatsError> {
    if m == 0 {
        return Err(StatsError::InvalidArgument("number of tests must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::InvalidArgument(format!("p-value {p} outside [0, 1]")));
    }
    Ok((m as f64 * p).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UTestMethod {
    Exact,
    NormalApproxTieCorrected,
}

/// Which p-value computation [`mann_whitney_u_with`] should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UTestMode {
    /// Exact enumeration when `n1 + n2 <= EXACT_MAX_TOTAL`, normal otherwise.
    #[default]
    Auto,
    Exact,
    Normal,
}

pub const EXACT_MAX_TOTAL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UTestResult {
    /// U statistic of the first sample: its rank sum minus `n1 (n1 + 1) / 2`.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub method: UTestMethod,
}

/// Midranks of the pooled sample, doubled so they are integers.
fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged, times two
        let doubled = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = doubled;
        }
        i = j + 1;
    }
    ranks
}

fn tie_sizes(pooled: &[f64]) -> Vec<usize> {
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        sizes.push(j - i + 1);
        i = j + 1;
    }
    sizes
}

/// Exact two-sided p-value: the share of all `C(n, n1)` relabelings whose
/// rank sum is at least as far from its mean as the observed one.
///
/// Counts subsets by doubled rank sum with a subset-sum table, so ties are
/// handled through midranks without enumerating labelings one by one.
fn exact_two_sided(ranks2: &[u64], n1: usize, observed2: u64) -> f64 {
    let total: u64 = ranks2.iter().sum();
    // counts[k][s]: number of k-subsets with doubled rank sum s
    let mut counts = vec![vec![0f64; total as usize + 1]; n1 + 1];
    counts[0][0] = 1.0;
    for &r in ranks2 {
        for k in (1..=n1).rev() {
            let (lower, upper) = counts.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r as usize..=total as usize).rev() {
                cur[s] += prev[s - r as usize];
            }
        }
    }
    let n = ranks2.len() as i64;
    // mean doubled rank sum is n1 (n + 1)
    let center = n1 as i64 * (n + 1);
    let observed_dev = (observed2 as i64 - center).abs();
    let (mut extreme, mut all) = (0.0, 0.0);
    for (s, &c) in counts[n1].iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        all += c;
        if (s as i64 - center).abs() >= observed_dev {
            extreme += c;
        }
    }
    (extreme / all).min(1.0)
}

fn normal_two_sided(u: f64, n1: usize, n2: usize, ties: &[usize]) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = n1f * n2f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let dev = (u - n1f * n2f / 2.0).abs();
    let z = (dev - 0.5).max(0.0) / var.sqrt();
    (2.0 * normal_sf(z)).min(1.0)
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<UTestResult, StatsError> {
    mann_whitney_u_with(a, b, UTestMode::Auto)
}

/// Two-sided Mann-Whitney U test with midranks for ties.
pub fn mann_whitney_u_with(a: &[f64], b: &[f64], mode: UTestMode) -> Result<UTestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(StatsError::InvalidArgument("NaN in sample".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks2 = doubled_midranks(&pooled);
    let rank_sum2: u64 = ranks2[..n1].iter().sum();
    let u = rank_sum2 as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;

    let exact = match mode {
        UTestMode::Exact => true,
        UTestMode::Normal => false,
        UTestMode::Auto => n1 + n2 <= EXACT_MAX_TOTAL,
    };
    let (p, method) = if exact {
        (exact_two_sided(&ranks2, n1, rank_sum2), UTestMethod::Exact)
    } else {
        (
            normal_two_sided(u, n1, n2, &tie_sizes(&pooled)),
            UTestMethod::NormalApproxTieCorrected,
        )
    };
    Ok(UTestResult { u, p, method })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); `None` when n = 1.
    pub std: Option<f64>,
    pub n: usize,
}

pub fn descriptives(values: &[f64]) -> Result<Descriptives, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = (n >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Ok(Descriptives { mean, std, n })
}
