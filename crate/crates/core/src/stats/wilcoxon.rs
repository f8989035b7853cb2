use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest tie-free sample that [`wilcoxon`] evaluates exactly.
pub const EXACT_MAX_N: usize = 12;
/// Limit of the exact null distribution (subset counts fit in `u64`).
const EXACT_LIMIT: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs left after discarding zero differences.
    pub n_effective: usize,
    /// Sum of the ranks of positive differences.
    pub w_plus: f64,
    /// Continuity-corrected standard score of `w_plus`.
    pub z: f64,
    pub p_two_sided: f64,
    pub method: WilcoxonMethod,
}

/// Signed-rank test on `second - first` for each pair.
///
/// Zero differences are dropped and tied magnitudes share mid-ranks. Small
/// tie-free samples get the exact null distribution, everything else the
/// tie-corrected normal approximation.
pub fn wilcoxon(pairs: &[(f64, f64)]) -> Result<WilcoxonResult> {
    let diffs: Vec<f64> = pairs.iter().map(|&(a, b)| b - a).collect();
    let ranked = rank_nonzero(&diffs)?;
    if ranked.n <= EXACT_MAX_N && !ranked.has_ties {
        exact_from(&ranked)
    } else {
        Ok(normal_from(&ranked))
    }
}

/// Exact test on differences; fails when magnitudes tie.
pub fn signed_rank_exact(diffs: &[f64]) -> Result<WilcoxonResult> {
    exact_from(&rank_nonzero(diffs)?)
}

/// Normal approximation on differences, regardless of sample size.
pub fn signed_rank_normal(diffs: &[f64]) -> Result<WilcoxonResult> {
    Ok(normal_from(&rank_nonzero(diffs)?))
}

struct Ranked {
    n: usize,
    w_plus: f64,
    has_ties: bool,
    /// Sum of t^3 - t over tie groups.
    tie_term: f64,
}

fn rank_nonzero(diffs: &[f64]) -> Result<Ranked> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidRecord("differences must be finite".into()));
    }
    let mut nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::NoEffectivePairs);
    }
    nonzero.sort_by(|a, b| libm::fabs(*a).total_cmp(&libm::fabs(*b)));
    let n = nonzero.len();
    let (mut w_plus, mut tie_term, mut has_ties) = (0.0, 0.0, false);
    let mut i = 0;
    while i < n {
        let magnitude = libm::fabs(nonzero[i]);
        let mut j = i + 1;
        while j < n && libm::fabs(nonzero[j]) == magnitude {
            j += 1;
        }
        let t = (j - i) as f64;
        if j - i > 1 {
            has_ties = true;
            tie_term += t * t * t - t;
        }
        // Ranks i+1..=j share their mean.
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        w_plus += mid_rank * nonzero[i..j].iter().filter(|&&d| d > 0.0).count() as f64;
        i = j;
    }
    Ok(Ranked { n, w_plus, has_ties, tie_term })
}

fn moments(ranked: &Ranked) -> (f64, f64) {
    let n = ranked.n as f64;
    let mean = n * (n + 1.0) / 4.0;
    let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ranked.tie_term / 48.0;
    (mean, libm::sqrt(variance))
}

fn corrected_z(ranked: &Ranked) -> f64 {
    let (mean, sd) = moments(ranked);
    let deviation = ranked.w_plus - mean;
    let magnitude = (libm::fabs(deviation) - 0.5).max(0.0);
    if sd == 0.0 || magnitude == 0.0 {
        0.0
    } else {
        libm::copysign(magnitude / sd, deviation)
    }
}

fn normal_from(ranked: &Ranked) -> WilcoxonResult {
    let z = corrected_z(ranked);
    WilcoxonResult {
        n_effective: ranked.n,
        w_plus: ranked.w_plus,
        z,
        p_two_sided: libm::erfc(libm::fabs(z) / core::f64::consts::SQRT_2).min(1.0),
        method: WilcoxonMethod::NormalApprox,
    }
}

fn exact_from(ranked: &Ranked) -> Result<WilcoxonResult> {
    if ranked.has_ties {
        return Err(Error::InvalidRecord("exact signed-rank test needs distinct magnitudes".into()));
    }
    if ranked.n > EXACT_LIMIT {
        return Err(Error::InvalidRecord("sample too large for the exact signed-rank test".into()));
    }
    let n = ranked.n;
    let max_sum = n * (n + 1) / 2;
    // counts[s]: number of sign assignments whose positive ranks sum to s.
    let mut counts = vec![0u64; max_sum + 1];
    counts[0] = 1;
    for rank in 1..=n {
        for s in (rank..=max_sum).rev() {
            counts[s] += counts[s - rank];
        }
    }
    let w = ranked.w_plus as usize;
    let total = libm::ldexp(1.0, n as i32);
    let lower: u64 = counts[..=w].iter().sum();
    let upper: u64 = counts[w..].iter().sum();
    let p = (2.0 * lower.min(upper) as f64 / total).min(1.0);
    Ok(WilcoxonResult {
        n_effective: n,
        w_plus: ranked.w_plus,
        z: corrected_z(ranked),
        p_two_sided: p,
        method: WilcoxonMethod::Exact,
    })
}
