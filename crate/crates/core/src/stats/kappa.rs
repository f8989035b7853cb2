use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const Z_95: f64 = 1.96;
/// Labels within this distance of a band edge are flagged.
const BAND_EDGE_MARGIN: f64 = 0.01;

/// Square contingency table of two raters over the same ordered categories.
/// Rows are the first rater, columns the second.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    /// `counts` is row-major, `n * n` long.
    pub fn new(n: usize, counts: Vec<u64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMatrix("need at least two categories"));
        }
        if counts.len() != n * n {
            return Err(Error::InvalidMatrix("counts must hold n * n cells"));
        }
        Ok(Self { n, counts })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(n, vec![0; n * n])
    }

    /// Cross-tabulates paired 1-based category labels.
    pub fn from_ratings(first: &[usize], second: &[usize], n: usize) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::InvalidMatrix("rating lists differ in length"));
        }
        let mut m = Self::zeros(n)?;
        for (&a, &b) in first.iter().zip(second) {
            if !(1..=n).contains(&a) || !(1..=n).contains(&b) {
                return Err(Error::InvalidMatrix("category label out of range"));
            }
            m.counts[(a - 1) * n + (b - 1)] += 1;
        }
        Ok(m)
    }

    pub fn categories(&self) -> usize {
        self.n
    }

    /// 0-based cell.
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.n + col]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let counts = (0..n * n).map(|i| self.counts[(i % n) * n + i / n]).collect();
        Self { n, counts }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Linear,
    Quadratic,
}

impl WeightScheme {
    /// Agreement weight between 0-based categories of an `n`-category scale.
    pub fn weight(self, i: usize, j: usize, n: usize) -> f64 {
        let d = i.abs_diff(j) as f64 / (n - 1) as f64;
        match self {
            WeightScheme::Linear => 1.0 - d,
            WeightScheme::Quadratic => 1.0 - d * d,
        }
    }
}

/// Landis & Koch bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgreementLabel {
    Poor,
    Slight,
    Fair,
    Moderate,
    Substantial,
    #[serde(rename = "Almost Perfect")]
    AlmostPerfect,
}

impl fmt::Display for AgreementLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgreementLabel::Poor => "Poor",
            AgreementLabel::Slight => "Slight",
            AgreementLabel::Fair => "Fair",
            AgreementLabel::Moderate => "Moderate",
            AgreementLabel::Substantial => "Substantial",
            AgreementLabel::AlmostPerfect => "Almost Perfect",
        })
    }
}

const BAND_EDGES: [f64; 5] = [0.0, 0.20, 0.40, 0.60, 0.80];

/// Bands are published to two decimals, so kappa is rounded to two decimals
/// before banding.
pub fn landis_koch(kappa: f64) -> AgreementLabel {
    let kappa = libm::round(kappa * 100.0) / 100.0;
    if kappa < 0.0 {
        AgreementLabel::Poor
    } else if kappa <= 0.20 {
        AgreementLabel::Slight
    } else if kappa <= 0.40 {
        AgreementLabel::Fair
    } else if kappa <= 0.60 {
        AgreementLabel::Moderate
    } else if kappa <= 0.80 {
        AgreementLabel::Substantial
    } else {
        AgreementLabel::AlmostPerfect
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    pub se: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub label: AgreementLabel,
    /// Kappa lies within 0.01 of a Landis & Koch band edge.
    pub near_band_edge: bool,
    pub scheme: WeightScheme,
    pub n: u64,
}

/// Weighted Cohen's kappa with the Fleiss–Cohen–Everitt large-sample
/// standard error. The 95% interval is clipped to `[-1, 1]`.
pub fn weighted_kappa(m: &ConfusionMatrix, scheme: WeightScheme) -> Result<KappaResult> {
    let k = m.categories();
    let total = m.total();
    if total == 0 {
        return Err(Error::InvalidMatrix("matrix has no observations"));
    }
    let n = total as f64;
    let p = |i: usize, j: usize| m.get(i, j) as f64 / n;
    let rows: Vec<f64> = (0..k).map(|i| (0..k).map(|j| p(i, j)).sum()).collect();
    let cols: Vec<f64> = (0..k).map(|j| (0..k).map(|i| p(i, j)).sum()).collect();
    let w = |i: usize, j: usize| scheme.weight(i, j, k);

    let mut observed = 0.0;
    let mut expected = 0.0;
    for i in 0..k {
        for j in 0..k {
            observed += w(i, j) * p(i, j);
            expected += w(i, j) * rows[i] * cols[j];
        }
    }
    let denom = 1.0 - expected;
    if libm::fabs(denom) < 1e-15 {
        return Err(Error::DegenerateMarginals);
    }
    let kappa = (observed - expected) / denom;

    // Mean weight of row i against the column marginals, and vice versa.
    let row_mean: Vec<f64> = (0..k).map(|i| (0..k).map(|j| cols[j] * w(i, j)).sum()).collect();
    let col_mean: Vec<f64> = (0..k).map(|j| (0..k).map(|i| rows[i] * w(i, j)).sum()).collect();
    let mut acc = 0.0;
    for i in 0..k {
        for j in 0..k {
            let t = w(i, j) - (row_mean[i] + col_mean[j]) * (1.0 - kappa);
            acc += p(i, j) * t * t;
        }
    }
    let tail = kappa - expected * (1.0 - kappa);
    let variance = (acc - tail * tail) / (n * denom * denom);
    let se = libm::sqrt(variance.max(0.0));

    Ok(KappaResult {
        kappa,
        se,
        ci95_low: (kappa - Z_95 * se).max(-1.0),
        ci95_high: (kappa + Z_95 * se).min(1.0),
        label: landis_koch(kappa),
        near_band_edge: BAND_EDGES.iter().any(|&edge| libm::fabs(kappa - edge) < BAND_EDGE_MARGIN),
        scheme,
        n: total,
    })
}
