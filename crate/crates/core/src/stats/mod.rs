//! Agreement and difference statistics for stereoacuity datasets.

mod analysis;
mod descriptive;
mod kappa;
mod recode;
mod wilcoxon;

pub use analysis::{
    analyze, AnalysisReport, Comparison, ComparisonKind, CumulativeLevels, GroupSummary, MeasurementRecord, TestKind,
};
pub use descriptive::{median, quantile_sorted, summarize, Summary};
pub use kappa::{landis_koch, weighted_kappa, AgreementLabel, ConfusionMatrix, KappaResult, WeightScheme};
pub use recode::{recode_far, recode_near, Scale, FAR_BAND_UPPER, NEAR_LISTED_LEVELS};
pub use wilcoxon::{
    signed_rank_exact, signed_rank_normal, wilcoxon, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N,
};
