use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{summarize, weighted_kappa, wilcoxon, ConfusionMatrix, KappaResult, Scale, Summary, WilcoxonResult};
use crate::{Acuity, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TestKind {
    #[serde(rename = "HD")]
    Hd,
    #[serde(rename = "ST_far")]
    StFar,
    #[serde(rename = "ST_near")]
    StNear,
    #[serde(rename = "TNO")]
    Tno,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [TestKind::Hd, TestKind::StFar, TestKind::StNear, TestKind::Tno];

    pub fn scale(self) -> Scale {
        match self {
            TestKind::Hd | TestKind::StFar => Scale::Far,
            TestKind::StNear | TestKind::Tno => Scale::Near,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::Hd => "HD",
            TestKind::StFar => "ST_far",
            TestKind::StNear => "ST_near",
            TestKind::Tno => "TNO",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestKind::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidRecord(format!("unknown test {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub subject_id: String,
    pub test: TestKind,
    pub day: u8,
    pub value: Acuity,
}

impl MeasurementRecord {
    pub fn new(subject_id: impl Into<String>, test: TestKind, day: u8, value: Acuity) -> Self {
        Self { subject_id: subject_id.into(), test, day, value }
    }
}

/// Distribution of one test on one day. Quartiles cover numeric values only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub test: TestKind,
    pub day: u8,
    pub n_subjects: usize,
    pub n_outside_limits: usize,
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonKind {
    BetweenDays,
    BetweenInstruments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub kind: ComparisonKind,
    pub first: (TestKind, u8),
    pub second: (TestKind, u8),
    pub scale: Scale,
    /// Subjects measured on both sides.
    pub n_paired: usize,
    /// Subjects present on only one side.
    pub dropped_subjects: Vec<String>,
    /// Pairs left out of the signed-rank test because a side is OL.
    pub n_outside_limits_excluded: usize,
    /// Signed-rank test on `second - first` in arcsec.
    pub wilcoxon: Option<WilcoxonResult>,
    /// Weighted kappa on recoded categories, first side as rows.
    pub kappa: Option<KappaResult>,
    pub notes: Vec<String>,
}

impl Comparison {
    pub fn title(&self) -> String {
        match self.kind {
            ComparisonKind::BetweenDays => format!("{} day {} vs day {}", self.first.0, self.first.1, self.second.1),
            ComparisonKind::BetweenInstruments => {
                format!("{} vs {} (day {})", self.first.0, self.second.0, self.first.1)
            }
        }
    }
}

/// Percentage of subjects whose recoded value is at or below each category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeLevels {
    pub test: TestKind,
    pub day: u8,
    pub scale: Scale,
    pub n_subjects: usize,
    /// Entry `k` is for category `k + 1`.
    pub percent_at_or_below: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n_records: usize,
    pub n_subjects: usize,
    pub groups: Vec<GroupSummary>,
    pub comparisons: Vec<Comparison>,
    pub cumulative: Vec<CumulativeLevels>,
    pub warnings: Vec<String>,
}

type Group = BTreeMap<String, Acuity>;

pub fn analyze(records: &[MeasurementRecord]) -> Result<AnalysisReport> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut groups: BTreeMap<(TestKind, u8), Group> = BTreeMap::new();
    let mut subjects = BTreeSet::new();
    for r in records {
        validate(r)?;
        let group = groups.entry((r.test, r.day)).or_default();
        if group.insert(r.subject_id.clone(), r.value).is_some() {
            return Err(Error::InvalidRecord(format!(
                "duplicate measurement for subject {} on {} day {}",
                r.subject_id, r.test, r.day
            )));
        }
        subjects.insert(r.subject_id.as_str());
    }

    let summaries = groups
        .iter()
        .map(|(&(test, day), g)| {
            let numeric: Vec<f64> = g.values().filter_map(|v| v.arcsec()).collect();
            GroupSummary {
                test,
                day,
                n_subjects: g.len(),
                n_outside_limits: g.len() - numeric.len(),
                summary: summarize(&numeric),
            }
        })
        .collect();

    let mut pairings = Vec::new();
    for test in TestKind::ALL {
        pairings.push((ComparisonKind::BetweenDays, (test, 1), (test, 2)));
    }
    pairings.push((ComparisonKind::BetweenInstruments, (TestKind::StNear, 1), (TestKind::Tno, 1)));
    pairings.push((ComparisonKind::BetweenInstruments, (TestKind::StFar, 1), (TestKind::Hd, 1)));

    let mut warnings = Vec::new();
    let mut comparisons = Vec::new();
    for (kind, first, second) in pairings {
        let (Some(a), Some(b)) = (groups.get(&first), groups.get(&second)) else {
            continue;
        };
        let c = compare(kind, first, second, a, b)?;
        if !c.dropped_subjects.is_empty() {
            warnings.push(format!("{}: dropped unpaired subjects {}", c.title(), c.dropped_subjects.join(", ")));
        }
        warnings.extend(c.notes.iter().map(|n| format!("{}: {}", c.title(), n)));
        comparisons.push(c);
    }

    let cumulative = groups
        .iter()
        .map(|(&(test, day), g)| cumulative_levels(test, day, g))
        .collect::<Result<_>>()?;

    Ok(AnalysisReport {
        n_records: records.len(),
        n_subjects: subjects.len(),
        groups: summaries,
        comparisons,
        cumulative,
        warnings,
    })
}

fn validate(r: &MeasurementRecord) -> Result<()> {
    if r.subject_id.trim().is_empty() {
        return Err(Error::InvalidRecord("empty subject id".into()));
    }
    if !(1..=2).contains(&r.day) {
        return Err(Error::InvalidRecord(format!("day must be 1 or 2, got {}", r.day)));
    }
    if let Acuity::Arcsec(v) = r.value {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidRecord(format!("subject {}: invalid value {v}", r.subject_id)));
        }
    }
    r.test.scale().recode(r.value).map_err(|e| {
        Error::InvalidRecord(format!("subject {} {} day {}: {e}", r.subject_id, r.test, r.day))
    })?;
    Ok(())
}

fn compare(
    kind: ComparisonKind,
    first: (TestKind, u8),
    second: (TestKind, u8),
    a: &Group,
    b: &Group,
) -> Result<Comparison> {
    // Instruments on different scales are compared on the coarser one.
    let scale = if first.0.scale() == second.0.scale() { first.0.scale() } else { Scale::Near };
    let mut dropped: Vec<String> = a.keys().filter(|k| !b.contains_key(*k)).cloned().collect();
    dropped.extend(b.keys().filter(|k| !a.contains_key(*k)).cloned());
    dropped.sort();

    let paired: Vec<(Acuity, Acuity)> = a.iter().filter_map(|(id, &x)| b.get(id).map(|&y| (x, y))).collect();
    let numeric: Vec<(f64, f64)> = paired.iter().filter_map(|(x, y)| Some((x.arcsec()?, y.arcsec()?))).collect();

    let mut notes = Vec::new();
    let wilcoxon = if numeric.is_empty() {
        notes.push("no numeric pairs for the signed-rank test".to_string());
        None
    } else {
        wilcoxon(&numeric).map_err(|e| notes.push(format!("signed-rank test: {e}"))).ok()
    };

    let kappa = if paired.is_empty() {
        notes.push("no paired subjects for kappa".to_string());
        None
    } else {
        let mut rows = Vec::with_capacity(paired.len());
        let mut cols = Vec::with_capacity(paired.len());
        for &(x, y) in &paired {
            rows.push(scale.recode(x)?);
            cols.push(scale.recode(y)?);
        }
        let m = ConfusionMatrix::from_ratings(&rows, &cols, scale.categories())?;
        weighted_kappa(&m, scale.weights()).map_err(|e| notes.push(format!("kappa: {e}"))).ok()
    };

    Ok(Comparison {
        kind,
        first,
        second,
        scale,
        n_paired: paired.len(),
        dropped_subjects: dropped,
        n_outside_limits_excluded: paired.len() - numeric.len(),
        wilcoxon,
        kappa,
        notes,
    })
}

fn cumulative_levels(test: TestKind, day: u8, g: &Group) -> Result<CumulativeLevels> {
    let scale = test.scale();
    let mut counts = alloc::vec![0usize; scale.categories()];
    for &v in g.values() {
        counts[scale.recode(v)? - 1] += 1;
    }
    let n = g.len();
    let mut running = 0;
    let percent_at_or_below = counts
        .iter()
        .map(|&c| {
            running += c;
            100.0 * running as f64 / n as f64
        })
        .collect();
    Ok(CumulativeLevels { test, day, scale, n_subjects: n, percent_at_or_below })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(id: &str, test: TestKind, day: u8, v: Option<f64>) -> MeasurementRecord {
        MeasurementRecord::new(id, test, day, v.map_or(Acuity::OutsideLimits, Acuity::Arcsec))
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(analyze(&[]), Err(Error::EmptyDataset));
    }

    #[test]
    fn bad_records() {
        assert!(analyze(&[rec("a", TestKind::Hd, 3, Some(5.0))]).is_err());
        assert!(analyze(&[rec("a", TestKind::Tno, 1, Some(500.0))]).is_err());
        assert!(analyze(&[rec("a", TestKind::Hd, 1, Some(-2.0))]).is_err());
        let dup = [rec("a", TestKind::Hd, 1, Some(5.0)), rec("a", TestKind::Hd, 1, Some(6.0))];
        assert!(analyze(&dup).is_err());
    }

    #[test]
    fn duplicated_days_agree_perfectly() {
        let values = [(15.0, 7.0), (60.0, 20.0), (120.0, 33.0), (240.0, 46.0), (480.0, 60.0)];
        let mut records = vec![];
        for (i, &(near, far)) in values.iter().enumerate() {
            let id = format!("s{i}");
            for day in [1, 2] {
                records.push(rec(&id, TestKind::Tno, day, Some(near)));
                records.push(rec(&id, TestKind::StNear, day, Some(near)));
                records.push(rec(&id, TestKind::StFar, day, Some(far)));
                records.push(rec(&id, TestKind::Hd, day, if i == 4 { None } else { Some(far) }));
            }
        }
        let report = analyze(&records).unwrap();
        let between_days: Vec<_> =
            report.comparisons.iter().filter(|c| c.kind == ComparisonKind::BetweenDays).collect();
        assert_eq!(between_days.len(), 4);
        for c in between_days {
            assert!((c.kappa.unwrap().kappa - 1.0).abs() < 1e-12, "{}", c.title());
            assert!(c.wilcoxon.is_none());
        }
        let hd = report.groups.iter().find(|g| g.test == TestKind::Hd && g.day == 1).unwrap();
        assert_eq!(hd.n_outside_limits, 1);
        assert_eq!(hd.summary.unwrap().n, 4);
    }

    #[test]
    fn unpaired_subjects_are_dropped() {
        let records = [
            rec("a", TestKind::Hd, 1, Some(5.0)),
            rec("a", TestKind::Hd, 2, Some(8.0)),
            rec("b", TestKind::Hd, 1, Some(20.0)),
            rec("c", TestKind::Hd, 2, Some(30.0)),
        ];
        let report = analyze(&records).unwrap();
        let c = &report.comparisons[0];
        assert_eq!(c.n_paired, 1);
        assert_eq!(c.dropped_subjects, vec!["b".to_string(), "c".to_string()]);
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn cumulative_reaches_hundred() {
        let records = [
            rec("a", TestKind::StNear, 1, Some(40.0)),
            rec("b", TestKind::StNear, 1, Some(119.0)),
            rec("c", TestKind::StNear, 1, None),
            rec("d", TestKind::StNear, 1, Some(60.0)),
        ];
        let report = analyze(&records).unwrap();
        let cum = &report.cumulative[0];
        assert_eq!(cum.percent_at_or_below, vec![50.0, 75.0, 75.0, 75.0, 100.0]);
    }
}
