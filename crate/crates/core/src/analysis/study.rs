//! Paired CP/Normal study tables and the summary report.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use super::questionnaire::{score_ieq, score_ssq, ScoreError, SsqScores, SsqWeighting};
use super::stats::{mean, paired_t, shapiro_wilk, spearman, std_dev, wilcoxon_signed_rank, StatsError, TestKind, TestResult};
use crate::games::Condition;

/// Significance threshold for the normality gate; p must exceed it for
/// the t test.
pub const ALPHA: f64 = 0.05;

pub const IMMERSION: &str = "Immersion";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Sickness,
    Immersion,
    Performance,
}

impl MeasureKind {
    pub fn of(name: &str) -> MeasureKind {
        if SsqScores::NAMES.contains(&name) {
            MeasureKind::Sickness
        } else if name == IMMERSION {
            MeasureKind::Immersion
        } else {
            MeasureKind::Performance
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Instrument {
    Ssq,
    Ieq,
}

impl Instrument {
    pub fn parse(s: &str) -> Option<Instrument> {
        match s {
            "SSQ" | "ssq" => Some(Instrument::Ssq),
            "IEQ" | "ieq" => Some(Instrument::Ieq),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuestionnaireResponse {
    pub participant: String,
    pub condition: Condition,
    pub instrument: Instrument,
    pub ratings: Vec<u8>,
}

impl QuestionnaireResponse {
    /// Scored measures: the four SSQ sub-scores, or the immersion total.
    pub fn observations(&self, weighting: SsqWeighting) -> Result<Vec<Observation>, ScoreError> {
        let obs = |measure: &str, value: f64| Observation {
            participant: self.participant.clone(),
            condition: self.condition,
            measure: measure.to_string(),
            value,
        };
        Ok(match self.instrument {
            Instrument::Ssq => {
                let s = score_ssq(&self.ratings, weighting)?;
                SsqScores::NAMES.iter().zip(s.values()).map(|(m, v)| obs(m, v)).collect()
            }
            Instrument::Ieq => alloc::vec![obs(IMMERSION, score_ieq(&self.ratings)? as f64)],
        })
    }
}

/// One value of one measure for one participant under one condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub participant: String,
    pub condition: Condition,
    pub measure: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StudyError {
    Empty,
    Duplicate { participant: String, condition: Condition, measure: String },
    InvalidValue { participant: String, measure: String, value: f64 },
    /// Participants lacking some (condition, measure) cell.
    Incomplete { missing: Vec<(String, Condition, String)> },
}

impl fmt::Display for StudyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StudyError::Empty => write!(f, "study table is empty"),
            StudyError::Duplicate { participant, condition, measure } => write!(
                f,
                "participant {participant} has more than one {measure} value under {}",
                condition.label()
            ),
            StudyError::InvalidValue { participant, measure, value } => {
                write!(f, "participant {participant}: {measure} = {value} is not a non-negative number")
            }
            StudyError::Incomplete { missing } => {
                let mut participants: Vec<&str> = missing.iter().map(|m| m.0.as_str()).collect();
                participants.dedup();
                write!(f, "missing rows for participants {}:", participants.join(", "))?;
                for (p, c, m) in missing {
                    write!(f, " {p}/{}/{m}", c.label())?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for StudyError {}

/// Complete paired table: every participant has one value per measure
/// under each condition.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyTable {
    pub participants: Vec<String>,
    pub measures: Vec<String>,
    /// `values[measure][participant] = [cp, normal]`.
    values: Vec<Vec<[f64; 2]>>,
}

fn slot(c: Condition) -> usize {
    match c {
        Condition::Cp => 0,
        Condition::Normal => 1,
    }
}

impl StudyTable {
    pub fn from_observations(obs: &[Observation]) -> Result<StudyTable, StudyError> {
        if obs.is_empty() {
            return Err(StudyError::Empty);
        }
        let mut participants: Vec<String> = Vec::new();
        let mut measures: Vec<String> = Vec::new();
        let mut cells: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for o in obs {
            if !(o.value.is_finite() && o.value >= 0.0) {
                return Err(StudyError::InvalidValue {
                    participant: o.participant.clone(),
                    measure: o.measure.clone(),
                    value: o.value,
                });
            }
            let p = index_of(&mut participants, &o.participant);
            let m = index_of(&mut measures, &o.measure);
            if cells.insert((m, p, slot(o.condition)), o.value).is_some() {
                return Err(StudyError::Duplicate {
                    participant: o.participant.clone(),
                    condition: o.condition,
                    measure: o.measure.clone(),
                });
            }
        }
        // Report order: kind, then first appearance.
        let mut order: Vec<usize> = (0..measures.len()).collect();
        order.sort_by_key(|&m| (MeasureKind::of(&measures[m]), canonical_rank(&measures[m]), m));

        let mut missing = Vec::new();
        let mut values = Vec::with_capacity(measures.len());
        for &m in &order {
            let mut col = Vec::with_capacity(participants.len());
            for p in 0..participants.len() {
                let mut pair = [0.0; 2];
                for c in [Condition::Cp, Condition::Normal] {
                    match cells.get(&(m, p, slot(c))) {
                        Some(&v) => pair[slot(c)] = v,
                        None => missing.push((participants[p].clone(), c, measures[m].clone())),
                    }
                }
                col.push(pair);
            }
            values.push(col);
        }
        if !missing.is_empty() {
            missing.sort();
            return Err(StudyError::Incomplete { missing });
        }
        let measures = order.iter().map(|&m| measures[m].clone()).collect();
        Ok(StudyTable { participants, measures, values })
    }

    pub fn values(&self, measure: usize, condition: Condition) -> Vec<f64> {
        self.values[measure].iter().map(|pair| pair[slot(condition)]).collect()
    }

    pub fn measure_index(&self, name: &str) -> Option<usize> {
        self.measures.iter().position(|m| m == name)
    }
}

fn index_of(list: &mut Vec<String>, name: &str) -> usize {
    match list.iter().position(|n| n == name) {
        Some(i) => i,
        None => {
            list.push(name.to_string());
            list.len() - 1
        }
    }
}

/// SSQ sub-scores keep their conventional order; other measures sort by
/// appearance.
fn canonical_rank(name: &str) -> usize {
    SsqScores::NAMES.iter().position(|n| *n == name).unwrap_or(SsqScores::NAMES.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; absent for a single observation.
    pub sd: Option<f64>,
    pub median: f64,
}

impl Descriptives {
    pub fn of(xs: &[f64]) -> Descriptives {
        let mut sorted = xs.to_vec();
        Descriptives {
            n: xs.len(),
            mean: mean(xs).unwrap_or(f64::NAN),
            sd: std_dev(xs),
            median: crate::metrics::median(&mut sorted).unwrap_or(f64::NAN),
        }
    }
}

/// Which paired test the normality gate picks.
pub fn select_test(normality_p: Option<f64>) -> TestKind {
    match normality_p {
        Some(p) if p > ALPHA => TestKind::PairedT,
        _ => TestKind::Wilcoxon,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Comparison {
    Tested { result: TestResult },
    /// Every participant scored the same under both conditions.
    NoDifference { reason: String },
    Failed { test: TestKind, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub measure: String,
    pub kind: MeasureKind,
    pub cp: Descriptives,
    pub normal: Descriptives,
    /// Shapiro-Wilk on the CP - Normal differences.
    pub normality: Option<TestResult>,
    pub normality_note: Option<String>,
    pub comparison: Comparison,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub condition: Condition,
    pub measure: String,
    pub sickness: String,
    pub result: Option<TestResult>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub participants: usize,
    pub measures: Vec<MeasureReport>,
    pub correlations: Vec<Correlation>,
}

fn compare(cp: &[f64], normal: &[f64]) -> (Option<TestResult>, Option<String>, Comparison) {
    let diffs: Vec<f64> = cp.iter().zip(normal).map(|(a, b)| a - b).collect();
    if diffs.iter().all(|&d| d == 0.0) {
        let reason = StatsError::DegeneratePairing.to_string();
        return (None, Some(reason.clone()), Comparison::NoDifference { reason });
    }
    let (normality, note) = match shapiro_wilk(&diffs) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(format!("normality not testable ({e}); treated as non-normal"))),
    };
    let kind = select_test(normality.map(|r| r.p));
    let result = match kind {
        TestKind::PairedT => paired_t(cp, normal),
        _ => wilcoxon_signed_rank(cp, normal),
    };
    let comparison = match result {
        Ok(result) => Comparison::Tested { result },
        Err(e) => Comparison::Failed { test: kind, reason: e.to_string() },
    };
    (normality, note, comparison)
}

/// Descriptives and the gated paired test for every measure, plus Spearman
/// correlations of each performance and immersion measure with each
/// sickness sub-score within each condition.
pub fn analyze_study(table: &StudyTable) -> StudyReport {
    let mut measures = Vec::new();
    for (m, name) in table.measures.iter().enumerate() {
        let cp = table.values(m, Condition::Cp);
        let normal = table.values(m, Condition::Normal);
        let (normality, normality_note, comparison) = compare(&cp, &normal);
        measures.push(MeasureReport {
            measure: name.clone(),
            kind: MeasureKind::of(name),
            cp: Descriptives::of(&cp),
            normal: Descriptives::of(&normal),
            normality,
            normality_note,
            comparison,
        });
    }

    let sickness: Vec<usize> =
        (0..table.measures.len()).filter(|&m| MeasureKind::of(&table.measures[m]) == MeasureKind::Sickness).collect();
    let others: Vec<usize> =
        (0..table.measures.len()).filter(|&m| MeasureKind::of(&table.measures[m]) != MeasureKind::Sickness).collect();
    let mut correlations = Vec::new();
    for condition in [Condition::Cp, Condition::Normal] {
        for &m in &others {
            let x = table.values(m, condition);
            for &s in &sickness {
                let y = table.values(s, condition);
                let (result, note) = match spearman(&x, &y) {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                correlations.push(Correlation {
                    condition,
                    measure: table.measures[m].clone(),
                    sickness: table.measures[s].clone(),
                    result,
                    note,
                });
            }
        }
    }
    StudyReport { participants: table.participants.len(), measures, correlations }
}

/// Fixed-point with the leading zero dropped for magnitudes below one
/// (`-0.449` -> `-.449`).
pub fn apa(v: f64, digits: usize) -> String {
    let s = format!("{:.*}", digits, v);
    if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else {
        s
    }
}

pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "p<.001".to_string()
    } else {
        format!("p={}", apa(p, 3))
    }
}

pub fn format_test(r: &TestResult) -> String {
    match r.test {
        TestKind::PairedT => format!("t({})={}, {}", r.df.unwrap_or(0.0), apa(r.statistic, 3), format_p(r.p)),
        k => format!("{}={}, {}", k.symbol(), apa(r.statistic, 3), format_p(r.p)),
    }
}

impl StudyReport {
    /// Plain-text table: measure x condition descriptives with the test
    /// column, groups separated by blank rows, then the correlations.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<[String; 6]> = Vec::new();
        let header = ["Measure", "Condition", "M", "s.d.", "Mdn", "Test"].map(String::from);
        let mut last_kind = None;
        for m in &self.measures {
            if last_kind.is_some() && last_kind != Some(m.kind) {
                rows.push(Default::default());
            }
            last_kind = Some(m.kind);
            let test = match &m.comparison {
                Comparison::Tested { result } => format_test(result),
                Comparison::NoDifference { .. } => "no difference".to_string(),
                Comparison::Failed { reason, .. } => format!("n/a ({reason})"),
            };
            let sd = |d: &Descriptives| d.sd.map(|s| format!("{s:.2}")).unwrap_or_else(|| "-".to_string());
            rows.push([
                m.measure.clone(),
                "CP".to_string(),
                format!("{:.2}", m.cp.mean),
                sd(&m.cp),
                format!("{:.2}", m.cp.median),
                test,
            ]);
            rows.push([
                String::new(),
                "Normal".to_string(),
                format!("{:.2}", m.normal.mean),
                sd(&m.normal),
                format!("{:.2}", m.normal.median),
                String::new(),
            ]);
        }
        let mut widths = header.clone().map(|h| h.len());
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, r: &[String; 6]| {
            let mut s = String::new();
            for (i, (c, w)) in r.iter().zip(widths).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                // Numbers right-aligned, labels left-aligned.
                if (2..5).contains(&i) {
                    let _ = write!(s, "{c:>w$}");
                } else {
                    let _ = write!(s, "{c:<w$}");
                }
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(&mut out, &header);
        let rule: usize = widths.iter().sum::<usize>() + 10;
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        for r in &rows {
            line(&mut out, r);
        }

        if !self.correlations.is_empty() {
            let _ = writeln!(out, "\nSpearman correlations (n = {})", self.participants);
            for c in &self.correlations {
                let v = match (&c.result, &c.note) {
                    (Some(r), _) => format_test(r),
                    (None, Some(n)) => format!("n/a ({n})"),
                    (None, None) => "n/a".to_string(),
                };
                let _ = writeln!(out, "  {:<6}  {} ~ {}: {v}", c.condition.label(), c.measure, c.sickness);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn obs(p: &str, c: Condition, m: &str, v: f64) -> Observation {
        Observation { participant: p.to_string(), condition: c, measure: m.to_string(), value: v }
    }

    fn ssq(p: &str, c: Condition, ratings: [u8; 16]) -> Vec<Observation> {
        QuestionnaireResponse { participant: p.to_string(), condition: c, instrument: Instrument::Ssq, ratings: ratings.to_vec() }
            .observations(SsqWeighting::Raw)
            .unwrap()
    }

    #[test]
    fn zero_cp_ssq_gives_zero_rows() {
        let mut all = Vec::new();
        for i in 0..10 {
            let p = format!("p{i}");
            all.extend(ssq(&p, Condition::Cp, [0; 16]));
            let mut r = [0u8; 16];
            r[i % 16] = 1 + (i % 3) as u8;
            r[(i * 7) % 16] = 2;
            all.extend(ssq(&p, Condition::Normal, r));
        }
        let report = analyze_study(&StudyTable::from_observations(&all).unwrap());
        let names: Vec<&str> = report.measures.iter().map(|m| m.measure.as_str()).collect();
        assert_eq!(names, SsqScores::NAMES);
        for m in &report.measures {
            assert_eq!((m.cp.mean, m.cp.sd, m.cp.median), (0.0, Some(0.0), 0.0));
        }
        let dis = &report.measures[2];
        let table = report.to_table();
        let row = table.lines().find(|l| l.starts_with("Disorientation")).unwrap();
        let cells: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(&cells[1..5], ["CP", "0.00", "0.00", "0.00"]);
        assert!(dis.normal.mean > 0.0);
    }

    #[test]
    fn identical_conditions_report_no_difference() {
        let mut all = Vec::new();
        for i in 0..8 {
            let p = format!("p{i}");
            for c in [Condition::Cp, Condition::Normal] {
                all.push(obs(&p, c, "Time", 300.0 + i as f64));
                all.push(obs(&p, c, "Nausea", (i % 3) as f64));
            }
        }
        let report = analyze_study(&StudyTable::from_observations(&all).unwrap());
        for m in &report.measures {
            match &m.comparison {
                Comparison::NoDifference { reason } => assert!(reason.contains("degenerate pairing")),
                other => panic!("{other:?}"),
            }
        }
        assert!(report.to_table().contains("no difference"));
    }

    #[test]
    fn gate_picks_t_only_above_alpha() {
        assert_eq!(select_test(Some(0.05)), TestKind::Wilcoxon);
        assert_eq!(select_test(Some(0.0500001)), TestKind::PairedT);
        assert_eq!(select_test(Some(0.01)), TestKind::Wilcoxon);
        assert_eq!(select_test(None), TestKind::Wilcoxon);
    }

    #[test]
    fn planted_shift_uses_wilcoxon() {
        // Constant differences cannot be tested for normality, so the
        // signed-rank test runs.
        let mut all = Vec::new();
        for i in 0..18 {
            let p = format!("p{i:02}");
            let normal = 5.0 + (i * 5 % 11) as f64;
            all.push(obs(&p, Condition::Normal, "Nausea", normal));
            all.push(obs(&p, Condition::Cp, "Nausea", normal - 5.0));
        }
        let report = analyze_study(&StudyTable::from_observations(&all).unwrap());
        let m = &report.measures[0];
        assert!(m.normality.is_none() && m.normality_note.is_some());
        match &m.comparison {
            Comparison::Tested { result } => {
                assert_eq!(result.test, TestKind::Wilcoxon);
                assert!(result.statistic < 0.0 && result.p < 0.05);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn normal_differences_use_t() {
        let d = [0.3, -1.2, 0.8, 0.1, -0.4, 1.5, -0.9, 0.6, 0.0, -0.2, 1.1, -0.6];
        let mut all = Vec::new();
        for (i, di) in d.iter().enumerate() {
            let p = format!("p{i}");
            all.push(obs(&p, Condition::Normal, "Coins", 40.0));
            all.push(obs(&p, Condition::Cp, "Coins", 40.0 + di));
        }
        let report = analyze_study(&StudyTable::from_observations(&all).unwrap());
        let m = &report.measures[0];
        assert!(m.normality.unwrap().p > ALPHA);
        match &m.comparison {
            Comparison::Tested { result } => assert_eq!(result.test, TestKind::PairedT),
            other => panic!("{other:?}"),
        }
        assert!(report.to_table().contains("t(11)="));
    }

    #[test]
    fn missing_condition_lists_participants() {
        let all = vec![
            obs("a", Condition::Cp, "Time", 1.0),
            obs("a", Condition::Normal, "Time", 2.0),
            obs("b", Condition::Cp, "Time", 1.0),
            obs("c", Condition::Normal, "Time", 1.0),
        ];
        let err = StudyTable::from_observations(&all).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("b, c"), "{msg}");
        match err {
            StudyError::Incomplete { missing } => assert_eq!(missing.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_negatives() {
        let dup = vec![obs("a", Condition::Cp, "Time", 1.0), obs("a", Condition::Cp, "Time", 2.0)];
        assert!(matches!(StudyTable::from_observations(&dup), Err(StudyError::Duplicate { .. })));
        let neg = vec![obs("a", Condition::Cp, "Time", -1.0)];
        assert!(matches!(StudyTable::from_observations(&neg), Err(StudyError::InvalidValue { .. })));
        assert_eq!(StudyTable::from_observations(&[]), Err(StudyError::Empty));
    }

    #[test]
    fn correlations_pair_performance_with_sickness() {
        let mut all = Vec::new();
        for i in 0..6 {
            let p = format!("p{i}");
            for c in [Condition::Cp, Condition::Normal] {
                all.push(obs(&p, c, "Crashes", i as f64));
                all.push(obs(&p, c, "Nausea", (10 - i) as f64 + if c == Condition::Cp { 0.5 } else { 0.0 }));
                all.push(obs(&p, c, IMMERSION, 20.0 + (i * 3 % 5) as f64));
            }
        }
        let report = analyze_study(&StudyTable::from_observations(&all).unwrap());
        assert_eq!(report.correlations.len(), 4);
        let c = report
            .correlations
            .iter()
            .find(|c| c.condition == Condition::Normal && c.measure == "Crashes")
            .unwrap();
        assert_eq!(c.result.unwrap().statistic, -1.0);
    }

    #[test]
    fn formatting() {
        assert_eq!(apa(-0.449, 3), "-.449");
        assert_eq!(apa(0.0349, 3), ".035");
        assert_eq!(apa(-2.103, 3), "-2.103");
        assert_eq!(format_p(0.0004), "p<.001");
        let r = TestResult { test: TestKind::PairedT, statistic: -1.042, df: Some(17.0), p: 0.312, n: 18, exact: false };
        assert_eq!(format_test(&r), "t(17)=-1.042, p=.312");
        let r = TestResult { test: TestKind::Wilcoxon, statistic: -2.103, df: None, p: 0.035, n: 18, exact: false };
        assert_eq!(format_test(&r), "Z=-2.103, p=.035");
    }

    #[test]
    fn medians_match_sort_and_pick() {
        let xs = [5.0, 1.0, 9.0, 3.0];
        assert_eq!(Descriptives::of(&xs).median, 4.0);
        assert_eq!(Descriptives::of(&xs[..3]).median, 5.0);
    }
}
